#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vgnmn/tensor.hpp"

namespace vgnmn {

/// Named trainable tensors, iterated in sorted name order.
class ParamStore {
 public:
  /// Registers a leaf tensor; it becomes gradient-tracked. Names must be unique.
  Tensor& add(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;
  std::vector<std::string> names() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  /// Independent copy with its own storage.
  ParamStore clone() const;

  /// Gradients of every parameter laid out in name order; parameters the
  /// backward pass did not reach contribute zeros.
  std::vector<double> flat_grad(const Gradients& grads) const;

  /// Concatenated parameter values in name order.
  std::vector<double> flat_values() const;

  bool operator==(const ParamStore& other) const;

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace vgnmn
