#include "vgnmn/param_store.hpp"

#include <algorithm>

namespace vgnmn {

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  return params_.emplace(name, std::move(value)).first->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw DataError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  for (const auto& [name, t] : params_)
    copy.add(name, Tensor(t.shape(), std::vector<double>(t.data().begin(), t.data().end())));
  return copy;
}

std::vector<double> ParamStore::flat_grad(const Gradients& grads) const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& [_, t] : params_) {
    if (const auto* g = grads.find(t))
      out.insert(out.end(), g->begin(), g->end());
    else
      out.insert(out.end(), t.numel(), 0.0);
  }
  return out;
}

std::vector<double> ParamStore::flat_values() const {
  std::vector<double> out;
  out.reserve(numel());
  for (const auto& [_, t] : params_) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, t] : params_) {
    if (name != it->first || t.shape() != it->second.shape()) return false;
    if (!std::equal(t.data().begin(), t.data().end(), it->second.data().begin())) return false;
    ++it;
  }
  return true;
}

}  // namespace vgnmn
