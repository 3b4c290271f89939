#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vgnmn {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Raised when operand extents are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::string_view op, const Shape& a, const Shape& b);
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Corpus, vocabulary or checkpoint content that cannot be used.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
};

/// Dense row-major array of doubles.
///
/// A Tensor is a cheap handle; copies share storage. Values produced by
/// operations are never modified afterwards. Leaf parameters are the only
/// tensors written in place (by the optimizer and the gradient checker).
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t numel() const { return impl_->data.size(); }
  std::size_t dim(std::size_t i) const { return impl_->shape.at(i); }

  /// Extents when viewed as a matrix; rank-1 tensors are a single row and
  /// higher ranks fold their leading axes into rows.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }

  const TensorImpl* id() const { return impl_.get(); }
  bool all_finite() const;

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Gradient buffers produced by one backward pass, keyed by tensor identity.
class Gradients {
 public:
  /// Buffer for `t`, created zero-filled on first use.
  std::span<double> of(const Tensor& t);
  /// Buffer for `t` if any gradient reached it.
  const std::vector<double>* find(const Tensor& t) const;
  /// Copy of the gradient for `t`; zeros when `t` was not reached.
  Tensor get(const Tensor& t) const;
  bool contains(const Tensor& t) const { return find(t) != nullptr; }

 private:
  std::unordered_map<const TensorImpl*, std::vector<double>> grads_;
};

/// Record of the differentiable operations evaluated while the tape was
/// active, in evaluation order. Replaying it in reverse yields gradients.
class Tape {
 public:
  using BackwardFn = std::function<void(Gradients&)>;

  struct Entry {
    std::string_view op;
    std::vector<const TensorImpl*> inputs;
    Tensor output;
    BackwardFn backward;
  };

  void record(std::string_view op, std::initializer_list<const Tensor*> inputs, const Tensor& output,
              BackwardFn backward);
  void record(std::string_view op, const std::vector<Tensor>& inputs, const Tensor& output,
              BackwardFn backward);

  /// Seeds d(loss)/d(loss)=1 and visits every entry once, newest first.
  Gradients backward(const Tensor& loss) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

  /// Index and op name of the first entry whose output holds NaN/Inf.
  std::optional<std::pair<std::size_t, std::string_view>> first_non_finite() const;

  /// Tape receiving records on the calling thread, or nullptr.
  static Tape* active();

 private:
  friend class TapeScope;
  std::vector<Entry> entries_;
};

/// Makes `tape` the recording target for the current thread while in scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// True when an op on these inputs must be recorded.
bool should_record(std::initializer_list<const Tensor*> inputs);

}  // namespace vgnmn
