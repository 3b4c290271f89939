#include "vgnmn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

namespace vgnmn {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DimensionError::DimensionError(std::string_view op, const Shape& a, const Shape& b)
    : std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                            shape_str(b)) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) shape = {1};
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  impl_ = std::make_shared<TensorImpl>(TensorImpl{std::move(shape), std::move(data), requires_grad});
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  const auto& s = impl_->shape;
  if (s.size() <= 1) return 1;
  return numel() / s.back();
}

std::size_t Tensor::cols() const { return impl_->shape.back(); }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on non-scalar tensor " + shape_str(shape()));
  return impl_->data[0];
}

bool Tensor::all_finite() const {
  return std::all_of(impl_->data.begin(), impl_->data.end(), [](double v) { return std::isfinite(v); });
}

std::span<double> Gradients::of(const Tensor& t) {
  auto [it, inserted] = grads_.try_emplace(t.id());
  if (inserted) it->second.assign(t.numel(), 0.0);
  return it->second;
}

const std::vector<double>* Gradients::find(const Tensor& t) const {
  auto it = grads_.find(t.id());
  return it == grads_.end() ? nullptr : &it->second;
}

Tensor Gradients::get(const Tensor& t) const {
  if (const auto* g = find(t)) return Tensor(t.shape(), *g);
  return Tensor::zeros(t.shape());
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape* Tape::active() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (!g_active_tape) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(std::string_view op, std::initializer_list<const Tensor*> inputs, const Tensor& output,
                  BackwardFn backward) {
  Entry e{op, {}, output, std::move(backward)};
  e.inputs.reserve(inputs.size());
  for (const auto* t : inputs) e.inputs.push_back(t->id());
  entries_.push_back(std::move(e));
}

void Tape::record(std::string_view op, const std::vector<Tensor>& inputs, const Tensor& output,
                  BackwardFn backward) {
  Entry e{op, {}, output, std::move(backward)};
  e.inputs.reserve(inputs.size());
  for (const auto& t : inputs) e.inputs.push_back(t.id());
  entries_.push_back(std::move(e));
}

Gradients Tape::backward(const Tensor& loss) const {
  if (loss.numel() != 1) {
    throw DimensionError("backward requires a scalar loss, got " + shape_str(loss.shape()));
  }
  if (!loss.requires_grad()) throw std::logic_error("backward: loss is not tracked");
  Gradients grads;
  grads.of(loss)[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (grads.contains(it->output)) it->backward(grads);
  }
  return grads;
}

std::optional<std::pair<std::size_t, std::string_view>> Tape::first_non_finite() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!entries_[i].output.all_finite()) return std::make_pair(i, entries_[i].op);
  }
  return std::nullopt;
}

}  // namespace vgnmn
