#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "vgnmn/grad_check.hpp"
#include "vgnmn/ops.hpp"
#include "vgnmn/param_store.hpp"

namespace vgnmn::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0, bool requires_grad = false) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> data(shape_numel(shape));
  for (auto& v : data) v = normal(rng);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Reduces an arbitrary-shaped output to a scalar through fixed random
/// weights so every output coordinate influences the checked loss.
inline Tensor weighted_sum(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  auto w = random_tensor(y.shape(), rng);
  return sum(mul(y, w));
}

}  // namespace vgnmn::testing
