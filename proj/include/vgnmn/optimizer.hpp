#pragma once

#include <map>
#include <string>
#include <vector>

#include "vgnmn/param_store.hpp"

namespace vgnmn {

/// d^−0.5 · min(step^−0.5, step · warmup^−1.5), step ≥ 1.
double noam_lr(std::size_t step, std::size_t d, std::size_t warmup);

/// Flat gradient per parameter name.
using GradMap = std::map<std::string, std::vector<double>>;

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  /// Round parameters and moments to float32 after each update, so that a
  /// float32 checkpoint captures the optimizer state exactly.
  bool float32_state = true;
};

struct AdamState {
  std::size_t step = 0;
  GradMap m, v;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update of every parameter present in `grads`.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, double lr, const AdamOptions& options = {});

double global_norm(const GradMap& grads);

/// Rescales `grads` in place to norm `max_norm` when larger. Returns true if clipped.
bool clip_global_norm(GradMap& grads, double max_norm);

}  // namespace vgnmn
