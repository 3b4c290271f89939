#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "vgnmn/param_store.hpp"

namespace vgnmn {

struct GradCheckOptions {
  double step = 1e-5;
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  /// Gradients smaller than this are compared on an absolute scale.
  double magnitude_floor = 1e-6;
  /// Visit every coordinate in order instead of sampling.
  bool exhaustive = false;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t nonzero = 0;
  std::string worst;  // "name[index]" of the worst coordinate
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares autodiff gradients of `loss_fn` against central differences
/// (f(θ+h) − f(θ−h)) / 2h at randomly sampled parameter coordinates.
///
/// `loss_fn` must be a pure function of the parameter values: any dropout
/// or sampling inside it has to reseed identically on every call.
GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, ParamStore& params,
                           const GradCheckOptions& options = {});

/// |a − b| / max(|a|, |b|, floor)
double relative_error(double analytic, double numeric, double floor);

}  // namespace vgnmn
