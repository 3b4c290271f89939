#include "vgnmn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "vgnmn/ops.hpp"

namespace vgnmn {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult grad_check(const std::function<Tensor()>& loss_fn, ParamStore& params,
                           const GradCheckOptions& options) {
  if (options.step <= 0.0) throw ConfigError("grad_check step must be positive");
  if (params.size() == 0) throw ConfigError("grad_check needs at least one parameter");

  Tape tape;
  Gradients grads;
  {
    TapeScope scope(tape);
    auto loss = loss_fn();
    grads = tape.backward(loss);
  }

  std::vector<std::string> names = params.names();
  Rng rng(options.seed);
  GradCheckResult result;
  std::vector<std::pair<std::string, std::size_t>> coords;
  if (options.exhaustive) {
    for (const auto& name : names)
      for (std::size_t i = 0; i < params.get(name).numel(); ++i) coords.emplace_back(name, i);
  } else {
    for (std::size_t s = 0; s < options.samples; ++s) {
      const auto& name = names[std::uniform_int_distribution<std::size_t>(0, names.size() - 1)(rng)];
      coords.emplace_back(name, std::uniform_int_distribution<std::size_t>(0, params.get(name).numel() - 1)(rng));
    }
  }
  for (const auto& [name, i] : coords) {
    Tensor& p = params.get(name);
    const auto* g = grads.find(p);
    const double analytic = g ? (*g)[i] : 0.0;

    auto values = p.mutable_data();
    const double saved = values[i];
    values[i] = saved + options.step;
    const double up = loss_fn().item();
    values[i] = saved - options.step;
    const double down = loss_fn().item();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * options.step);

    const double err = relative_error(analytic, numeric, options.magnitude_floor);
    ++result.checked;
    if (analytic != 0.0 || numeric != 0.0) ++result.nonzero;
    if (err > result.max_rel_error || result.worst.empty()) {
      if (err >= result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = name + "[" + std::to_string(i) + "]";
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace vgnmn
