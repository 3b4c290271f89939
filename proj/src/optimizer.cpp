#include "vgnmn/optimizer.hpp"

#include <algorithm>
#include <cmath>

namespace vgnmn {

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

double noam_lr(std::size_t step, std::size_t d, std::size_t warmup) {
  if (step == 0) throw ConfigError("learning-rate step counts from 1");
  if (d == 0 || warmup == 0) throw ConfigError("noam schedule needs positive d and warmup");
  const double s = static_cast<double>(step);
  return std::pow(static_cast<double>(d), -0.5) *
         std::min(std::pow(s, -0.5), s * std::pow(static_cast<double>(warmup), -1.5));
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, double lr, const AdamOptions& o) {
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (const auto& [name, g] : grads) {
    auto values = params.get(name).mutable_data();
    if (g.size() != values.size()) throw DimensionError("adam_step: gradient size mismatch for '" + name + "'");
    auto& m = state.m[name];
    auto& v = state.v[name];
    m.resize(g.size(), 0.0);
    v.resize(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double mi = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      double vi = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      double p = values[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps);
      if (o.float32_state) {
        mi = f32(mi);
        vi = f32(vi);
        p = f32(p);
      }
      m[i] = mi;
      v[i] = vi;
      values[i] = p;
    }
  }
}

double global_norm(const GradMap& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g) sq += x * x;
  return std::sqrt(sq);
}

bool clip_global_norm(GradMap& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (!(norm > max_norm)) return false;
  const double s = max_norm / norm;
  for (auto& [name, g] : grads)
    for (auto& x : g) x *= s;
  return true;
}

}  // namespace vgnmn
