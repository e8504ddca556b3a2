#include "stss/numerics/optim.hpp"

#include "stss/error.hpp"

#include <cmath>

namespace stss::num {

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg, int t) {
  if (t < 1) throw ContractError("adam_step: step index must be >= 1");
  for (auto& [name, p] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw ContractError("adam_step: missing gradient for parameter " + name);
    if (g->second.size() != p.numel()) throw ContractError("adam_step: gradient size mismatch for " + name);
  }
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg.beta1), t);
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg.beta2), t);
  for (auto& [name, p] : params) {
    const auto& g = grads.at(name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) {
      m.assign(p.numel(), 0.0f);
      v.assign(p.numel(), 0.0f);
    }
    auto data = p.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g[i] * g[i];
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      data[i] -= static_cast<float>(cfg.lr * mh / (std::sqrt(vh) + cfg.eps));
    }
    require_finite(data, "adam_step");
  }
}

GradMap collect_grads(const ParamStore& params) {
  GradMap out;
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw ContractError("collect_grads: parameter " + name + " received no gradient");
    out.emplace(name, std::vector<float>(p.grad().begin(), p.grad().end()));
  }
  return out;
}

float step_decay_lr(float base_lr, int step, int step_size, float gamma) {
  if (step_size <= 0) throw ContractError("step_decay_lr: step size must be positive");
  return base_lr * static_cast<float>(std::pow(static_cast<double>(gamma), step / step_size));
}

} // namespace stss::num
