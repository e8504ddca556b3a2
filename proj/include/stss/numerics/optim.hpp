#pragma once

#include "stss/numerics/param_store.hpp"

#include <map>
#include <string>
#include <vector>

namespace stss::num {

struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// First/second moment buffers, persisted per parameter name.
struct AdamState {
  std::map<std::string, std::vector<float>> m;
  std::map<std::string, std::vector<float>> v;
};

using GradMap = std::map<std::string, std::vector<float>>;

// One bias-corrected Adam update at step t (t >= 1). Every parameter in the
// store must have an entry in grads.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg, int t);

// Collects the accumulated .grad of every parameter; a parameter that
// received no gradient is an error.
GradMap collect_grads(const ParamStore& params);

// Piecewise-constant decay: lr * gamma^floor(step / step_size).
float step_decay_lr(float base_lr, int step, int step_size, float gamma);

} // namespace stss::num
