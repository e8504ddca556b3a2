#pragma once

#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace stss::num {

struct GradCheckOptions {
  float epsilon = 1e-3f;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|, floor).
  float denominator_floor = 1.0f;
  std::uint64_t seed = 0x5eed;
  std::size_t max_elements = 1000;
};

using TensorOp = std::function<Tensor(const std::vector<Tensor>&)>;

// Central finite differences of sum(op(inputs) * r), r fixed uniform [-1, 1],
// against the analytic gradient for every element of every input. Returns the
// maximum relative error.
float grad_check(const TensorOp& op, const std::vector<Tensor>& inputs, const GradCheckOptions& opts = {});

struct GradProbe {
  Tensor tensor;
  std::size_t index;
};

// Same comparison for a scalar objective, probing only selected elements
// (e.g. a random sample of network parameters).
float grad_check_probes(const std::function<Tensor()>& objective, const std::vector<GradProbe>& probes,
                        const GradCheckOptions& opts = {});

} // namespace stss::num
