#pragma once

#include "stss/numerics/tensor.hpp"

#include <span>
#include <vector>

// Differentiable operators over (N, C, H, W) tensors. Each op validates its
// shapes, rejects non-finite results and records an exact backward pass when
// any input requires grad.
namespace stss::num {

// Cross-correlation. weight is (outC, inC, kH, kW); bias is (outC) or undefined.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride = 1, int padding = 0);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, float slope);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);

Tensor concat_channels(const std::vector<Tensor>& parts);

// 2x2 mean pooling; H and W must be even.
Tensor avg_pool2(const Tensor& x);
// 2x bilinear upsampling with half-pixel centers and edge clamping.
Tensor bilinear_upsample2(const Tensor& x);
// Space-to-depth: (N, C, H, W) -> (N, 4C, H/2, W/2).
Tensor pixel_unshuffle2(const Tensor& x);

// Multiplies every channel by a constant (N, 1, H, W) mask. No gradient
// flows to the mask.
Tensor mask_channels(const Tensor& x, const Tensor& mask);

// sum_i x_i * w_i for constant weights; returns a one-element tensor.
Tensor weighted_sum(const Tensor& x, std::span<const float> weights);

// Mean over all elements of w * |a - b|, where w is a constant (N, 1, H, W)
// per-pixel map broadcast over channels.
Tensor weighted_l1_mean(const Tensor& a, const Tensor& b, const Tensor& weight);

// mean_i (a_i - b_i)^2
Tensor mse_mean(const Tensor& a, const Tensor& b);

} // namespace stss::num
