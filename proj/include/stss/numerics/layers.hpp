#pragma once

#include "stss/numerics/param_store.hpp"
#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <string>

namespace stss::num {

// Registers name.weight (out, in, k, k) with He-normal values seeded by
// (seed, name) and a zero name.bias. zero_init zeroes the weight as well.
void add_conv(ParamStore& params, const std::string& name, int in, int out, int k, std::uint64_t seed,
              bool zero_init = false);

// Same-padded stride-1 convolution with the registered weights.
Tensor conv(const ParamStore& params, const std::string& name, const Tensor& x);

inline std::uint64_t conv_param_count(std::uint64_t in, std::uint64_t out, std::uint64_t k) {
  return k * k * in * out + out;
}

inline std::uint64_t conv_macs(std::uint64_t in, std::uint64_t out, std::uint64_t k, std::uint64_t pixels) {
  return k * k * in * out * pixels;
}

} // namespace stss::num
