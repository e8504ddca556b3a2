#pragma once

#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <string_view>

namespace stss::num {

// Stable 64-bit FNV-1a hash; used to derive per-parameter seeds so a tensor's
// initial values depend only on (seed, name).
std::uint64_t fnv1a(std::string_view s);

// Gaussian weights with std = gain * sqrt(2 / fan_in).
Tensor he_normal(const Shape& shape, std::size_t fan_in, std::uint64_t seed, float gain = 1.0f);
Tensor uniform(const Shape& shape, float lo, float hi, std::uint64_t seed);

} // namespace stss::num
