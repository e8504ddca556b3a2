#include "stss/numerics/init.hpp"

#include <cmath>
#include <random>

namespace stss::num {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Tensor he_normal(const Shape& shape, std::size_t fan_in, std::uint64_t seed, float gain) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, gain * std::sqrt(2.0f / static_cast<float>(fan_in)));
  std::vector<float> data(shape_numel(shape));
  for (auto& v : data) v = dist(rng);
  return Tensor(shape, std::move(data));
}

Tensor uniform(const Shape& shape, float lo, float hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> data(shape_numel(shape));
  for (auto& v : data) v = dist(rng);
  return Tensor(shape, std::move(data));
}

} // namespace stss::num
