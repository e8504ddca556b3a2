#include "stss/numerics/layers.hpp"

#include "stss/numerics/init.hpp"
#include "stss/numerics/ops.hpp"

namespace stss::num {

void add_conv(ParamStore& params, const std::string& name, int in, int out, int k, std::uint64_t seed, bool zero_init) {
  const auto ci = static_cast<std::size_t>(in), co = static_cast<std::size_t>(out), kk = static_cast<std::size_t>(k);
  params.add(name + ".weight",
             zero_init ? Tensor({co, ci, kk, kk}) : he_normal({co, ci, kk, kk}, ci * kk * kk, seed ^ fnv1a(name)));
  params.add(name + ".bias", Tensor({co}));
}

Tensor conv(const ParamStore& params, const std::string& name, const Tensor& x) {
  const Tensor& w = params.get(name + ".weight");
  return conv2d(x, w, params.get(name + ".bias"), 1, static_cast<int>(w.dim(2)) / 2);
}

} // namespace stss::num
