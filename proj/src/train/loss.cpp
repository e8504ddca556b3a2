#include "stss/train/loss.hpp"

#include "stss/error.hpp"
#include "stss/numerics/init.hpp"
#include "stss/numerics/ops.hpp"

#include <string>

namespace stss::train {

namespace {

constexpr int kWidths[PerceptualProxy::kStages + 1] = {3, 8, 16, 32};
constexpr float kSlope = 0.2f;

} // namespace

Tensor weighted_l1(const Tensor& a, const Tensor& b, const Tensor& weight) {
  return num::weighted_l1_mean(a, b, weight);
}

PerceptualProxy::PerceptualProxy(std::uint64_t seed) {
  for (int s = 0; s < kStages; ++s) {
    const std::size_t in = kWidths[s], out = kWidths[s + 1];
    const std::string name = "feat." + std::to_string(s);
    Tensor w = num::he_normal({out, in, 3, 3}, in * 9, seed ^ num::fnv1a(name));
    w.set_requires_grad(false);
    stages_.push_back({w, Tensor({out}, 0.0f)});
  }
}

PerceptualProxy PerceptualProxy::from_file(const std::filesystem::path& path) {
  num::ParamStore store = num::load_params(path);
  std::vector<Stage> stages;
  for (int s = 0; s < kStages; ++s) {
    const std::string name = "feat." + std::to_string(s);
    if (!store.contains(name + ".weight") || !store.contains(name + ".bias"))
      throw IoError(path.string() + ": missing " + name + " weights");
    Tensor w = store.get(name + ".weight").clone(), b = store.get(name + ".bias").clone();
    if (w.rank() != 4 || w.dim(1) != (s == 0 ? 3u : stages.back().weight.dim(0)) || b.numel() != w.dim(0))
      throw IoError(path.string() + ": bad shape for " + name);
    w.set_requires_grad(false);
    b.set_requires_grad(false);
    stages.push_back({w, b});
  }
  return PerceptualProxy(std::move(stages));
}

std::vector<Tensor> PerceptualProxy::features(const Tensor& x) const {
  if (x.rank() != 4 || x.dim(1) != 3) throw ContractError("perceptual proxy expects (N, 3, H, W), got " + num::shape_str(x.shape()));
  if (x.dim(2) % 4 != 0 || x.dim(3) % 4 != 0)
    throw ContractError("perceptual proxy needs H and W divisible by 4, got " + num::shape_str(x.shape()));
  std::vector<Tensor> out;
  Tensor h = x;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    if (s > 0) h = num::avg_pool2(h);
    const int pad = static_cast<int>(stages_[s].weight.dim(2) / 2);
    h = num::leaky_relu(num::conv2d(h, stages_[s].weight, stages_[s].bias, 1, pad), kSlope);
    out.push_back(h);
  }
  return out;
}

Tensor PerceptualProxy::loss(const Tensor& a, const Tensor& b) const {
  const auto fa = features(a), fb = features(b);
  Tensor sum = num::mse_mean(fa[0], fb[0]);
  for (std::size_t s = 1; s < fa.size(); ++s) sum = num::add(sum, num::mse_mean(fa[s], fb[s]));
  return sum;
}

Tensor total_loss(const Tensor& prediction, const Tensor& target, const Tensor& weight, float w_p,
                  const PerceptualProxy& proxy) {
  if (!(w_p >= 0.0f)) throw ContractError("perceptual weight must be >= 0");
  Tensor l1 = weighted_l1(prediction, target, weight);
  if (w_p == 0.0f) return l1;
  return num::add(l1, num::scale(proxy.loss(prediction, target), w_p));
}

} // namespace stss::train
