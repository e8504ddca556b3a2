#pragma once

#include "stss/numerics/param_store.hpp"
#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stss::train {

using num::Tensor;

// mean over pixels and channels of w * |a - b|; weight is (N, 1, H, W).
Tensor weighted_l1(const Tensor& a, const Tensor& b, const Tensor& weight);

// Frozen feature stack standing in for a pretrained classifier: three
// conv + leaky ReLU stages with 2x pooling between them. Weights never
// receive gradients.
class PerceptualProxy {
public:
  static constexpr int kStages = 3;

  explicit PerceptualProxy(std::uint64_t seed = 0x5eed);
  // Loads stage weights feat.{0,1,2}.{weight,bias} from a parameter file,
  // e.g. converted from a real pretrained network.
  static PerceptualProxy from_file(const std::filesystem::path& path);

  // Features of a (N, 3, H, W) image at each stage. H and W must be
  // divisible by 4.
  std::vector<Tensor> features(const Tensor& x) const;
  // Sum over stages of the mean squared feature distance.
  Tensor loss(const Tensor& a, const Tensor& b) const;

private:
  struct Stage {
    Tensor weight, bias;
  };
  PerceptualProxy(std::vector<Stage> stages) : stages_(std::move(stages)) {}
  std::vector<Stage> stages_;
};

// weighted_l1 + w_p * proxy.loss
Tensor total_loss(const Tensor& prediction, const Tensor& target, const Tensor& weight, float w_p,
                  const PerceptualProxy& proxy);

} // namespace stss::train
