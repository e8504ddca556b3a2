#pragma once

#include "stss/numerics/param_store.hpp"
#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <string>

namespace stss::erm {

using num::Tensor;

struct ErmConfig {
  int window = 5;         // odd
  int embed_dim = 32;
  int encoder_layers = 1; // 3x3 convs per embedding encoder
  void validate() const;
};

// phi(p) = sum over the window of ReLU(<q(p), k(p+d)>) * v(p+d), with
// out-of-frame neighbours contributing zero. q, k: (N, d, h, w); v: (N, dv, h, w).
// No normalisation of the weights. Exact backward to q, k and v.
Tensor window_relu_attention(const Tensor& q, const Tensor& k, const Tensor& v, int window);

struct EmbeddingPair {
  Tensor q;    // BRDF embedding
  Tensor k;    // q * mask
  Tensor v;    // light embedding * mask
  Tensor mask; // (N, 1, h, w), constant
};

// Registers erm.q_proj.*, erm.kv_proj.* and erm.out_proj.* in params.
void register_params(num::ParamStore& params, const ErmConfig& cfg, int feature_channels, int gbuffer_channels,
                     std::uint64_t seed);

// BRDF embedding from the downsampled G-buffer; light embedding from
// concat(features, G-buffer). Both are then multiplied by the mask.
EmbeddingPair encode_embeddings(const num::ParamStore& params, const ErmConfig& cfg, const Tensor& features,
                                const Tensor& gbuffer_ds, const Tensor& mask);

Tensor erm_forward(const EmbeddingPair& pair, const ErmConfig& cfg);

// features + out_proj(phi / (window^2 * d))
Tensor erm_block(const num::ParamStore& params, const ErmConfig& cfg, const Tensor& features, const Tensor& gbuffer_ds,
                 const Tensor& mask);

// Attention multiply-adds: window^2 * 2d for the scores plus window^2 * d
// for the weighted sum, per pixel.
std::uint64_t erm_flops(const ErmConfig& cfg, std::uint64_t height, std::uint64_t width);

// Multiply-adds of the embedding encoders and the output projection.
std::uint64_t erm_embedding_flops(const ErmConfig& cfg, int feature_channels, int gbuffer_channels,
                                  std::uint64_t height, std::uint64_t width);

std::uint64_t erm_param_count(const ErmConfig& cfg, int feature_channels, int gbuffer_channels);

} // namespace stss::erm
