#include "stss/erm/erm.hpp"

#include "stss/error.hpp"
#include "stss/numerics/layers.hpp"
#include "stss/numerics/ops.hpp"

#include <string>
#include <vector>

namespace stss::erm {
namespace {

constexpr float kSlope = 0.1f;

// (N, C, h, w) -> per batch, pixel-major (h*w, C).
std::vector<double> to_pixel_major(std::span<const float> x, std::size_t n, std::size_t c, std::size_t plane) {
  std::vector<double> out(n * c * plane);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) out[(b * plane + i) * c + ch] = x[(b * c + ch) * plane + i];
  return out;
}

std::string layer(const char* group, int i) { return std::string("erm.") + group + "." + std::to_string(i); }

Tensor encoder(const num::ParamStore& params, const ErmConfig& cfg, const char* group, Tensor x) {
  for (int i = 0; i < cfg.encoder_layers; ++i) {
    x = num::conv(params, layer(group, i), x);
    if (i + 1 < cfg.encoder_layers) x = num::leaky_relu(x, kSlope);
  }
  return x;
}

} // namespace

void ErmConfig::validate() const {
  if (window < 1 || window % 2 == 0) throw ConfigError("erm: window must be a positive odd number");
  if (embed_dim < 1) throw ConfigError("erm: embed_dim must be positive");
  if (encoder_layers < 1) throw ConfigError("erm: encoder_layers must be >= 1");
}

Tensor window_relu_attention(const Tensor& q, const Tensor& k, const Tensor& v, int window) {
  if (window < 1 || window % 2 == 0) throw ContractError("window_relu_attention: window must be odd");
  if (q.rank() != 4 || k.rank() != 4 || v.rank() != 4) throw ContractError("window_relu_attention: expects 4-D tensors");
  if (q.shape() != k.shape()) throw ContractError("window_relu_attention: q and k shapes differ");
  if (v.dim(0) != q.dim(0) || v.dim(2) != q.dim(2) || v.dim(3) != q.dim(3))
    throw ContractError("window_relu_attention: v batch/spatial dims differ from q");
  num::require_finite(q.data(), "window_relu_attention(q)");
  num::require_finite(k.data(), "window_relu_attention(k)");
  num::require_finite(v.data(), "window_relu_attention(v)");
  const std::size_t n = q.dim(0), d = q.dim(1), dv = v.dim(1), h = q.dim(2), w = q.dim(3), plane = h * w;
  const int r = window / 2;
  const std::size_t taps = static_cast<std::size_t>(window * window);

  auto qt = to_pixel_major(q.data(), n, d, plane);
  auto kt = to_pixel_major(k.data(), n, d, plane);
  auto vt = to_pixel_major(v.data(), n, dv, plane);
  // Neighbour index per (pixel, tap), -1 outside the frame; ReLU scores kept for backward.
  std::vector<long> nbr(n * plane * taps, -1);
  std::vector<double> score(n * plane * taps, 0.0);
  num::Buffer out(n * dv * plane);
  std::vector<double> acc(dv);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t p = y * w + x;
        const double* qp = &qt[(b * plane + p) * d];
        std::fill(acc.begin(), acc.end(), 0.0);
        std::size_t tap = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx, ++tap) {
            const long yy = static_cast<long>(y) + dy, xx = static_cast<long>(x) + dx;
            if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
            const std::size_t pn = static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx);
            const std::size_t slot = (b * plane + p) * taps + tap;
            nbr[slot] = static_cast<long>(pn);
            const double* kp = &kt[(b * plane + pn) * d];
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += qp[j] * kp[j];
            if (s <= 0.0) continue;
            score[slot] = s;
            const double* vp = &vt[(b * plane + pn) * dv];
            for (std::size_t c = 0; c < dv; ++c) acc[c] += s * vp[c];
          }
        for (std::size_t c = 0; c < dv; ++c) out[(b * dv + c) * plane + p] = static_cast<float>(acc[c]);
      }

  return num::make_op_result(
      "window_relu_attention", num::Shape{n, dv, h, w}, std::move(out), {q, k, v},
      [qt = std::move(qt), kt = std::move(kt), vt = std::move(vt), nbr = std::move(nbr), score = std::move(score), n, d, dv, plane, taps](num::TensorNode& self) {
        const auto gt = to_pixel_major(self.grad, n, dv, plane);
        const bool gq = self.parents[0]->requires_grad, gk = self.parents[1]->requires_grad,
                   gv = self.parents[2]->requires_grad;
        std::vector<double> dq(gq ? qt.size() : 0), dk(gk ? kt.size() : 0), dvv(gv ? vt.size() : 0);
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t p = 0; p < plane; ++p) {
            const double* g = &gt[(b * plane + p) * dv];
            for (std::size_t tap = 0; tap < taps; ++tap) {
              const std::size_t slot = (b * plane + p) * taps + tap;
              const double s = score[slot];
              if (nbr[slot] < 0 || s <= 0.0) continue;
              const std::size_t pn = static_cast<std::size_t>(nbr[slot]);
              const double* vp = &vt[(b * plane + pn) * dv];
              if (gv)
                for (std::size_t c = 0; c < dv; ++c) dvv[(b * plane + pn) * dv + c] += s * g[c];
              double ds = 0.0;
              for (std::size_t c = 0; c < dv; ++c) ds += g[c] * vp[c];
              if (gq)
                for (std::size_t j = 0; j < d; ++j) dq[(b * plane + p) * d + j] += ds * kt[(b * plane + pn) * d + j];
              if (gk)
                for (std::size_t j = 0; j < d; ++j) dk[(b * plane + pn) * d + j] += ds * qt[(b * plane + p) * d + j];
            }
          }
        auto scatter = [&](std::size_t parent, const std::vector<double>& src, std::size_t c_count) {
          auto& g = self.parents[parent]->ensure_grad();
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < c_count; ++c)
              for (std::size_t i = 0; i < plane; ++i)
                g[(b * c_count + c) * plane + i] += static_cast<float>(src[(b * plane + i) * c_count + c]);
        };
        if (gq) scatter(0, dq, d);
        if (gk) scatter(1, dk, d);
        if (gv) scatter(2, dvv, dv);
      });
}

void register_params(num::ParamStore& params, const ErmConfig& cfg, int feature_channels, int gbuffer_channels,
                     std::uint64_t seed) {
  cfg.validate();
  for (int i = 0; i < cfg.encoder_layers; ++i) {
    num::add_conv(params, layer("q_proj", i), i == 0 ? gbuffer_channels : cfg.embed_dim, cfg.embed_dim, 3, seed);
    num::add_conv(params, layer("kv_proj", i), i == 0 ? feature_channels + gbuffer_channels : cfg.embed_dim, cfg.embed_dim, 3,
             seed);
  }
  num::add_conv(params, "erm.out_proj", cfg.embed_dim, feature_channels, 1, seed);
}

EmbeddingPair encode_embeddings(const num::ParamStore& params, const ErmConfig& cfg, const Tensor& features,
                                const Tensor& gbuffer_ds, const Tensor& mask) {
  if (features.dim(2) != gbuffer_ds.dim(2) || features.dim(3) != gbuffer_ds.dim(3) ||
      features.dim(0) != gbuffer_ds.dim(0))
    throw ContractError("encode_embeddings: features " + num::shape_str(features.shape()) + " and G-buffer " +
                        num::shape_str(gbuffer_ds.shape()) + " differ in batch/spatial dims");
  EmbeddingPair pair;
  pair.mask = mask;
  pair.q = encoder(params, cfg, "q_proj", gbuffer_ds);
  pair.k = num::mask_channels(pair.q, mask);
  pair.v = num::mask_channels(encoder(params, cfg, "kv_proj", num::concat_channels({features, gbuffer_ds})), mask);
  return pair;
}

Tensor erm_forward(const EmbeddingPair& pair, const ErmConfig& cfg) {
  return window_relu_attention(pair.q, pair.k, pair.v, cfg.window);
}

Tensor erm_block(const num::ParamStore& params, const ErmConfig& cfg, const Tensor& features, const Tensor& gbuffer_ds,
                 const Tensor& mask) {
  const EmbeddingPair pair = encode_embeddings(params, cfg, features, gbuffer_ds, mask);
  // The unnormalised sum grows with window^2 * d; bring it back to feature scale.
  const float s = 1.0f / static_cast<float>(cfg.window * cfg.window * cfg.embed_dim);
  return num::add(features, num::conv(params, "erm.out_proj", num::scale(erm_forward(pair, cfg), s)));
}

std::uint64_t erm_flops(const ErmConfig& cfg, std::uint64_t height, std::uint64_t width) {
  const std::uint64_t w2 = static_cast<std::uint64_t>(cfg.window) * static_cast<std::uint64_t>(cfg.window);
  return 3 * w2 * static_cast<std::uint64_t>(cfg.embed_dim) * height * width;
}

std::uint64_t erm_embedding_flops(const ErmConfig& cfg, int feature_channels, int gbuffer_channels,
                                  std::uint64_t height, std::uint64_t width) {
  const std::uint64_t d = static_cast<std::uint64_t>(cfg.embed_dim), f = static_cast<std::uint64_t>(feature_channels),
                      g = static_cast<std::uint64_t>(gbuffer_channels);
  std::uint64_t per_pixel = 9 * g * d + 9 * (f + g) * d + d * f;
  per_pixel += static_cast<std::uint64_t>(cfg.encoder_layers - 1) * 2 * 9 * d * d;
  return per_pixel * height * width;
}

std::uint64_t erm_param_count(const ErmConfig& cfg, int feature_channels, int gbuffer_channels) {
  const std::uint64_t d = static_cast<std::uint64_t>(cfg.embed_dim), f = static_cast<std::uint64_t>(feature_channels),
                      g = static_cast<std::uint64_t>(gbuffer_channels);
  std::uint64_t n = num::conv_param_count(g, d, 3) + num::conv_param_count(f + g, d, 3) + num::conv_param_count(d, f, 1);
  n += static_cast<std::uint64_t>(cfg.encoder_layers - 1) * 2 * num::conv_param_count(d, d, 3);
  return n;
}

} // namespace stss::erm
