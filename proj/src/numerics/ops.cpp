#include "stss/numerics/ops.hpp"

#include "stss/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace stss::num {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

void require_rank4(const Tensor& t, const char* op) {
  if (!t.defined() || t.rank() != 4)
    throw ContractError(std::string(op) + ": expected a 4-D (N,C,H,W) tensor, got " +
                        (t.defined() ? shape_str(t.shape()) : std::string("undefined")));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.defined() || !b.defined() || a.shape() != b.shape())
    throw ContractError(std::string(op) + ": shape mismatch " + (a.defined() ? shape_str(a.shape()) : "undefined") +
                        " vs " + (b.defined() ? shape_str(b.shape()) : "undefined"));
}

bool wants_grad(const TensorNode& node, std::size_t i) {
  return node.parents[i] && node.parents[i]->requires_grad;
}

struct ConvGeom {
  std::size_t c, h, w, k, ho, wo;
  int stride, pad;
  std::size_t rows() const { return c * k * k; }
  std::size_t cols() const { return ho * wo; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

void im2col(const float* x, const ConvGeom& g, float* col) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        float* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
          float* dst = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, 0.0f);
            continue;
          }
          const float* src = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0f : src[ix];
          }
        }
      }
}

void col2im_add(const float* col, const ConvGeom& g, float* x) {
  for (std::size_t c = 0; c < g.c; ++c)
    for (std::size_t ky = 0; ky < g.k; ++ky)
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const float* row = col + ((c * g.k + ky) * g.k + kx) * g.cols();
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy) * g.stride - g.pad + static_cast<long>(ky);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          float* dst = x + (c * g.h + static_cast<std::size_t>(iy)) * g.w;
          const float* src = row + oy * g.wo;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox) * g.stride - g.pad + static_cast<long>(kx);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
}

template <typename F>
Tensor unary(const char* name, const Tensor& x, F f, float (*df)(float, float)) {
  Buffer out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_op_result(name, x.shape(), std::move(out), {x}, [df](TensorNode& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.data[i], self.data[i]);
  });
}

// Index/weight table of 2x half-pixel bilinear upsampling along one axis.
struct UpTap {
  std::size_t i0, i1;
  float w0, w1;
};

std::vector<UpTap> upsample_taps(std::size_t n) {
  std::vector<UpTap> taps(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    taps[2 * i] = {i == 0 ? 0 : i - 1, i, 0.25f, 0.75f};
    taps[2 * i + 1] = {i, std::min(i + 1, n - 1), 0.75f, 0.25f};
  }
  return taps;
}

} // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  require_rank4(input, "conv2d");
  require_rank4(weight, "conv2d(weight)");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oc = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != c)
    throw ContractError("conv2d: input has " + std::to_string(c) + " channels, weight expects " +
                        std::to_string(weight.dim(1)));
  if (weight.dim(3) != k) throw ContractError("conv2d: only square kernels are supported");
  if (stride < 1 || padding < 0) throw ContractError("conv2d: stride must be >= 1 and padding >= 0");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != oc))
    throw ContractError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match " + std::to_string(oc) +
                        " output channels");
  if (h + 2 * padding < k || w + 2 * padding < k) throw ContractError("conv2d: kernel larger than padded input");

  ConvGeom g{c, h, w, k, (h + 2 * padding - k) / stride + 1, (w + 2 * padding - k) / stride + 1, stride, padding};
  Buffer out(n * oc * g.cols());
  Buffer col(g.pointwise() ? 0 : g.rows() * g.cols());
  ConstMapMat wm(weight.data().data(), oc, g.rows());
  for (std::size_t b = 0; b < n; ++b) {
    const float* xb = input.data().data() + b * c * h * w;
    if (!g.pointwise()) im2col(xb, g, col.data());
    ConstMapMat cm(g.pointwise() ? xb : col.data(), g.rows(), g.cols());
    MapMat om(out.data() + b * oc * g.cols(), oc, g.cols());
    om.noalias() = wm * cm;
    if (bias.defined())
      for (std::size_t o = 0; o < oc; ++o) om.row(o).array() += bias.data()[o];
  }

  return make_op_result(
      "conv2d", Shape{n, oc, g.ho, g.wo}, std::move(out), {input, weight, bias}, [g, n, oc](TensorNode& self) {
        TensorNode& x = *self.parents[0];
        TensorNode& wt = *self.parents[1];
        const bool gx = wants_grad(self, 0), gw = wants_grad(self, 1), gb = wants_grad(self, 2);
        Buffer col(g.pointwise() ? 0 : g.rows() * g.cols());
        Buffer dcol(gx && !g.pointwise() ? g.rows() * g.cols() : 0);
        ConstMapMat wm(wt.data.data(), oc, g.rows());
        for (std::size_t b = 0; b < n; ++b) {
          ConstMapMat gm(self.grad.data() + b * oc * g.cols(), oc, g.cols());
          const float* xb = x.data.data() + b * g.c * g.h * g.w;
          if (gw) {
            if (!g.pointwise()) im2col(xb, g, col.data());
            ConstMapMat cm(g.pointwise() ? xb : col.data(), g.rows(), g.cols());
            MapMat dw(wt.ensure_grad().data(), oc, g.rows());
            dw.noalias() += gm * cm.transpose();
          }
          if (gb) {
            auto& db = self.parents[2]->ensure_grad();
            for (std::size_t o = 0; o < oc; ++o) db[o] += gm.row(o).sum();
          }
          if (gx) {
            float* dxb = x.ensure_grad().data() + b * g.c * g.h * g.w;
            if (g.pointwise()) {
              MapMat dx(dxb, g.rows(), g.cols());
              dx.noalias() += wm.transpose() * gm;
            } else {
              MapMat dc(dcol.data(), g.rows(), g.cols());
              dc.noalias() = wm.transpose() * gm;
              col2im_add(dcol.data(), g, dxb);
            }
          }
        }
      });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float in, float) { return in > 0.0f ? 1.0f : 0.0f; });
}

Tensor leaky_relu(const Tensor& x, float slope) {
  Buffer out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : slope * in[i];
  return make_op_result("leaky_relu", x.shape(), std::move(out), {x}, [slope](TensorNode& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (p.data[i] > 0.0f ? 1.0f : slope);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op_result("add", a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      auto& g = self.parents[k]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op_result("sub", a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      const float sign = k == 0 ? 1.0f : -1.0f;
      auto& g = self.parents[k]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op_result("mul", a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      const auto& other = self.parents[1 - k]->data;
      auto& g = self.parents[k]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * other[i];
    }
  });
}

Tensor scale(const Tensor& x, float s) {
  Buffer out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * s;
  return make_op_result("scale", x.shape(), std::move(out), {x}, [s](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank4(p, "concat_channels");
  const std::size_t n = parts[0].dim(0), h = parts[0].dim(2), w = parts[0].dim(3);
  std::size_t total_c = 0;
  std::vector<std::size_t> channels;
  for (const auto& p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w)
      throw ContractError("concat_channels: mismatched batch/spatial dims " + shape_str(parts[0].shape()) + " vs " +
                          shape_str(p.shape()));
    channels.push_back(p.dim(1));
    total_c += p.dim(1);
  }
  const std::size_t plane = h * w;
  Buffer out(n * total_c * plane);
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const float* src = parts[k].data().data() + b * channels[k] * plane;
      std::copy(src, src + channels[k] * plane, out.begin() + static_cast<long>((b * total_c + off) * plane));
      off += channels[k];
    }
  }
  return make_op_result("concat_channels", Shape{n, total_c, h, w}, std::move(out), parts,
                        [channels, n, total_c, plane](TensorNode& self) {
                          for (std::size_t b = 0; b < n; ++b) {
                            std::size_t off = 0;
                            for (std::size_t k = 0; k < channels.size(); ++k) {
                              if (wants_grad(self, k)) {
                                auto& g = self.parents[k]->ensure_grad();
                                const float* src = self.grad.data() + (b * total_c + off) * plane;
                                float* dst = g.data() + b * channels[k] * plane;
                                for (std::size_t i = 0; i < channels[k] * plane; ++i) dst[i] += src[i];
                              }
                              off += channels[k];
                            }
                          }
                        });
}

Tensor avg_pool2(const Tensor& x) {
  require_rank4(x, "avg_pool2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw ContractError("avg_pool2: spatial dims must be even, got " + shape_str(x.shape()));
  const std::size_t ho = h / 2, wo = w / 2;
  Buffer out(n * c * ho * wo);
  const float* in = x.data().data();
  for (std::size_t p = 0; p < n * c; ++p)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t xx = 0; xx < wo; ++xx) {
        const float* s = in + (p * h + 2 * y) * w + 2 * xx;
        out[(p * ho + y) * wo + xx] = 0.25f * (s[0] + s[1] + s[w] + s[w + 1]);
      }
  return make_op_result("avg_pool2", Shape{n, c, ho, wo}, std::move(out), {x}, [n, c, h, w](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    const std::size_t ho = h / 2, wo = w / 2;
    for (std::size_t p = 0; p < n * c; ++p)
      for (std::size_t y = 0; y < ho; ++y)
        for (std::size_t xx = 0; xx < wo; ++xx) {
          const float v = 0.25f * self.grad[(p * ho + y) * wo + xx];
          float* d = g.data() + (p * h + 2 * y) * w + 2 * xx;
          d[0] += v;
          d[1] += v;
          d[w] += v;
          d[w + 1] += v;
        }
  });
}

Tensor bilinear_upsample2(const Tensor& x) {
  require_rank4(x, "bilinear_upsample2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const auto ty = upsample_taps(h), tx = upsample_taps(w);
  const std::size_t ho = 2 * h, wo = 2 * w;
  Buffer out(n * c * ho * wo);
  const float* in = x.data().data();
  for (std::size_t p = 0; p < n * c; ++p) {
    const float* src = in + p * h * w;
    for (std::size_t y = 0; y < ho; ++y) {
      const auto& a = ty[y];
      const float* r0 = src + a.i0 * w;
      const float* r1 = src + a.i1 * w;
      float* dst = out.data() + (p * ho + y) * wo;
      for (std::size_t xx = 0; xx < wo; ++xx) {
        const auto& b = tx[xx];
        dst[xx] = a.w0 * (b.w0 * r0[b.i0] + b.w1 * r0[b.i1]) + a.w1 * (b.w0 * r1[b.i0] + b.w1 * r1[b.i1]);
      }
    }
  }
  return make_op_result("bilinear_upsample2", Shape{n, c, ho, wo}, std::move(out), {x},
                        [n, c, h, w, ty, tx](TensorNode& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          const std::size_t ho = 2 * h, wo = 2 * w;
                          for (std::size_t p = 0; p < n * c; ++p) {
                            float* dst = g.data() + p * h * w;
                            for (std::size_t y = 0; y < ho; ++y) {
                              const auto& a = ty[y];
                              const float* src = self.grad.data() + (p * ho + y) * wo;
                              for (std::size_t xx = 0; xx < wo; ++xx) {
                                const auto& b = tx[xx];
                                const float v = src[xx];
                                dst[a.i0 * w + b.i0] += a.w0 * b.w0 * v;
                                dst[a.i0 * w + b.i1] += a.w0 * b.w1 * v;
                                dst[a.i1 * w + b.i0] += a.w1 * b.w0 * v;
                                dst[a.i1 * w + b.i1] += a.w1 * b.w1 * v;
                              }
                            }
                          }
                        });
}

Tensor pixel_unshuffle2(const Tensor& x) {
  require_rank4(x, "pixel_unshuffle2");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 || w % 2) throw ContractError("pixel_unshuffle2: spatial dims must be even, got " + shape_str(x.shape()));
  const std::size_t ho = h / 2, wo = w / 2;
  // Output channel (c*4 + dy*2 + dx) holds input pixel (2y+dy, 2x+dx).
  auto index = [=](std::size_t b, std::size_t ch, std::size_t d, std::size_t y, std::size_t xx) {
    const std::size_t dy = d / 2, dx = d % 2;
    return std::pair<std::size_t, std::size_t>{((b * c + ch) * h + 2 * y + dy) * w + 2 * xx + dx,
                                               ((b * 4 * c + ch * 4 + d) * ho + y) * wo + xx};
  };
  Buffer out(x.numel());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t y = 0; y < ho; ++y)
          for (std::size_t xx = 0; xx < wo; ++xx) {
            auto [src, dst] = index(b, ch, d, y, xx);
            out[dst] = x.data()[src];
          }
  return make_op_result("pixel_unshuffle2", Shape{n, 4 * c, ho, wo}, std::move(out), {x},
                        [=](TensorNode& self) {
                          auto& g = self.parents[0]->ensure_grad();
                          for (std::size_t b = 0; b < n; ++b)
                            for (std::size_t ch = 0; ch < c; ++ch)
                              for (std::size_t d = 0; d < 4; ++d)
                                for (std::size_t y = 0; y < ho; ++y)
                                  for (std::size_t xx = 0; xx < wo; ++xx) {
                                    auto [src, dst] = index(b, ch, d, y, xx);
                                    g[src] += self.grad[dst];
                                  }
                        });
}

Tensor mask_channels(const Tensor& x, const Tensor& mask) {
  require_rank4(x, "mask_channels");
  require_rank4(mask, "mask_channels(mask)");
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (mask.dim(0) != n || mask.dim(1) != 1 || mask.dim(2) != x.dim(2) || mask.dim(3) != x.dim(3))
    throw ContractError("mask_channels: mask " + shape_str(mask.shape()) + " does not broadcast over " +
                        shape_str(x.shape()));
  Buffer m(mask.data().begin(), mask.data().end());
  Buffer out(x.numel());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) out[(b * c + ch) * plane + i] = x.data()[(b * c + ch) * plane + i] * m[b * plane + i];
  return make_op_result("mask_channels", x.shape(), std::move(out), {x}, [m = std::move(m), n, c, plane](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < plane; ++i) g[(b * c + ch) * plane + i] += self.grad[(b * c + ch) * plane + i] * m[b * plane + i];
  });
}

Tensor weighted_sum(const Tensor& x, std::span<const float> weights) {
  if (weights.size() != x.numel()) throw ContractError("weighted_sum: weight count does not match tensor size");
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) acc += static_cast<double>(x.data()[i]) * weights[i];
  Buffer w(weights.begin(), weights.end());
  return make_op_result("weighted_sum", Shape{1}, {static_cast<float>(acc)}, {x}, [w = std::move(w)](TensorNode& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * w[i];
  });
}

Tensor weighted_l1_mean(const Tensor& a, const Tensor& b, const Tensor& weight) {
  require_same_shape(a, b, "weighted_l1_mean");
  require_rank4(a, "weighted_l1_mean");
  require_rank4(weight, "weighted_l1_mean(weight)");
  const std::size_t n = a.dim(0), c = a.dim(1), plane = a.dim(2) * a.dim(3);
  if (weight.dim(0) != n || weight.dim(1) != 1 || weight.dim(2) != a.dim(2) || weight.dim(3) != a.dim(3))
    throw ContractError("weighted_l1_mean: weight map " + shape_str(weight.shape()) + " does not match " +
                        shape_str(a.shape()));
  Buffer w(weight.data().begin(), weight.data().end());
  double acc = 0.0;
  for (std::size_t bi = 0; bi < n; ++bi)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t k = (bi * c + ch) * plane + i;
        acc += static_cast<double>(w[bi * plane + i]) * std::fabs(static_cast<double>(a.data()[k]) - b.data()[k]);
      }
  const double inv = 1.0 / static_cast<double>(a.numel());
  return make_op_result("weighted_l1_mean", Shape{1}, {static_cast<float>(acc * inv)}, {a, b},
                        [w = std::move(w), n, c, plane, inv](TensorNode& self) {
                          const auto& ad = self.parents[0]->data;
                          const auto& bd = self.parents[1]->data;
                          const float go = self.grad[0] * static_cast<float>(inv);
                          for (std::size_t k2 = 0; k2 < 2; ++k2) {
                            if (!wants_grad(self, k2)) continue;
                            const float sign = k2 == 0 ? 1.0f : -1.0f;
                            auto& g = self.parents[k2]->ensure_grad();
                            for (std::size_t bi = 0; bi < n; ++bi)
                              for (std::size_t ch = 0; ch < c; ++ch)
                                for (std::size_t i = 0; i < plane; ++i) {
                                  const std::size_t k = (bi * c + ch) * plane + i;
                                  const float d = ad[k] - bd[k];
                                  const float s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
                                  g[k] += sign * go * w[bi * plane + i] * s;
                                }
                          }
                        });
}

Tensor mse_mean(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mse_mean");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    acc += d * d;
  }
  const double inv = 1.0 / static_cast<double>(a.numel());
  return make_op_result("mse_mean", Shape{1}, {static_cast<float>(acc * inv)}, {a, b}, [inv](TensorNode& self) {
    const auto& ad = self.parents[0]->data;
    const auto& bd = self.parents[1]->data;
    const float go = 2.0f * self.grad[0] * static_cast<float>(inv);
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      const float sign = k == 0 ? 1.0f : -1.0f;
      auto& g = self.parents[k]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * go * (ad[i] - bd[i]);
    }
  });
}

} // namespace stss::num
