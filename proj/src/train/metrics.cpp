#include "stss/train/metrics.hpp"

#include "stss/error.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace stss::train {

namespace {

void require_rgb_pair(const Image& a, const Image& b, const char* what) {
  if (a.channels != b.channels || !a.same_dims(b))
    throw ContractError(std::string(what) + ": image dims differ");
  if (a.empty()) throw ContractError(std::string(what) + ": empty image");
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

constexpr int kRadius = 5;

std::array<double, 2 * kRadius + 1> gaussian_taps() {
  std::array<double, 2 * kRadius + 1> g{};
  double sum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    g[i + kRadius] = std::exp(-(i * i) / (2.0 * 1.5 * 1.5));
    sum += g[i + kRadius];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Symmetric (half-sample) reflection into [0, n).
std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Separable Gaussian filter of a single plane.
std::vector<double> blur(const std::vector<double>& src, std::size_t h, std::size_t w) {
  static const auto g = gaussian_taps();
  std::vector<double> tmp(h * w), out(h * w);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) acc += g[k + kRadius] * src[y * W + reflect(x + k, W)];
      tmp[y * W + x] = acc;
    }
  for (std::ptrdiff_t y = 0; y < H; ++y)
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) acc += g[k + kRadius] * tmp[reflect(y + k, H) * W + x];
      out[y * W + x] = acc;
    }
  return out;
}

} // namespace

Image luma(const Image& rgb) {
  if (rgb.channels != 3) throw ContractError("luma expects 3 channels");
  Image out(1, rgb.height, rgb.width);
  for (std::size_t i = 0; i < rgb.plane_size(); ++i)
    out.data[i] = 0.299f * clamp01(rgb.plane(0)[i]) + 0.587f * clamp01(rgb.plane(1)[i]) +
                  0.114f * clamp01(rgb.plane(2)[i]);
  return out;
}

double mse(const Image& a, const Image& b) {
  require_rgb_pair(a, b, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(clamp01(a.data[i])) - clamp01(b.data[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr_from_mse(double m, double peak) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

double psnr(const Image& a, const Image& b, double peak) { return psnr_from_mse(mse(a, b), peak); }

Image ssim_map(const Image& a, const Image& b) {
  require_rgb_pair(a, b, "ssim");
  const Image la = a.channels == 3 ? luma(a) : a, lb = b.channels == 3 ? luma(b) : b;
  if (la.channels != 1) throw ContractError("ssim expects 1 or 3 channels");
  const std::size_t h = la.height, w = la.width, n = h * w;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = clamp01(la.data[i]);
    y[i] = clamp01(lb.data[i]);
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = blur(x, h, w), my = blur(y, h, w), sxx = blur(xx, h, w), syy = blur(yy, h, w),
             sxy = blur(xy, h, w);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  Image out(1, h, w);
  for (std::size_t i = 0; i < n; ++i) {
    const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
    out.data[i] = static_cast<float>(((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2)));
  }
  return out;
}

double ssim(const Image& a, const Image& b) {
  const Image m = ssim_map(a, b);
  double acc = 0.0;
  for (float v : m.data) acc += v;
  return acc / static_cast<double>(m.data.size());
}

Image canny_edges(const Image& rgb, double low, double high) {
  if (!(low >= 0.0 && high >= low)) throw ContractError("canny thresholds must satisfy 0 <= low <= high");
  const Image l = luma(rgb);
  cv::Mat gray(static_cast<int>(l.height), static_cast<int>(l.width), CV_8UC1);
  for (std::size_t i = 0; i < l.data.size(); ++i)
    gray.data[i] = static_cast<std::uint8_t>(std::lround(255.0 * l.data[i]));
  cv::Mat edges;
  cv::Canny(gray, edges, low, high);
  Image out(1, l.height, l.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = edges.data[i] ? 1.0f : 0.0f;
  return out;
}

double RegionMetrics::psnr() const { return empty ? 0.0 : psnr_from_mse(sq_err / static_cast<double>(values)); }

double RegionMetrics::ssim() const { return empty ? 0.0 : ssim_sum / static_cast<double>(pixels); }

void RegionMetrics::merge(const RegionMetrics& o) {
  if (o.empty) return;
  empty = false;
  pixels += o.pixels;
  values += o.values;
  sq_err += o.sq_err;
  ssim_sum += o.ssim_sum;
}

RegionMetrics region_metrics(const Image& a, const Image& b, const Image& mask) {
  require_rgb_pair(a, b, "region_metrics");
  if (mask.channels != 1 || !mask.same_dims(a)) throw ContractError("region_metrics: mask must be 1ch at image size");
  RegionMetrics r;
  const Image s = ssim_map(a, b);
  const std::size_t plane = a.plane_size();
  for (std::size_t i = 0; i < plane; ++i) {
    if (!(mask.data[i] > 0.5f)) continue;
    ++r.pixels;
    r.ssim_sum += s.data[i];
    for (std::size_t c = 0; c < a.channels; ++c) {
      const double d = static_cast<double>(clamp01(a.data[c * plane + i])) - clamp01(b.data[c * plane + i]);
      r.sq_err += d * d;
      ++r.values;
    }
  }
  r.empty = r.pixels == 0;
  return r;
}

Image upscale_mask(const Image& mask, int factor) {
  if (mask.channels != 1 || factor < 1) throw ContractError("upscale_mask expects a 1ch mask and factor >= 1");
  const auto f = static_cast<std::size_t>(factor);
  Image out(1, mask.height * f, mask.width * f);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) out.at(0, y, x) = mask.at(0, y / f, x / f);
  return out;
}

} // namespace stss::train
