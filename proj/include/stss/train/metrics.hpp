#pragma once

#include "stss/scene/image.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace stss::train {

using scene::Image;

inline constexpr double kPsnrCap = 99.0;

// Values are clamped to [0, 1] before every metric.
// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B.
Image luma(const Image& rgb);

double mse(const Image& a, const Image& b);
// 10 log10(peak^2 / mse), kPsnrCap for identical images.
double psnr(const Image& a, const Image& b, double peak = 1.0);
double psnr_from_mse(double mse, double peak = 1.0);

// Per-pixel SSIM of the luma planes: 11-tap Gaussian window (sigma 1.5),
// K1 0.01, K2 0.03, L 1, symmetric padding at the borders.
Image ssim_map(const Image& a, const Image& b);
double ssim(const Image& a, const Image& b);

// Binary edge mask (1ch): OpenCV Canny on 8-bit luma (3x3 Sobel, L1
// magnitude, hysteresis between the two thresholds).
Image canny_edges(const Image& rgb, double low = 100.0, double high = 200.0);

// Metrics restricted to pixels where mask > 0.5. SSIM averages the map over
// in-region centres. An empty region sets empty and leaves the values at 0.
struct RegionMetrics {
  bool empty = true;
  std::size_t pixels = 0;
  std::size_t values = 0; // pixels * channels
  double sq_err = 0.0;    // summed over region pixels and channels
  double ssim_sum = 0.0;
  double psnr() const;
  double ssim() const;
  // Pools another frame's region into this one.
  void merge(const RegionMetrics& o);
};
RegionMetrics region_metrics(const Image& a, const Image& b, const Image& mask);

// Nearest-neighbour upscale of a 1ch mask by an integer factor.
Image upscale_mask(const Image& mask, int factor);

} // namespace stss::train
