#pragma once

#include "stss/scene/image.hpp"
#include "stss/warp/warp.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace stss::rrm {

using scene::Image;

struct RrmConfig {
  bool enabled = true;
  int rect_count_min = 1;
  int rect_count_max = 4;
  double max_frac = 0.25; // of width and of height
  float weight_hi = 2.0f;
  float weight_lo = 1.0f;
  std::uint64_t seed = 0;
  void validate() const;
};

struct Rect {
  std::size_t x = 0, y = 0, w = 0, h = 0; // may extend past the frame; clipped on use
};

// Network input with the masked copy first, then the untouched original.
inline constexpr std::size_t kAugmentedChannels = 2 * warp::kNetInputChannels;

struct Augmented {
  Image planes;  // kAugmentedChannels x H x W
  Image weights; // 1ch per-pixel loss weight at LR resolution
  std::vector<Rect> rects;
};

// N ~ U{min..max} rectangles with sides in [1, max_frac * dim] at uniform positions.
std::vector<Rect> draw_rects(const RrmConfig& cfg, std::size_t width, std::size_t height, std::mt19937_64& rng);

// Reshading pixels of the target: hole pixels of the nearest warped frame.
Image hole_mask(const Image& net_input);

// weight_hi where hole_mask == 0 or inside a rectangle, weight_lo elsewhere.
Image loss_weights(const Image& hole_mask, const std::vector<Rect>& rects, float weight_hi, float weight_lo);

// Zeroes warped LR, G-buffer and mask channels inside the rectangles of the
// masked copy and concatenates the original.
Augmented augment_with_rects(const Image& net_input, const std::vector<Rect>& rects, const RrmConfig& cfg);

// Training-time augmentation. With enabled=false: input (+) input, all weight_lo.
Augmented augment(const Image& net_input, const RrmConfig& cfg, std::mt19937_64& rng);

// Inference input: no rectangles; the masked copy carries only the real holes,
// which warping has already zeroed, so both halves are the input itself.
Image inference_input(const Image& net_input);

} // namespace stss::rrm
