#include "stss/rrm/rrm.hpp"

#include "stss/error.hpp"

#include <algorithm>
#include <cmath>

namespace stss::rrm {
namespace {

void check_input(const Image& in) {
  if (in.channels != warp::kNetInputChannels)
    throw ContractError("rrm: expected a " + std::to_string(warp::kNetInputChannels) + "-channel network input, got " +
                        std::to_string(in.channels));
}

Image duplicate(const Image& in) {
  Image out(kAugmentedChannels, in.height, in.width);
  std::copy(in.data.begin(), in.data.end(), out.data.begin());
  std::copy(in.data.begin(), in.data.end(), out.data.begin() + static_cast<long>(in.data.size()));
  return out;
}

template <typename F>
void for_each_rect_pixel(const std::vector<Rect>& rects, std::size_t w, std::size_t h, F&& f) {
  for (const auto& r : rects)
    for (std::size_t y = r.y; y < std::min(h, r.y + r.h); ++y)
      for (std::size_t x = r.x; x < std::min(w, r.x + r.w); ++x) f(y, x);
}

} // namespace

void RrmConfig::validate() const {
  if (!(max_frac > 0.0 && max_frac <= 0.25)) throw ConfigError("rrm: max_frac must be in (0, 0.25]");
  if (rect_count_min < 0 || rect_count_min > rect_count_max)
    throw ConfigError("rrm: rect_count_min must be >= 0 and <= rect_count_max");
  if (!(weight_hi >= 0.0f && weight_lo >= 0.0f)) throw ConfigError("rrm: loss weights must be non-negative");
}

std::vector<Rect> draw_rects(const RrmConfig& cfg, std::size_t width, std::size_t height, std::mt19937_64& rng) {
  cfg.validate();
  const auto max_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.max_frac * width)));
  const auto max_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.max_frac * height)));
  std::uniform_int_distribution<int> count(cfg.rect_count_min, cfg.rect_count_max);
  std::uniform_int_distribution<std::size_t> rw(1, max_w), rh(1, max_h), px(0, width - 1), py(0, height - 1);
  std::vector<Rect> rects(static_cast<std::size_t>(count(rng)));
  for (auto& r : rects) {
    r.w = rw(rng);
    r.h = rh(rng);
    r.x = px(rng);
    r.y = py(rng);
  }
  return rects;
}

Image hole_mask(const Image& net_input) {
  check_input(net_input);
  return scene::slice_channels(net_input, warp::kMasks, 1);
}

Image loss_weights(const Image& holes, const std::vector<Rect>& rects, float weight_hi, float weight_lo) {
  if (holes.channels != 1) throw ContractError("loss_weights: hole mask must have one channel");
  Image w(1, holes.height, holes.width, weight_lo);
  for (std::size_t i = 0; i < w.data.size(); ++i)
    if (holes.data[i] < 0.5f) w.data[i] = weight_hi;
  for_each_rect_pixel(rects, w.width, w.height, [&](std::size_t y, std::size_t x) { w.at(0, y, x) = weight_hi; });
  return w;
}

Augmented augment_with_rects(const Image& net_input, const std::vector<Rect>& rects, const RrmConfig& cfg) {
  check_input(net_input);
  Augmented a;
  a.rects = rects;
  a.planes = duplicate(net_input);
  // Every channel of the masked copy is zeroed: warped LR, G-buffer and masks.
  for_each_rect_pixel(rects, net_input.width, net_input.height, [&](std::size_t y, std::size_t x) {
    for (std::size_t c = 0; c < warp::kNetInputChannels; ++c) a.planes.at(c, y, x) = 0.0f;
  });
  a.weights = loss_weights(hole_mask(net_input), rects, cfg.weight_hi, cfg.weight_lo);
  return a;
}

Augmented augment(const Image& net_input, const RrmConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  check_input(net_input);
  if (!cfg.enabled) {
    Augmented a;
    a.planes = duplicate(net_input);
    a.weights = Image(1, net_input.height, net_input.width, cfg.weight_lo);
    return a;
  }
  return augment_with_rects(net_input, draw_rects(cfg, net_input.width, net_input.height, rng), cfg);
}

Image inference_input(const Image& net_input) {
  check_input(net_input);
  return duplicate(net_input);
}

} // namespace stss::rrm
