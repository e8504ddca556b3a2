#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stss::scene {

// Planar float image, channel-major (C x H x W).
struct Image {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  bool empty() const { return data.empty(); }
  std::size_t plane_size() const { return height * width; }
  float& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
  std::span<float> plane(std::size_t c) { return {data.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(std::size_t c) const { return {data.data() + c * plane_size(), plane_size()}; }
  bool same_dims(const Image& o) const { return height == o.height && width == o.width; }
};

// Non-overlapping box average; dims must be divisible by factor.
Image downsample_box(const Image& image, int factor);

// Copies channels [first, first + count).
Image slice_channels(const Image& image, std::size_t first, std::size_t count);

} // namespace stss::scene
