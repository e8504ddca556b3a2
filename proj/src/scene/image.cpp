#include "stss/scene/image.hpp"

#include "stss/error.hpp"

#include <string>

namespace stss::scene {

Image downsample_box(const Image& image, int factor) {
  if (factor < 1) throw ContractError("downsample_box: factor must be >= 1");
  const auto f = static_cast<std::size_t>(factor);
  if (image.height % f || image.width % f)
    throw ContractError("downsample_box: " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                        " is not divisible by " + std::to_string(factor));
  Image out(image.channels, image.height / f, image.width / f);
  const double inv = 1.0 / static_cast<double>(f * f);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x) {
        double acc = 0.0;
        for (std::size_t dy = 0; dy < f; ++dy)
          for (std::size_t dx = 0; dx < f; ++dx) acc += image.at(c, y * f + dy, x * f + dx);
        out.at(c, y, x) = static_cast<float>(acc * inv);
      }
  return out;
}

Image slice_channels(const Image& image, std::size_t first, std::size_t count) {
  if (first + count > image.channels) throw ContractError("slice_channels: channel range out of bounds");
  Image out(count, image.height, image.width);
  std::copy(image.data.begin() + static_cast<long>(first * image.plane_size()),
            image.data.begin() + static_cast<long>((first + count) * image.plane_size()), out.data.begin());
  return out;
}

} // namespace stss::scene
