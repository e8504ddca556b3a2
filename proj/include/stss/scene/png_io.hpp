#pragma once

#include "stss/scene/image.hpp"

#include <filesystem>

namespace stss::scene {

// 8-bit RGB (3ch) or gray (1ch) PNG. Linear values are clamped to [0,1] and
// encoded with a 1/2.2 gamma.
void write_png(const std::filesystem::path& path, const Image& image);

} // namespace stss::scene
