#pragma once

#include "stss/scene/clip.hpp"
#include "stss/scene/frame_io.hpp"
#include "stss/scene/image.hpp"

#include <array>
#include <string>
#include <vector>

namespace stss::warp {

using scene::FrameRole;
using scene::Image;

// Sources for the three warped history frames, nearest first, and the number
// of per-step motion fields chained from each source to t.
struct HistorySelection {
  std::array<int, 3> sources{};
  std::array<int, 3> chain_lengths{};
};

// SF: {t, t-2, t-4}; EF: {t-1, t-3, t-5}. t < 5 throws InsufficientHistoryError.
HistorySelection select_history(int t, FrameRole role);

struct Warped {
  Image image; // same channel count as the source
  Image mask;  // 1ch, 1 = valid source sample
};

// Backward warp: out(p) = bilinear(source, p + mv(p)). motion is 3ch
// (dx, dy, valid). Invalid or out-of-bounds samples give mask 0 and value 0.
Warped warp(const Image& source, const Image& motion);

// Chains per-step fields: steps[0] maps t -> t-1, steps[i] maps t-i -> t-i-1
// on the grid of frame t-i. Each later field is bilinearly resampled at the
// running position; the result is invalid wherever any step (or any
// contributing bilinear neighbour of it) is invalid or the position leaves
// the frame.
Image compose_motion(const std::vector<Image>& steps);

// Zero displacement, all valid.
Image identity_motion(std::size_t height, std::size_t width);

// t -> t-k field composed from the clip's per-step fields (k = 0 gives identity).
Image motion_chain(const scene::Clip& clip, int t, int k);

// Channel layout of the assembled network input.
inline constexpr std::size_t kWarpedLr = 0;  // 3 frames x 3ch, nearest first
inline constexpr std::size_t kGBuffer = 9;   // 9ch target-time G-buffer
inline constexpr std::size_t kMasks = 18;    // 3 masks, nearest first
inline constexpr std::size_t kNetInputChannels = 21;

std::string net_input_layout();

struct NetInput {
  int index = 0;
  FrameRole role = FrameRole::SF;
  Image planes; // kNetInputChannels x H x W at LR resolution
};

NetInput build_net_input(const scene::Clip& clip, int t);

// Writes per-frame masks (3ch) and network inputs for every frame with
// enough history, filling the mask/input columns of the manifest.
void preprocess_clip_dir(const std::filesystem::path& dir);

} // namespace stss::warp
