#pragma once

#include "stss/scene/frame_io.hpp"
#include "stss/scene/image.hpp"
#include "stss/scene/scene_spec.hpp"

#include <filesystem>
#include <vector>

namespace stss::scene {

inline constexpr int kMaxHistory = 5;

// Everything the synthesizer emits for one LR-timebase frame.
struct ClipFrame {
  int index = 0;
  FrameRole role = FrameRole::SF;
  Image lr;      // 3ch at LR resolution; empty for EF frames
  Image hr;      // 3ch ground truth at HR resolution
  Image gbuffer; // 9ch at LR resolution
  Image motion;  // 3 * kMaxHistory channels: (dx, dy, valid) for t->t-1 .. t->t-5
  Image mask;    // filled by preprocessing; 3ch (one per history frame)
};

// LR: one sample per pixel. HR: rendered at 2x the HR size per axis and box
// downsampled, i.e. 2x2 samples per HR pixel.
ClipFrame render_frame(const SceneSpec& scene, int t);
Image render_hr(const SceneSpec& scene, double t);
Image render_lr(const SceneSpec& scene, double t);

struct Clip {
  SceneSpec spec;
  std::vector<ClipFrame> frames; // frames[i].index == first + i

  int first() const { return frames.empty() ? 0 : frames.front().index; }
  int last() const { return frames.empty() ? -1 : frames.back().index; }
  const ClipFrame& frame(int index) const;
};

Clip render_clip(const SceneSpec& scene, int first, int count);

// Renders every frame of the scene into dir and writes the manifest.
ClipManifest write_clip(const SceneSpec& scene, const std::filesystem::path& dir);
void save_clip(const Clip& clip, const std::filesystem::path& dir);
Clip load_clip(const std::filesystem::path& dir);

} // namespace stss::scene
