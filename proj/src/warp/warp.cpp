#include "stss/warp/warp.hpp"

#include "stss/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace stss::warp {
namespace {

// Matches the synthesizer's tolerance for samples on the border pixels.
constexpr double kBoundsSlack = 1e-3;

struct Taps {
  std::size_t x0, x1, y0, y1;
  double fx, fy;
};

// Bilinear taps at pixel-center coordinates (x, y); false when outside the frame.
bool taps_at(double x, double y, std::size_t w, std::size_t h, Taps& t) {
  if (!(x >= -kBoundsSlack && y >= -kBoundsSlack && x <= w - 1.0 + kBoundsSlack && y <= h - 1.0 + kBoundsSlack))
    return false;
  x = std::clamp(x, 0.0, w - 1.0);
  y = std::clamp(y, 0.0, h - 1.0);
  t.x0 = static_cast<std::size_t>(std::floor(x));
  t.y0 = static_cast<std::size_t>(std::floor(y));
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  t.fx = x - static_cast<double>(t.x0);
  t.fy = y - static_cast<double>(t.y0);
  return true;
}

double sample(const Image& img, std::size_t c, const Taps& t) {
  const double a = img.at(c, t.y0, t.x0), b = img.at(c, t.y0, t.x1);
  const double d = img.at(c, t.y1, t.x0), e = img.at(c, t.y1, t.x1);
  // Zero-weight taps are skipped so integer positions reproduce the source exactly.
  const double top = t.fx == 0.0 ? a : (1.0 - t.fx) * a + t.fx * b;
  const double bottom = t.fx == 0.0 ? d : (1.0 - t.fx) * d + t.fx * e;
  return t.fy == 0.0 ? top : (1.0 - t.fy) * top + t.fy * bottom;
}

// All taps with non-zero weight have valid == 1.
bool taps_valid(const Image& field, std::size_t valid_channel, const Taps& t) {
  auto ok = [&](std::size_t y, std::size_t x) { return field.at(valid_channel, y, x) > 0.5f; };
  if (!ok(t.y0, t.x0)) return false;
  if (t.fx > 0.0 && !ok(t.y0, t.x1)) return false;
  if (t.fy > 0.0 && !ok(t.y1, t.x0)) return false;
  if (t.fx > 0.0 && t.fy > 0.0 && !ok(t.y1, t.x1)) return false;
  return true;
}

void check_motion(const Image& motion, const Image& like, const char* what) {
  if (motion.channels < 3) throw ContractError(std::string(what) + ": motion field needs 3 channels");
  if (!motion.same_dims(like)) throw ContractError(std::string(what) + ": motion field and image dims differ");
}

Image step_field(const scene::ClipFrame& f) {
  if (f.motion.channels < 3) throw ContractError("frame " + std::to_string(f.index) + " has no motion field");
  return scene::slice_channels(f.motion, 0, 3);
}

} // namespace

HistorySelection select_history(int t, FrameRole role) {
  if (t < 5) throw InsufficientHistoryError("frame " + std::to_string(t) + " has fewer than 5 history frames");
  const int first = role == FrameRole::SF ? t : t - 1;
  HistorySelection h;
  for (int i = 0; i < 3; ++i) {
    h.sources[i] = first - 2 * i;
    h.chain_lengths[i] = t - h.sources[i];
  }
  return h;
}

Warped warp(const Image& source, const Image& motion) {
  check_motion(motion, source, "warp");
  const std::size_t h = source.height, w = source.width;
  Warped out{Image(source.channels, h, w), Image(1, h, w)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (motion.at(2, y, x) < 0.5f) continue;
      Taps t;
      if (!taps_at(x + static_cast<double>(motion.at(0, y, x)), y + static_cast<double>(motion.at(1, y, x)), w, h, t))
        continue;
      out.mask.at(0, y, x) = 1.0f;
      for (std::size_t c = 0; c < source.channels; ++c) out.image.at(c, y, x) = static_cast<float>(sample(source, c, t));
    }
  return out;
}

Image identity_motion(std::size_t height, std::size_t width) {
  Image m(3, height, width);
  std::fill(m.data.begin() + 2 * m.plane_size(), m.data.end(), 1.0f);
  return m;
}

Image compose_motion(const std::vector<Image>& steps) {
  if (steps.empty()) throw ContractError("compose_motion: needs at least one field");
  for (const auto& s : steps) check_motion(s, steps.front(), "compose_motion");
  const std::size_t h = steps.front().height, w = steps.front().width;
  if (steps.size() == 1) return scene::slice_channels(steps.front(), 0, 3);
  Image out(3, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const Image& first = steps.front();
      double px = x + static_cast<double>(first.at(0, y, x));
      double py = y + static_cast<double>(first.at(1, y, x));
      bool valid = first.at(2, y, x) > 0.5f;
      for (std::size_t k = 1; k < steps.size() && valid; ++k) {
        Taps t;
        if (!taps_at(px, py, w, h, t) || !taps_valid(steps[k], 2, t)) {
          valid = false;
          break;
        }
        px += sample(steps[k], 0, t);
        py += sample(steps[k], 1, t);
      }
      if (valid) {
        Taps t;
        valid = taps_at(px, py, w, h, t);
      }
      out.at(0, y, x) = static_cast<float>(px - x);
      out.at(1, y, x) = static_cast<float>(py - y);
      out.at(2, y, x) = valid ? 1.0f : 0.0f;
    }
  return out;
}

Image motion_chain(const scene::Clip& clip, int t, int k) {
  if (k < 0) throw ContractError("motion_chain: negative chain length");
  const auto& target = clip.frame(t);
  if (k == 0) return identity_motion(target.gbuffer.height, target.gbuffer.width);
  std::vector<Image> steps;
  for (int i = 0; i < k; ++i) steps.push_back(step_field(clip.frame(t - i)));
  return compose_motion(steps);
}

std::string net_input_layout() {
  return "warped_lr0:0-2 warped_lr1:3-5 warped_lr2:6-8 base_color:9-11 normal:12-14 depth:15 metallic:16 "
         "roughness:17 mask0:18 mask1:19 mask2:20";
}

NetInput build_net_input(const scene::Clip& clip, int t) {
  const auto& target = clip.frame(t);
  const HistorySelection sel = select_history(t, target.role);
  const std::size_t h = target.gbuffer.height, w = target.gbuffer.width;
  NetInput in{t, target.role, Image(kNetInputChannels, h, w)};
  auto put = [&](const Image& img, std::size_t channel) {
    if (img.height != h || img.width != w) throw ContractError("build_net_input: plane dims differ");
    std::copy(img.data.begin(), img.data.end(), in.planes.data.begin() + channel * in.planes.plane_size());
  };
  for (int i = 0; i < 3; ++i) {
    const auto& src = clip.frame(sel.sources[i]);
    if (src.lr.empty()) throw ContractError("build_net_input: frame " + std::to_string(src.index) + " has no LR color");
    const Warped wp = warp(src.lr, motion_chain(clip, t, sel.chain_lengths[i]));
    put(wp.image, kWarpedLr + 3 * i);
    put(wp.mask, kMasks + i);
  }
  put(target.gbuffer, kGBuffer);
  return in;
}

void preprocess_clip_dir(const std::filesystem::path& dir) {
  scene::ClipManifest m = scene::read_manifest(dir / scene::kManifestName);
  const scene::Clip clip = scene::load_clip(dir);
  for (auto& r : m.records) {
    if (r.index < 5 || r.index < clip.first() + 5) continue;
    const NetInput in = build_net_input(clip, r.index);
    char name[64];
    std::snprintf(name, sizeof name, "frames/%06d_mask.stsf", r.index);
    r.mask = name;
    scene::write_frame(dir / r.mask, scene::slice_channels(in.planes, kMasks, 3), r.role);
    std::snprintf(name, sizeof name, "frames/%06d_in.stsf", r.index);
    r.input = name;
    scene::write_frame(dir / r.input, in.planes, r.role);
  }
  m.meta["layout"] = net_input_layout();
  scene::write_manifest(dir / scene::kManifestName, m);
}

} // namespace stss::warp
