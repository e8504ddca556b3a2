#include "stss/scene/clip.hpp"

#include "stss/error.hpp"
#include "stss/scene/render.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace stss::scene {
namespace {

std::string frame_name(int index, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "frames/%06d_%s.stsf", index, kind);
  return buf;
}

ClipManifest manifest_skeleton(const SceneSpec& scene) {
  ClipManifest m;
  m.meta["scene"] = scene.name;
  m.meta["lr_size"] = std::to_string(scene.lr_width) + "x" + std::to_string(scene.lr_height);
  m.meta["hr_size"] = std::to_string(scene.hr_width()) + "x" + std::to_string(scene.hr_height());
  m.meta["spec"] = "scene.ini";
  return m;
}

void write_frame_files(const ClipFrame& f, const std::filesystem::path& dir, ManifestRecord& r) {
  r.index = f.index;
  r.role = f.role;
  auto put = [&](const Image& img, const char* kind, std::string& slot) {
    if (img.empty()) return;
    slot = frame_name(f.index, kind);
    write_frame(dir / slot, img, f.role);
  };
  put(f.lr, "lr", r.lr);
  put(f.hr, "hr", r.hr);
  put(f.gbuffer, "gb", r.gbuffer);
  put(f.motion, "mv", r.motion);
  put(f.mask, "mask", r.mask);
}

void prepare_dir(const std::filesystem::path& dir, const SceneSpec& scene) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "frames", ec);
  if (ec) throw IoError("cannot create " + (dir / "frames").string() + ": " + ec.message());
  std::ofstream spec(dir / "scene.ini");
  spec << format_scene_spec(scene);
  if (!spec) throw IoError("cannot write scene.ini in " + dir.string());
}

} // namespace

Image render_lr(const SceneSpec& scene, double t) {
  const auto g = render_gbuffer(scene, t, scene.lr_width, scene.lr_height);
  return shade(g.gbuffer, scene, t);
}

Image render_hr(const SceneSpec& scene, double t) {
  const auto g = render_gbuffer(scene, t, 2 * scene.hr_width(), 2 * scene.hr_height());
  return downsample_box(shade(g.gbuffer, scene, t), 2);
}

ClipFrame render_frame(const SceneSpec& scene, int t) {
  ClipFrame f;
  f.index = t;
  f.role = role_of(t);
  const auto g = render_gbuffer(scene, t, scene.lr_width, scene.lr_height);
  f.gbuffer = g.gbuffer;
  if (f.role == FrameRole::SF) f.lr = shade(g.gbuffer, scene, t);
  f.hr = render_hr(scene, t);
  f.motion = Image(3 * kMaxHistory, scene.lr_height, scene.lr_width);
  for (int k = 1; k <= kMaxHistory; ++k) {
    const Image mv = motion_field(scene, t, k, scene.lr_width, scene.lr_height);
    std::copy(mv.data.begin(), mv.data.end(), f.motion.data.begin() + 3 * (k - 1) * mv.plane_size());
  }
  return f;
}

const ClipFrame& Clip::frame(int index) const {
  if (frames.empty() || index < first() || index > last())
    throw ContractError("clip has no frame " + std::to_string(index));
  return frames[static_cast<std::size_t>(index - first())];
}

Clip render_clip(const SceneSpec& scene, int first, int count) {
  scene.validate();
  if (count < 0) throw ContractError("render_clip: negative frame count");
  Clip clip;
  clip.spec = scene;
  clip.frames.reserve(static_cast<std::size_t>(count));
  for (int t = first; t < first + count; ++t) clip.frames.push_back(render_frame(scene, t));
  return clip;
}

ClipManifest write_clip(const SceneSpec& scene, const std::filesystem::path& dir) {
  scene.validate();
  prepare_dir(dir, scene);
  ClipManifest m = manifest_skeleton(scene);
  for (int t = 0; t < scene.frames; ++t) {
    ManifestRecord r;
    write_frame_files(render_frame(scene, t), dir, r);
    m.records.push_back(r);
  }
  write_manifest(dir / kManifestName, m);
  return m;
}

void save_clip(const Clip& clip, const std::filesystem::path& dir) {
  prepare_dir(dir, clip.spec);
  ClipManifest m = manifest_skeleton(clip.spec);
  for (const auto& f : clip.frames) {
    ManifestRecord r;
    write_frame_files(f, dir, r);
    m.records.push_back(r);
  }
  write_manifest(dir / kManifestName, m);
}

Clip load_clip(const std::filesystem::path& dir) {
  const ClipManifest m = read_manifest(dir / kManifestName);
  Clip clip;
  clip.spec = load_scene_spec(dir / "scene.ini");
  int expected = m.records.empty() ? 0 : m.records.front().index;
  for (const auto& r : m.records) {
    if (r.index != expected++) throw IoError(dir.string() + ": manifest frames are not contiguous");
    ClipFrame f;
    f.index = r.index;
    f.role = r.role;
    auto get = [&](const std::string& rel, Image& slot) {
      if (rel != "-") slot = read_frame(dir / rel);
    };
    get(r.lr, f.lr);
    get(r.hr, f.hr);
    get(r.gbuffer, f.gbuffer);
    get(r.motion, f.motion);
    get(r.mask, f.mask);
    clip.frames.push_back(std::move(f));
  }
  return clip;
}

} // namespace stss::scene
