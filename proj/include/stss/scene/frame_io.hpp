#pragma once

#include "stss/scene/image.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace stss::scene {

// Even LR-timebase frames are rendered (SF), odd ones are extrapolated (EF).
enum class FrameRole : std::uint8_t { SF = 0, EF = 1 };

inline FrameRole role_of(int t) { return t % 2 == 0 ? FrameRole::SF : FrameRole::EF; }
const char* role_name(FrameRole role);
FrameRole parse_role(const std::string& text);

inline constexpr std::uint32_t kFrameFormatVersion = 1;

// "STSSFRAM", u32 version, u8 role, u16 channels, u32 H, u32 W, f32 planar.
std::vector<std::uint8_t> encode_frame(const Image& image, FrameRole role);
Image decode_frame(std::span<const std::uint8_t> bytes, FrameRole* role = nullptr);
void write_frame(const std::filesystem::path& path, const Image& image, FrameRole role);
Image read_frame(const std::filesystem::path& path, FrameRole* role = nullptr);

// One record per frame. Paths are relative to the manifest directory; "-"
// marks an absent file (EF frames have no LR color).
struct ManifestRecord {
  int index = 0;
  FrameRole role = FrameRole::SF;
  std::string lr = "-";
  std::string hr = "-";
  std::string gbuffer = "-";
  std::string motion = "-";
  std::string mask = "-";
  std::string input = "-"; // cached network input, written by preprocessing
};

// Text format: "# key: value" metadata lines, a column header line, then one
// whitespace-separated record per line.
struct ClipManifest {
  std::map<std::string, std::string> meta;
  std::vector<ManifestRecord> records;

  const ManifestRecord& at(int index) const;
};

inline constexpr const char* kManifestName = "manifest.txt";

void write_manifest(const std::filesystem::path& path, const ClipManifest& manifest);
ClipManifest read_manifest(const std::filesystem::path& path);

} // namespace stss::scene
