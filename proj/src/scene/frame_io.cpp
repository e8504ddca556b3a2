#include "stss/scene/frame_io.hpp"

#include "stss/error.hpp"
#include "stss/numerics/byte_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace stss::scene {
namespace {
constexpr char kMagic[8] = {'S', 'T', 'S', 'S', 'F', 'R', 'A', 'M'};
constexpr const char* kHeader = "index role lr hr gbuffer motion mask input";
} // namespace

const char* role_name(FrameRole role) { return role == FrameRole::SF ? "SF" : "EF"; }

FrameRole parse_role(const std::string& text) {
  if (text == "SF") return FrameRole::SF;
  if (text == "EF") return FrameRole::EF;
  throw IoError("unknown frame role '" + text + "'");
}

std::vector<std::uint8_t> encode_frame(const Image& image, FrameRole role) {
  if (image.channels > 0xFFFF) throw ContractError("encode_frame: too many channels");
  if (image.data.size() != image.channels * image.height * image.width)
    throw ContractError("encode_frame: image data does not match its dims");
  num::ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(kFrameFormatVersion);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(role));
  w.le<std::uint16_t>(static_cast<std::uint16_t>(image.channels));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(image.height));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(image.width));
  w.floats(image.data);
  return std::move(w.buffer());
}

Image decode_frame(std::span<const std::uint8_t> bytes, FrameRole* role) {
  num::ByteReader r(bytes, "frame file");
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("frame file: bad magic");
  const auto version = r.le<std::uint32_t>();
  if (version != kFrameFormatVersion) throw IoError("frame file: unsupported version " + std::to_string(version));
  const auto role_byte = r.le<std::uint8_t>();
  if (role_byte > 1) throw IoError("frame file: bad role byte");
  const auto c = r.le<std::uint16_t>();
  const auto h = r.le<std::uint32_t>();
  const auto w = r.le<std::uint32_t>();
  Image img(c, h, w);
  r.floats(img.data);
  if (!r.at_end()) throw IoError("frame file: trailing bytes");
  if (role) *role = static_cast<FrameRole>(role_byte);
  return img;
}

void write_frame(const std::filesystem::path& path, const Image& image, FrameRole role) {
  const auto bytes = encode_frame(image, role);
  num::write_file_bytes(path.string(), bytes);
}

Image read_frame(const std::filesystem::path& path, FrameRole* role) {
  const auto bytes = num::read_file_bytes(path.string());
  try {
    return decode_frame(bytes, role);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

const ManifestRecord& ClipManifest::at(int index) const {
  for (const auto& r : records)
    if (r.index == index) return r;
  throw IoError("manifest has no frame " + std::to_string(index));
}

void write_manifest(const std::filesystem::path& path, const ClipManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : manifest.meta) out << "# " << k << ": " << v << "\n";
  out << kHeader << "\n";
  for (const auto& r : manifest.records)
    out << r.index << ' ' << role_name(r.role) << ' ' << r.lr << ' ' << r.hr << ' ' << r.gbuffer << ' ' << r.motion
        << ' ' << r.mask << ' ' << r.input << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

ClipManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  ClipManifest m;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      auto value = line.substr(colon + 1);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      m.meta[trim(key)] = trim(value);
      continue;
    }
    if (!header_seen) {
      if (line.rfind("index", 0) != 0) throw IoError(path.string() + ": missing column header");
      header_seen = true;
      continue;
    }
    std::istringstream is(line);
    ManifestRecord r;
    std::string role;
    if (!(is >> r.index >> role >> r.lr >> r.hr >> r.gbuffer >> r.motion >> r.mask))
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed record");
    if (!(is >> r.input)) r.input = "-";
    r.role = parse_role(role);
    m.records.push_back(std::move(r));
  }
  if (!header_seen) throw IoError(path.string() + ": empty manifest");
  return m;
}

} // namespace stss::scene
