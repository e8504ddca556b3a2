#include "stss/numerics/param_store.hpp"

#include "stss/error.hpp"
#include "stss/numerics/byte_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace stss::num {
namespace {
constexpr char kMagic[8] = {'S', 'T', 'S', 'S', 'P', 'A', 'R', 'M'};
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

Tensor& ParamStore::add(const std::string& name, Tensor value) {
  if (name.empty() || name.size() > 0xFFFF) throw ContractError("param store: invalid parameter name");
  if (!value.defined()) throw ContractError("param store: undefined tensor for " + name);
  auto [it, inserted] = params_.emplace(name, std::move(value));
  if (!inserted) throw ContractError("param store: duplicate parameter name " + name);
  it->second.set_requires_grad(true);
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("param store: no parameter named " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("param store: no parameter named " + name);
  return it->second;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

std::size_t ParamStore::count_with_prefix(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_)
    if (name.rfind(prefix, 0) == 0) n += t.numel();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

std::vector<std::uint8_t> serialize_params(const ParamStore& params) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.le<std::uint32_t>(kParamFileVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    if (t.rank() > 255) throw ContractError("param store: rank too large for " + name);
    w.le<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) w.le<std::uint32_t>(static_cast<std::uint32_t>(e));
    w.floats(t.data());
  }
  return std::move(w.buffer());
}

ParamStore deserialize_params(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "param file");
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("param file: bad magic");
  const auto version = r.le<std::uint32_t>();
  if (version != kParamFileVersion) throw IoError("param file: unsupported version " + std::to_string(version));
  const auto count = r.le<std::uint32_t>();
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    const auto rank = r.le<std::uint8_t>();
    Shape shape(rank);
    for (auto& e : shape) e = r.le<std::uint32_t>();
    std::vector<float> data(shape_numel(shape));
    r.floats(data);
    require_finite(data, "param file");
    store.add(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!r.at_end()) throw IoError("param file: trailing bytes");
  return store;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
  write_file_bytes(path.string(), serialize_params(params));
}

ParamStore load_params(const std::filesystem::path& path) { return deserialize_params(read_file_bytes(path.string())); }

} // namespace stss::num
