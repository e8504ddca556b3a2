#pragma once

#include "stss/numerics/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stss::num {

// Named trainable tensors. Iteration order is lexicographic by name, so
// checkpoints and optimizer sweeps are reproducible.
class ParamStore {
public:
  // Registers a new parameter (requires_grad is forced on). Names must be unique.
  Tensor& add(const std::string& name, Tensor value);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t total_count() const;
  // Sum of element counts over parameters whose name starts with prefix.
  std::size_t count_with_prefix(const std::string& prefix) const;
  std::vector<std::string> names() const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

private:
  std::map<std::string, Tensor> params_;
};

// Binary checkpoint: "STSSPARM", u32 version, u32 count, then per entry
// u16 name length + UTF-8 name, u8 rank, u32 extents, little-endian f32 data.
inline constexpr std::uint32_t kParamFileVersion = 1;

void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_params(const ParamStore& params);
ParamStore deserialize_params(const std::vector<std::uint8_t>& bytes);

} // namespace stss::num
