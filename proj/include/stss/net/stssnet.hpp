#pragma once

#include "stss/erm/erm.hpp"
#include "stss/numerics/param_store.hpp"
#include "stss/numerics/tensor.hpp"
#include "stss/scene/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stss::net {

using num::Tensor;

struct NetConfig {
  std::string preset = "desk";
  std::vector<int> encoder{24, 32, 48}; // channels per level, level 0 = LR resolution
  std::vector<int> decoder{32, 24, 16}; // decoder[j] runs at level L-1-j
  int head = 16;                        // channels of the HR-resolution conv
  std::array<int, 3> history{16, 16, 16};
  int history_fuse_level = 1;
  bool use_erm = true;
  erm::ErmConfig erm{5, 32, 1};
  float slope = 0.1f; // leaky ReLU
  int upscale_factor = 2;
  std::uint64_t seed = 1;

  int levels() const { return static_cast<int>(encoder.size()); }
  void validate() const;
};

NetConfig desk_preset();
NetConfig paper_preset();

// Sidecar text: one key=value per line.
std::string format_net_config(const NetConfig& cfg);
NetConfig parse_net_config(const std::string& text);

// Maps the raw 21-channel network input to network features: depth becomes
// 1 / (1 + depth) so the sky constant lands near 0.
scene::Image prepare_net_input(const scene::Image& net_input);

// Older warped frames of the original copy and their masks: (N, 8, H, W).
struct HistoryInput {
  Tensor planes;
};
HistoryInput history_input(const Tensor& augmented);

// Stacks per-sample images into an (N, C, H, W) tensor without gradient.
Tensor to_tensor(const std::vector<scene::Image>& images);
scene::Image to_image(const Tensor& t, std::size_t n = 0);

void init_params(num::ParamStore& params, const NetConfig& cfg);

// augmented: (N, 42, H, W) masked copy then original copy. Returns (N, 3, 2H, 2W).
Tensor forward(const Tensor& augmented, const HistoryInput& history, const num::ParamStore& params,
               const NetConfig& cfg);
Tensor forward(const Tensor& augmented, const num::ParamStore& params, const NetConfig& cfg);

struct ComponentTable {
  std::uint64_t backbone = 0;
  std::uint64_t history = 0;
  std::uint64_t erm = 0;
  std::uint64_t total() const { return backbone + history + erm; }
};

ComponentTable count_params(const NetConfig& cfg);
// Convolution and attention multiply-adds for an LR input of height x width.
ComponentTable count_flops(const NetConfig& cfg, std::uint64_t height, std::uint64_t width);

// Checkpoint = parameter file at path plus the config sidecar at path + ".cfg".
void save_checkpoint(const std::filesystem::path& path, const num::ParamStore& params, const NetConfig& cfg);
struct Checkpoint {
  num::ParamStore params;
  NetConfig cfg;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::filesystem::path config_sidecar(const std::filesystem::path& path);

} // namespace stss::net
