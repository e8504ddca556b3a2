#pragma once

#include "stss/net/stssnet.hpp"
#include "stss/numerics/param_store.hpp"
#include "stss/rrm/rrm.hpp"
#include "stss/scene/frame_io.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace stss::train {

// Whether the step decay counts epochs or optimizer steps.
enum class DecayUnit { Epoch, Iteration };

struct TrainConfig {
  int epochs = 20;
  float lr = 1e-4f;
  int decay_step = 50;
  float decay_gamma = 0.9f;
  DecayUnit decay_unit = DecayUnit::Epoch;
  int crop = 64;           // square HR crop side; the LR crop is crop / 2
  int crops_per_image = 4; // one optimizer step per image, crops form the batch
  float w_p = 0.01f;
  rrm::RrmConfig rrm;
  std::uint64_t seed = 1;
  int frame_stride = 1;     // keep every k-th eligible frame of each clip
  int checkpoint_every = 0; // epochs between intermediate checkpoints; 0 = off
  void validate() const;
};

// Learning rate in effect for a given epoch (0-based) and global step.
float scheduled_lr(const TrainConfig& cfg, int epoch, int step);

// One preprocessed frame: cached 21ch network input and HR ground truth.
struct Sample {
  std::string scene;
  int index = 0;
  scene::FrameRole role = scene::FrameRole::SF;
  std::filesystem::path input;
  std::filesystem::path hr;
};

// Every frame of each clip that has a cached input. Throws IoError for a
// clip that was never preprocessed.
std::vector<Sample> list_samples(const std::vector<std::filesystem::path>& clip_dirs, int stride = 1);

struct LossRecord {
  int step = 0;
  int epoch = 0;
  float lr = 0.0f;
  double loss = 0.0;
};

struct TrainHooks {
  std::function<void(const LossRecord&)> on_step;
  // Called after every checkpoint_every-th epoch with the current params.
  std::function<void(int epoch, const num::ParamStore&)> on_checkpoint;
  // Where a non-finite loss dumps the offending batch; empty = no dump.
  std::filesystem::path dump_dir;
};

struct TrainResult {
  num::ParamStore params;
  std::vector<LossRecord> curve;
};

// Trains from scratch. The sample order is reshuffled every epoch and SF
// and EF frames share one stream and one set of weights.
TrainResult train(const std::vector<Sample>& samples, const TrainConfig& cfg, const net::NetConfig& net_cfg,
                  const TrainHooks& hooks = {});

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossRecord>& curve);

// Training run description read from an INI file: [data] clips, [train],
// [rrm] and [net] sections. Clip paths are relative to the file.
struct RunConfig {
  std::vector<std::filesystem::path> clips;
  TrainConfig train;
  net::NetConfig net;
};
RunConfig load_run_config(const std::filesystem::path& path);

} // namespace stss::train
