#pragma once

#include "stss/net/stssnet.hpp"
#include "stss/scene/frame_io.hpp"
#include "stss/scene/image.hpp"
#include "stss/scene/scene_spec.hpp"
#include "stss/train/metrics.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace stss::train {

// Maps a raw 21ch network input to the 3ch HR frame.
using Predictor = std::function<Image(const Image& net_input)>;

// Bilinear upscale of the nearest warped LR frame; holes stay black.
Image baseline_predict(const Image& net_input);
Predictor baseline_predictor();
Predictor model_predictor(const net::Checkpoint& ckpt);

// LR pixels (1ch) with no valid warped colour in the most recent warped
// history frame: t-1 for EF, t-2 for SF.
Image hole_region(const Image& net_input, scene::FrameRole role);

struct EvalRow {
  std::string scene;
  scene::FrameRole role = scene::FrameRole::SF;
  int frames = 0;
  double psnr_sum = 0.0; // per-frame PSNR summed
  double ssim_sum = 0.0;
  RegionMetrics edge;    // pooled over frames
  RegionMetrics hole;
  double psnr() const { return frames ? psnr_sum / frames : 0.0; }
  double ssim() const { return frames ? ssim_sum / frames : 0.0; }
  void merge(const EvalRow& o);
};

struct EvalReport {
  std::vector<EvalRow> rows; // per scene: SF then EF
  double ms_per_frame = 0.0; // predictor wall clock
  // Rows with the given role merged across scenes; all rows if role is null.
  EvalRow combined(const scene::FrameRole* role = nullptr) const;
};

// Runs the predictor over every preprocessed frame of the clip. If out_dir
// is set, predictions are written there as frames and, optionally, PNGs.
EvalReport evaluate(const std::filesystem::path& clip_dir, const Predictor& predict,
                    const std::filesystem::path& out_dir = {}, bool png = false);
EvalReport evaluate(const std::vector<std::filesystem::path>& clip_dirs, const Predictor& predict);

// CSV: scene,role,psnr,ssim,edge_psnr,edge_ssim,hole_psnr,hole_ssim; empty
// regions print as nan. No timing, so same inputs give identical bytes.
std::string format_report_csv(const EvalReport& report);

struct BenchRow {
  std::size_t lr_width = 0, lr_height = 0;
  int samples = 0;
  double lr_ms = 0.0;      // LR render
  double gbuffer_ms = 0.0; // G-buffer pass
  double warp_ms = 0.0;    // history warping into the network input
  double network_ms = 0.0; // input preparation plus forward pass
};
// Medians over `samples` timed frames of the scene at its LR size.
BenchRow bench(const net::Checkpoint& ckpt, const scene::SceneSpec& scene, int samples = 100);
std::string format_bench_table(const std::vector<BenchRow>& rows);

} // namespace stss::train
