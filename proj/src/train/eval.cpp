#include "stss/train/eval.hpp"

#include "stss/error.hpp"
#include "stss/numerics/ops.hpp"
#include "stss/rrm/rrm.hpp"
#include "stss/scene/clip.hpp"
#include "stss/scene/png_io.hpp"
#include "stss/scene/render.hpp"
#include "stss/warp/warp.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace stss::train {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using scene::FrameRole;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace

Image baseline_predict(const Image& net_input) {
  if (net_input.channels != warp::kNetInputChannels) throw ContractError("baseline expects the 21ch network input");
  const Image lr = scene::slice_channels(net_input, warp::kWarpedLr, 3);
  return net::to_image(num::bilinear_upsample2(net::to_tensor({lr})));
}

Predictor baseline_predictor() { return baseline_predict; }

Predictor model_predictor(const net::Checkpoint& ckpt) {
  return [ckpt](const Image& net_input) {
    const Image x = rrm::inference_input(net::prepare_net_input(net_input));
    return net::to_image(net::forward(net::to_tensor({x}), ckpt.params, ckpt.cfg));
  };
}

Image hole_region(const Image& net_input, FrameRole role) {
  if (net_input.channels != warp::kNetInputChannels) throw ContractError("hole_region expects the 21ch network input");
  const std::size_t channel = warp::kMasks + (role == FrameRole::EF ? 0 : 1);
  Image out(1, net_input.height, net_input.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = net_input.plane(channel)[i] > 0.5f ? 0.0f : 1.0f;
  return out;
}

void EvalRow::merge(const EvalRow& o) {
  frames += o.frames;
  psnr_sum += o.psnr_sum;
  ssim_sum += o.ssim_sum;
  edge.merge(o.edge);
  hole.merge(o.hole);
}

EvalRow EvalReport::combined(const FrameRole* role) const {
  EvalRow out;
  out.scene = "all";
  if (role) out.role = *role;
  for (const auto& r : rows)
    if (!role || r.role == *role) out.merge(r);
  return out;
}

EvalReport evaluate(const fs::path& clip_dir, const Predictor& predict, const fs::path& out_dir, bool png) {
  const scene::ClipManifest m = scene::read_manifest(clip_dir / scene::kManifestName);
  if (!m.meta.count("layout")) throw IoError(clip_dir.string() + ": clip has not been preprocessed");
  const auto it = m.meta.find("scene");
  const std::string name = it != m.meta.end() ? it->second : clip_dir.filename().string();
  if (!out_dir.empty()) fs::create_directories(out_dir);

  EvalReport report;
  EvalRow rows[2];
  for (int r = 0; r < 2; ++r) {
    rows[r].scene = name;
    rows[r].role = static_cast<FrameRole>(r);
  }
  double total_ms = 0.0;
  int frames = 0;
  for (const auto& rec : m.records) {
    if (rec.input == "-") continue;
    if (rec.hr == "-") throw IoError(clip_dir.string() + ": frame " + std::to_string(rec.index) + " has no HR");
    const Image in = scene::read_frame(clip_dir / rec.input);
    const Image hr = scene::read_frame(clip_dir / rec.hr);
    const auto t0 = Clock::now();
    const Image pred = predict(in);
    total_ms += ms_since(t0);
    ++frames;
    if (pred.channels != 3 || !pred.same_dims(hr)) throw ContractError("prediction does not match the HR frame");

    EvalRow& row = rows[static_cast<int>(rec.role)];
    ++row.frames;
    row.psnr_sum += psnr(pred, hr);
    row.ssim_sum += ssim(pred, hr);
    row.edge.merge(region_metrics(pred, hr, canny_edges(hr)));
    row.hole.merge(region_metrics(pred, hr, upscale_mask(hole_region(in, rec.role), 2)));

    if (!out_dir.empty()) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "%06d_pred", rec.index);
      scene::write_frame(out_dir / (std::string(stem) + ".stsf"), pred, rec.role);
      if (png) scene::write_png(out_dir / (std::string(stem) + ".png"), pred);
    }
  }
  if (frames == 0) throw IoError(clip_dir.string() + ": no preprocessed frames to evaluate");
  for (auto& r : rows) report.rows.push_back(r);
  report.ms_per_frame = total_ms / frames;
  return report;
}

EvalReport evaluate(const std::vector<fs::path>& clip_dirs, const Predictor& predict) {
  EvalReport all;
  double ms = 0.0;
  for (const auto& dir : clip_dirs) {
    const EvalReport r = evaluate(dir, predict);
    all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
    ms += r.ms_per_frame;
  }
  all.ms_per_frame = clip_dirs.empty() ? 0.0 : ms / static_cast<double>(clip_dirs.size());
  return all;
}

std::string format_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "scene,role,psnr,ssim,edge_psnr,edge_ssim,hole_psnr,hole_ssim\n";
  char buf[64];
  auto num = [&](bool empty, double v) -> std::string {
    if (empty) return "nan";
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  };
  for (const auto& r : report.rows)
    out << r.scene << ',' << scene::role_name(r.role) << ',' << num(r.frames == 0, r.psnr()) << ','
        << num(r.frames == 0, r.ssim()) << ',' << num(r.edge.empty, r.edge.psnr()) << ','
        << num(r.edge.empty, r.edge.ssim()) << ',' << num(r.hole.empty, r.hole.psnr()) << ','
        << num(r.hole.empty, r.hole.ssim()) << '\n';
  return out.str();
}

BenchRow bench(const net::Checkpoint& ckpt, const scene::SceneSpec& scene, int samples) {
  if (samples < 1) throw ContractError("bench needs at least one sample");
  constexpr int kFrames = scene::kMaxHistory + 8;
  const scene::Clip clip = scene::render_clip(scene, 0, kFrames);
  const Predictor predict = model_predictor(ckpt);
  std::vector<double> lr, gb, wp, nw;
  for (int i = 0; i < samples; ++i) {
    const int t = scene::kMaxHistory + i % (kFrames - scene::kMaxHistory);
    auto t0 = Clock::now();
    const Image color = scene::render_lr(scene, t);
    lr.push_back(ms_since(t0));
    t0 = Clock::now();
    const auto g = scene::render_gbuffer(scene, t, scene.lr_width, scene.lr_height);
    gb.push_back(ms_since(t0));
    t0 = Clock::now();
    const warp::NetInput in = warp::build_net_input(clip, t);
    wp.push_back(ms_since(t0));
    t0 = Clock::now();
    const Image out = predict(in.planes);
    nw.push_back(ms_since(t0));
    if (color.empty() || g.gbuffer.empty() || out.empty()) throw ContractError("bench produced an empty frame");
  }
  return {scene.lr_width, scene.lr_height, samples, median(lr), median(gb), median(wp), median(nw)};
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "lr_size,samples,lr_ms,gbuffer_ms,warp_ms,network_ms\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zux%zu,%d,%.3f,%.3f,%.3f,%.3f\n", r.lr_width, r.lr_height, r.samples, r.lr_ms,
                  r.gbuffer_ms, r.warp_ms, r.network_ms);
    out << buf;
  }
  return out.str();
}

} // namespace stss::train
