#include "stss/stss.h"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Failure {
  stss_status status;
  std::string message;
};

void check(stss_status s) {
  if (s != STSS_OK) throw Failure{s, stss_last_error()};
}

// A directory with a manifest is one clip; otherwise its clip subdirectories.
std::vector<std::string> expand_clips(const std::vector<std::string>& dirs) {
  std::vector<std::string> out;
  for (const auto& d : dirs) {
    if (fs::exists(fs::path(d) / "manifest.txt")) {
      out.push_back(d);
      continue;
    }
    std::vector<std::string> sub;
    if (fs::is_directory(d))
      for (const auto& e : fs::directory_iterator(d))
        if (fs::exists(e.path() / "manifest.txt")) sub.push_back(e.path().string());
    if (sub.empty()) throw Failure{STSS_ERR_IO, d + " contains no clips"};
    std::sort(sub.begin(), sub.end());
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

struct Model {
  stss_model* m = nullptr;
  ~Model() { stss_model_free(m); }
};

void print_components(const char* label, const stss_components& c) {
  std::printf("%-8s backbone %llu  history %llu  erm %llu  total %llu\n", label,
              static_cast<unsigned long long>(c.backbone), static_cast<unsigned long long>(c.history),
              static_cast<unsigned long long>(c.erm), static_cast<unsigned long long>(c.total));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint supersampling and frame extrapolation for rendered video"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Render a synthetic clip");
  std::string scene_cfg, synth_out, write_cfg;
  int desk_variant = -1, frames = 600;
  std::uint64_t seed = 1;
  synth->add_option("--scene", scene_cfg, "Scene INI file");
  synth->add_option("--desk", desk_variant, "Use built-in desk scene variant (0 or 1) instead of --scene");
  synth->add_option("--seed", seed, "Seed for --desk");
  synth->add_option("--frames", frames, "Frame count for --desk");
  synth->add_option("--write-config", write_cfg, "Only write the --desk scene INI to this path");
  synth->add_option("--out", synth_out, "Output clip directory");

  auto* prep = app.add_subcommand("preprocess", "Warp history and cache network inputs");
  std::vector<std::string> prep_clips;
  prep->add_option("--clips", prep_clips, "Clip directory or a directory of clips")->required();

  auto* trn = app.add_subcommand("train", "Train a model from a run INI");
  std::string train_cfg, train_out, loss_csv;
  int epochs = 0;
  bool quiet = false;
  trn->add_option("--config", train_cfg, "Run INI ([data], [train], [rrm], [net])")->required();
  trn->add_option("--out", train_out, "Checkpoint path")->required();
  trn->add_option("--loss-csv", loss_csv, "Write the per-step loss curve");
  trn->add_option("--epochs", epochs, "Override the epoch count");
  trn->add_flag("--quiet", quiet, "No per-epoch progress");

  auto* inf = app.add_subcommand("infer", "Write predicted HR frames for a clip");
  std::string inf_ckpt, inf_clip, inf_out;
  bool png = false;
  inf->add_option("--ckpt", inf_ckpt, "Checkpoint")->required();
  inf->add_option("--clip", inf_clip, "Preprocessed clip")->required();
  inf->add_option("--out", inf_out, "Output directory")->required();
  inf->add_flag("--png", png, "Also write PNGs");

  auto* ev = app.add_subcommand("eval", "Per-scene, per-role quality report");
  std::string ev_ckpt, report;
  std::vector<std::string> ev_clips;
  bool baseline = false;
  ev->add_option("--ckpt", ev_ckpt, "Checkpoint");
  ev->add_flag("--baseline", baseline, "Evaluate the bilinear warped-frame baseline instead");
  ev->add_option("--clip", ev_clips, "Preprocessed clip(s)")->required();
  ev->add_option("--report", report, "CSV output (stdout if omitted)");

  auto* bn = app.add_subcommand("bench", "Median per-stage timing");
  std::string bn_ckpt;
  std::vector<std::string> sizes{"64x32", "128x64"};
  int samples = 100;
  bn->add_option("--ckpt", bn_ckpt, "Checkpoint (default: untrained desk model)");
  bn->add_option("--size", sizes, "LR sizes WxH");
  bn->add_option("--samples", samples, "Timed frames per size");

  auto* info = app.add_subcommand("info", "Parameter and FLOP budget");
  std::string info_ckpt, preset = "paper";
  std::size_t height = 540, width = 960;
  info->add_option("--ckpt", info_ckpt, "Checkpoint");
  info->add_option("--preset", preset, "desk or paper (when no checkpoint)");
  info->add_option("--height", height, "LR height for FLOPs");
  info->add_option("--width", width, "LR width for FLOPs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      if (desk_variant >= 0) {
        const std::string cfg = !write_cfg.empty() ? write_cfg : (fs::temp_directory_path() / "stss_desk.ini").string();
        check(stss_desk_scene_config(desk_variant, seed, frames, cfg.c_str()));
        if (write_cfg.empty() || !synth_out.empty()) scene_cfg = cfg;
        if (!write_cfg.empty() && synth_out.empty()) return 0;
      }
      if (scene_cfg.empty() || synth_out.empty()) {
        std::fprintf(stderr, "error: synth needs --scene (or --desk) and --out\n");
        return 2;
      }
      check(stss_synth(scene_cfg.c_str(), synth_out.c_str()));
    } else if (*prep) {
      for (const auto& c : expand_clips(prep_clips)) check(stss_preprocess(c.c_str()));
    } else if (*trn) {
      struct Progress {
        bool quiet;
        int epoch = -1;
        double sum = 0.0;
        int n = 0;
      } p{quiet};
      auto cb = [](int, int epoch, float lr, double loss, void* user) {
        auto& s = *static_cast<Progress*>(user);
        if (epoch != s.epoch && s.n > 0 && !s.quiet)
          std::fprintf(stderr, "epoch %d  mean loss %.6f  lr %.3g\n", s.epoch + 1, s.sum / s.n, lr);
        if (epoch != s.epoch) s.sum = s.n = 0;
        s.epoch = epoch;
        s.sum += loss;
        ++s.n;
      };
      check(stss_train(train_cfg.c_str(), train_out.c_str(), loss_csv.empty() ? nullptr : loss_csv.c_str(), epochs,
                       cb, &p));
      if (!quiet && p.n > 0) std::fprintf(stderr, "epoch %d  mean loss %.6f\n", p.epoch + 1, p.sum / p.n);
    } else if (*inf) {
      Model m;
      check(stss_model_load(inf_ckpt.c_str(), &m.m));
      check(stss_infer_clip(m.m, inf_clip.c_str(), inf_out.c_str(), png ? 1 : 0));
    } else if (*ev) {
      if (baseline == !ev_ckpt.empty()) {
        std::fprintf(stderr, "error: eval needs exactly one of --ckpt and --baseline\n");
        return 2;
      }
      Model m;
      if (!baseline) check(stss_model_load(ev_ckpt.c_str(), &m.m));
      const auto clips = expand_clips(ev_clips);
      std::vector<const char*> dirs;
      for (const auto& c : clips) dirs.push_back(c.c_str());
      stss_report* r = nullptr;
      check(stss_evaluate(m.m, dirs.data(), dirs.size(), &r));
      size_t need = 0;
      stss_report_csv(r, nullptr, 0, &need);
      std::string csv(need, '\0');
      const stss_status s = report.empty() ? stss_report_csv(r, csv.data(), csv.size(), &need)
                                           : stss_report_write_csv(r, report.c_str());
      if (s == STSS_OK && report.empty()) std::fputs(csv.c_str(), stdout);
      std::fprintf(stderr, "%.3f ms/frame\n", stss_report_ms_per_frame(r));
      stss_report_free(r);
      check(s);
    } else if (*bn) {
      Model m;
      if (bn_ckpt.empty()) check(stss_model_create("desk", 1, 1, &m.m));
      else check(stss_model_load(bn_ckpt.c_str(), &m.m));
      std::printf("lr_size,samples,lr_ms,gbuffer_ms,warp_ms,network_ms\n");
      for (const auto& sz : sizes) {
        std::size_t w = 0, h = 0;
        if (std::sscanf(sz.c_str(), "%zux%zu", &w, &h) != 2) {
          std::fprintf(stderr, "error: bad size '%s' (expected WxH)\n", sz.c_str());
          return 2;
        }
        stss_bench_row row{};
        check(stss_bench(m.m, w, h, samples, &row));
        std::printf("%zux%zu,%d,%.3f,%.3f,%.3f,%.3f\n", row.lr_width, row.lr_height, row.samples, row.lr_ms,
                    row.gbuffer_ms, row.warp_ms, row.network_ms);
      }
    } else if (*info) {
      Model m;
      if (!info_ckpt.empty()) check(stss_model_load(info_ckpt.c_str(), &m.m));
      else check(stss_model_create(preset.c_str(), 1, 1, &m.m));
      stss_components p{}, f{};
      check(stss_model_param_count(m.m, &p));
      check(stss_model_flops(m.m, height, width, &f));
      print_components("params", p);
      std::printf("at %zux%zu LR:\n", width, height);
      print_components("macs", f);
      if (f.backbone) std::printf("erm/backbone macs %.4f\n", static_cast<double>(f.erm) / f.backbone);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s%s%s\n", stss_status_string(f.status), f.message.empty() ? "" : ": ",
                 f.message.c_str());
    return 1;
  }
  return 0;
}
