#include "stss/stss.h"

#include "stss/error.hpp"
#include "stss/net/stssnet.hpp"
#include "stss/scene/clip.hpp"
#include "stss/scene/scene_spec.hpp"
#include "stss/train/eval.hpp"
#include "stss/train/train.hpp"
#include "stss/warp/warp.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

struct stss_model {
  stss::net::Checkpoint ckpt;
};

struct stss_report {
  stss::train::EvalReport report;
};

namespace {

namespace fs = std::filesystem;
using namespace stss;

thread_local std::string g_last_error;

stss_status fail(stss_status s, const char* what) {
  g_last_error = what;
  return s;
}

template <class F> stss_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return STSS_OK;
  } catch (const InsufficientHistoryError& e) {
    return fail(STSS_ERR_HISTORY, e.what());
  } catch (const ConfigError& e) {
    return fail(STSS_ERR_CONFIG, e.what());
  } catch (const ContractError& e) {
    return fail(STSS_ERR_ARGUMENT, e.what());
  } catch (const IoError& e) {
    return fail(STSS_ERR_IO, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(STSS_ERR_IO, e.what());
  } catch (const NumericError& e) {
    return fail(STSS_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(STSS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(STSS_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ContractError(what);
}

std::string str(const char* s, const char* what) {
  require(s != nullptr && *s != '\0', what);
  return s;
}

stss_report_row to_row(const train::EvalRow& r, const char* scene) {
  stss_report_row out{};
  out.scene = scene;
  out.role = static_cast<int>(r.role);
  out.frames = r.frames;
  out.psnr = r.psnr();
  out.ssim = r.ssim();
  out.edge_psnr = r.edge.psnr();
  out.edge_ssim = r.edge.ssim();
  out.hole_psnr = r.hole.psnr();
  out.hole_ssim = r.hole.ssim();
  out.edge_empty = r.edge.empty;
  out.hole_empty = r.hole.empty;
  return out;
}

stss_components to_components(const net::ComponentTable& t) { return {t.backbone, t.history, t.erm, t.total()}; }

} // namespace

extern "C" {

const char* stss_last_error(void) { return g_last_error.c_str(); }

const char* stss_status_string(stss_status status) {
  switch (status) {
  case STSS_OK: return "ok";
  case STSS_ERR_ARGUMENT: return "invalid argument";
  case STSS_ERR_CONFIG: return "configuration error";
  case STSS_ERR_IO: return "i/o error";
  case STSS_ERR_NUMERIC: return "numeric error";
  case STSS_ERR_HISTORY: return "insufficient history";
  case STSS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* stss_version(void) { return "0.1.0"; }

stss_status stss_desk_scene_config(int variant, uint64_t seed, int frames, const char* path) {
  return guarded([&] {
    const std::string p = str(path, "path is empty");
    const scene::SceneSpec s = scene::make_desk_scene(variant, seed, frames);
    s.validate();
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p);
    out << scene::format_scene_spec(s);
    if (!out) throw IoError("write failed: " + p);
  });
}

stss_status stss_synth(const char* scene_ini, const char* out_dir) {
  return guarded([&] {
    scene::write_clip(scene::load_scene_spec(str(scene_ini, "scene config path is empty")),
                      str(out_dir, "output directory is empty"));
  });
}

stss_status stss_preprocess(const char* clip_dir) {
  return guarded([&] { warp::preprocess_clip_dir(str(clip_dir, "clip directory is empty")); });
}

stss_status stss_model_create(const char* preset, int use_erm, uint64_t seed, stss_model** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    const std::string p = str(preset, "preset is empty");
    auto m = std::make_unique<stss_model>();
    if (p == "desk") m->ckpt.cfg = net::desk_preset();
    else if (p == "paper") m->ckpt.cfg = net::paper_preset();
    else throw ConfigError("unknown preset '" + p + "'");
    m->ckpt.cfg.use_erm = use_erm != 0;
    m->ckpt.cfg.seed = seed;
    net::init_params(m->ckpt.params, m->ckpt.cfg);
    *out = m.release();
  });
}

stss_status stss_model_load(const char* checkpoint, stss_model** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    auto m = std::make_unique<stss_model>();
    m->ckpt = net::load_checkpoint(str(checkpoint, "checkpoint path is empty"));
    *out = m.release();
  });
}

stss_status stss_model_save(const stss_model* model, const char* checkpoint) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    net::save_checkpoint(str(checkpoint, "checkpoint path is empty"), model->ckpt.params, model->ckpt.cfg);
  });
}

void stss_model_free(stss_model* model) { delete model; }

stss_status stss_model_param_count(const stss_model* model, stss_components* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    *out = to_components(net::count_params(model->ckpt.cfg));
  });
}

stss_status stss_model_flops(const stss_model* model, size_t height, size_t width, stss_components* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    *out = to_components(net::count_flops(model->ckpt.cfg, height, width));
  });
}

stss_status stss_model_infer(const stss_model* model, const float* input, size_t height, size_t width,
                             float* output) {
  return guarded([&] {
    require(model != nullptr && input != nullptr && output != nullptr, "null argument");
    require(height > 0 && width > 0, "empty frame");
    scene::Image in(warp::kNetInputChannels, height, width);
    std::copy_n(input, in.data.size(), in.data.begin());
    const scene::Image out = train::model_predictor(model->ckpt)(in);
    std::copy(out.data.begin(), out.data.end(), output);
  });
}

stss_status stss_infer_clip(const stss_model* model, const char* clip_dir, const char* out_dir, int png) {
  return guarded([&] {
    require(model != nullptr, "model is null");
    train::evaluate(str(clip_dir, "clip directory is empty"), train::model_predictor(model->ckpt),
                    str(out_dir, "output directory is empty"), png != 0);
  });
}

stss_status stss_train(const char* run_ini, const char* checkpoint, const char* loss_csv, int epochs,
                       stss_progress_fn progress, void* user) {
  return guarded([&] {
    const std::string ckpt = str(checkpoint, "checkpoint path is empty");
    train::RunConfig rc = train::load_run_config(str(run_ini, "run config path is empty"));
    if (epochs > 0) rc.train.epochs = epochs;
    rc.train.validate();
    train::TrainHooks hooks;
    if (progress)
      hooks.on_step = [&](const train::LossRecord& r) { progress(r.step, r.epoch, r.lr, r.loss, user); };
    hooks.on_checkpoint = [&](int epoch, const num::ParamStore& params) {
      net::save_checkpoint(ckpt + ".epoch" + std::to_string(epoch + 1), params, rc.net);
    };
    hooks.dump_dir = ckpt + ".nan";
    const train::TrainResult r = train::train(train::list_samples(rc.clips, rc.train.frame_stride), rc.train, rc.net, hooks);
    if (fs::path(ckpt).has_parent_path()) fs::create_directories(fs::path(ckpt).parent_path());
    net::save_checkpoint(ckpt, r.params, rc.net);
    if (loss_csv && *loss_csv) train::write_loss_curve(loss_csv, r.curve);
  });
}

stss_status stss_evaluate(const stss_model* model, const char* const* clip_dirs, size_t count, stss_report** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(clip_dirs != nullptr && count > 0, "no clips given");
    std::vector<fs::path> dirs;
    for (size_t i = 0; i < count; ++i) dirs.emplace_back(str(clip_dirs[i], "clip directory is empty"));
    auto r = std::make_unique<stss_report>();
    r->report = train::evaluate(dirs, model ? train::model_predictor(model->ckpt) : train::baseline_predictor());
    *out = r.release();
  });
}

void stss_report_free(stss_report* report) { delete report; }

size_t stss_report_row_count(const stss_report* report) { return report ? report->report.rows.size() : 0; }

stss_status stss_report_get_row(const stss_report* report, size_t index, stss_report_row* out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "null argument");
    require(index < report->report.rows.size(), "row index out of range");
    const auto& r = report->report.rows[index];
    *out = to_row(r, r.scene.c_str());
  });
}

stss_status stss_report_combined(const stss_report* report, int role, stss_report_row* out) {
  return guarded([&] {
    require(report != nullptr && out != nullptr, "null argument");
    require(role == STSS_ROLE_ALL || role == STSS_ROLE_SF || role == STSS_ROLE_EF, "bad role");
    const auto fr = static_cast<scene::FrameRole>(role == STSS_ROLE_ALL ? 0 : role);
    *out = to_row(report->report.combined(role == STSS_ROLE_ALL ? nullptr : &fr), "all");
    out->role = role;
  });
}

double stss_report_ms_per_frame(const stss_report* report) { return report ? report->report.ms_per_frame : 0.0; }

stss_status stss_report_csv(const stss_report* report, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    require(report != nullptr, "report is null");
    const std::string csv = train::format_report_csv(report->report);
    if (needed) *needed = csv.size() + 1;
    if (!buf) return;
    if (capacity < csv.size() + 1) throw ContractError("buffer too small for report csv");
    std::memcpy(buf, csv.c_str(), csv.size() + 1);
  });
}

stss_status stss_report_write_csv(const stss_report* report, const char* path) {
  return guarded([&] {
    require(report != nullptr, "report is null");
    const std::string p = str(path, "path is empty");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p);
    out << train::format_report_csv(report->report);
    if (!out) throw IoError("write failed: " + p);
  });
}

stss_status stss_bench(const stss_model* model, size_t lr_width, size_t lr_height, int samples, stss_bench_row* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "null argument");
    scene::SceneSpec s = scene::make_desk_scene(0, 1, 64);
    s.lr_width = lr_width;
    s.lr_height = lr_height;
    const train::BenchRow r = train::bench(model->ckpt, s, samples);
    *out = {r.lr_width, r.lr_height, r.samples, r.lr_ms, r.gbuffer_ms, r.warp_ms, r.network_ms};
  });
}

} // extern "C"
