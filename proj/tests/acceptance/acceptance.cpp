// Runs the eight acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include "../support/erm_oracle.hpp"

#include "stss/erm/erm.hpp"
#include "stss/net/stssnet.hpp"
#include "stss/numerics/grad_check.hpp"
#include "stss/numerics/init.hpp"
#include "stss/numerics/ops.hpp"
#include "stss/scene/clip.hpp"
#include "stss/scene/render.hpp"
#include "stss/train/eval.hpp"
#include "stss/train/loss.hpp"
#include "stss/train/train.hpp"
#include "stss/warp/warp.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace stss;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using num::Tensor;
using scene::FrameRole;
using scene::Image;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

template <class F> void run(int id, const std::string& name, F&& f) {
  try {
    report(id, name, f());
  } catch (const std::exception& e) {
    report(id, name, {false, std::string("exception: ") + e.what()});
  }
}

// ---- 1: gradient suite ------------------------------------------------------

Tensor rnd(num::Shape s, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) { return num::uniform(s, lo, hi, seed); }

// Values with |x| in [0.1, 1] so a 1e-3 step never crosses an activation kink.
Tensor away_from_zero(num::Shape s, std::uint64_t seed) {
  Tensor t = rnd(s, seed, 0.1f, 1.0f);
  std::mt19937_64 rng(seed);
  for (auto& v : t.data())
    if (rng() & 1) v = -v;
  return t;
}

Verdict gradient_suite() {
  const auto t0 = Clock::now();
  using In = std::vector<Tensor>;
  std::vector<std::pair<std::string, float>> ops;
  auto check = [&](const std::string& name, const num::TensorOp& op, const In& in) {
    ops.emplace_back(name, num::grad_check(op, in));
  };
  const Tensor x = rnd({1, 3, 6, 6}, 1), w = rnd({4, 3, 3, 3}, 2), b = rnd({4}, 3), w1 = rnd({4, 3, 1, 1}, 4);
  check("conv3x3", [](const In& i) { return num::conv2d(i[0], i[1], i[2], 1, 1); }, {x, w, b});
  check("conv3x3/s2", [](const In& i) { return num::conv2d(i[0], i[1], i[2], 2, 1); }, {x, w, b});
  check("conv1x1", [](const In& i) { return num::conv2d(i[0], i[1], i[2], 1, 0); }, {x, w1, b});
  const Tensor k = away_from_zero({1, 2, 4, 5}, 5);
  check("relu", [](const In& i) { return num::relu(i[0]); }, {k});
  check("leaky_relu", [](const In& i) { return num::leaky_relu(i[0], 0.1f); }, {k});
  const Tensor a = rnd({1, 2, 4, 4}, 6), c = rnd({1, 2, 4, 4}, 7), c3 = rnd({1, 3, 4, 4}, 8);
  check("add", [](const In& i) { return num::add(i[0], i[1]); }, {a, c});
  check("sub", [](const In& i) { return num::sub(i[0], i[1]); }, {a, c});
  check("mul", [](const In& i) { return num::mul(i[0], i[1]); }, {a, c});
  check("scale", [](const In& i) { return num::scale(i[0], -2.5f); }, {a});
  check("concat", [](const In& i) { return num::concat_channels({i[0], i[1]}); }, {a, c3});
  check("avg_pool", [](const In& i) { return num::avg_pool2(i[0]); }, {a});
  check("upsample", [](const In& i) { return num::bilinear_upsample2(i[0]); }, {a});
  check("unshuffle", [](const In& i) { return num::pixel_unshuffle2(i[0]); }, {a});
  Tensor m({1, 1, 4, 4}, 0.0f);
  for (std::size_t i = 0; i < m.numel(); i += 3) m.data()[i] = 1.0f;
  check("mask", [m](const In& i) { return num::mask_channels(i[0], m); }, {a});

  // Loss pairs differ by at least 0.1 per element, clear of the L1 kink.
  auto offset = [](const Tensor& base, const Tensor& d) {
    Tensor out = base.clone();
    for (std::size_t i = 0; i < out.numel(); ++i) out.data()[i] += d.data()[i];
    return out;
  };
  const Tensor l0 = rnd({1, 3, 8, 8}, 9, 0.2f, 0.8f), l1 = offset(l0, away_from_zero({1, 3, 8, 8}, 10));
  const Tensor wl = rnd({1, 1, 8, 8}, 11, 1.0f, 2.0f);
  const train::PerceptualProxy proxy;
  check("weighted_l1", [wl](const In& i) { return train::weighted_l1(i[0], i[1], wl); }, {l0, l1});
  check("mse", [](const In& i) { return num::mse_mean(i[0], i[1]); }, {l0, l1});
  check("perceptual", [&](const In& i) { return proxy.loss(i[0], i[1]); }, {l0, l1});
  check("total_loss", [&](const In& i) { return train::total_loss(i[0], i[1], wl, 0.01f, proxy); }, {l0, l1});

  std::mt19937_64 rng(12);
  const Tensor q = oracle::signed_pixels({1, 3, 5, 6}, rng), kk = oracle::signed_pixels({1, 3, 5, 6}, rng);
  const Tensor v = oracle::random_tensor({1, 2, 5, 6}, rng);
  const Tensor hole = oracle::random_mask(1, 5, 6, 0.3, rng);
  check("erm_attention",
        [hole](const In& i) {
          return erm::window_relu_attention(i[0], num::mask_channels(i[1], hole), num::mask_channels(i[2], hole), 5);
        },
        {q, kk, v});

  float ops_max = 0.0f;
  std::string worst;
  for (const auto& [name, e] : ops)
    if (e >= ops_max) {
      ops_max = e;
      worst = name;
    }

  // End to end: desk network on a 16x8 micro-input, 20 random parameters.
  const net::NetConfig cfg = net::desk_preset();
  num::ParamStore params;
  net::init_params(params, cfg);
  {
    Tensor& head = params.get("backbone.head.1.weight");
    const Tensor r = rnd(head.shape(), 12, -0.2f, 0.2f);
    std::copy(r.data().begin(), r.data().end(), head.data().begin());
  }
  Tensor in = rnd({1, rrm::kAugmentedChannels, 8, 16}, 13, 0.0f, 1.0f);
  for (std::size_t copy : {std::size_t{0}, warp::kNetInputChannels})
    for (std::size_t m = 0; m < 3; ++m)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t xx = 0; xx < 16; ++xx) {
          float& val = in.at(0, copy + warp::kMasks + m, y, xx);
          val = val < 0.2f ? 0.0f : 1.0f;
        }
  const Tensor target = rnd({1, 3, 16, 32}, 14, 0.0f, 1.0f);
  const Tensor weight({1, 1, 16, 32}, 1.0f);
  std::vector<num::GradProbe> probes;
  const auto names = params.names();
  std::mt19937_64 pr(15);
  for (int i = 0; i < 20; ++i) {
    const Tensor& t = params.get(names[pr() % names.size()]);
    probes.push_back({t, static_cast<std::size_t>(pr() % t.numel())});
  }
  const float e2e = num::grad_check_probes(
      [&] { return train::total_loss(net::forward(in, params, cfg), target, weight, 0.01f, proxy); }, probes);

  const double secs = seconds_since(t0);
  const bool pass = ops_max < 1e-3f && e2e < 1e-2f && secs < 60.0;
  return {pass, std::to_string(ops.size()) + " ops max rel err " + fmt("%.2e", ops_max) + " (" + worst +
                    ", limit 1e-3); end-to-end " + fmt("%.2e", e2e) + " (limit 1e-2); " + fmt("%.1f", secs) +
                    " s (limit 60)"};
}

// ---- 2: ERM oracle ------------------------------------------------------------

Verdict erm_oracle() {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> nb(1, 2), ch(1, 8), hw(3, 12);
  double worst = 0.0;
  int mutation_failures = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n0 = nb(rng), d0 = ch(rng), dv0 = ch(rng), h0 = hw(rng), w0 = hw(rng);
    // The first instance is the largest size.
    const bool big = inst == 0;
    const std::size_t n = big ? 2 : n0, d = big ? 8 : d0, dv = big ? 8 : dv0, h = big ? 12 : h0, w = big ? 12 : w0;
    const int window = (inst % 2) ? 5 : 3;
    const Tensor q = oracle::random_tensor({n, d, h, w}, rng);
    const Tensor mask = oracle::random_mask(n, h, w, 0.3, rng);
    Tensor kraw = oracle::random_tensor({n, d, h, w}, rng), vraw = oracle::random_tensor({n, dv, h, w}, rng);
    const Tensor k = num::mask_channels(kraw, mask), v = num::mask_channels(vraw, mask);
    const Tensor got = erm::window_relu_attention(q, k, v, window);
    const auto want = oracle::erm_brute_force(q, k, v, window);
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(want[i] - got.data()[i]));
    // Mutate K and V inside the holes; the masked inputs must hide it.
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          if (mask.at(b, 0, y, x) != 0.0f) continue;
          for (std::size_t c = 0; c < d; ++c) kraw.at(b, c, y, x) += 3.0f;
          for (std::size_t c = 0; c < dv; ++c) vraw.at(b, c, y, x) -= 5.0f;
        }
    const Tensor again =
        erm::window_relu_attention(q, num::mask_channels(kraw, mask), num::mask_channels(vraw, mask), window);
    if (!std::equal(got.data().begin(), got.data().end(), again.data().begin())) ++mutation_failures;
  }
  return {worst <= 1e-5 && mutation_failures == 0,
          "20 instances up to 2x8x12x12, max abs diff " + fmt("%.2e", worst) + " (limit 1e-5); hole mutation " +
              std::to_string(20 - mutation_failures) + "/20 unchanged"};
}

// ---- 3: warping oracle -------------------------------------------------------

Verdict warping_oracle() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image src(3, 24, 32);
  for (auto& v : src.data) v = u(rng);

  const warp::Warped id = warp::warp(src, warp::identity_motion(24, 32));
  const bool identity = id.image.data == src.data;

  bool shifts = true;
  for (int dx : {-3, 0, 2})
    for (int dy : {-1, 4}) {
      Image mv(3, 24, 32, 0.0f);
      for (std::size_t i = 0; i < mv.plane_size(); ++i) {
        mv.plane(0)[i] = static_cast<float>(dx);
        mv.plane(1)[i] = static_cast<float>(dy);
        mv.plane(2)[i] = 1.0f;
      }
      const warp::Warped wp = warp::warp(src, mv);
      for (std::size_t y = 0; y < 24; ++y)
        for (std::size_t x = 0; x < 32; ++x) {
          if (wp.mask.at(0, y, x) == 0.0f) continue;
          for (std::size_t c = 0; c < 3; ++c)
            shifts = shifts && wp.image.at(c, y, x) == src.at(c, y + dy, x + dx);
        }
    }

  // Analytic consistency on both desk scene variants: the warped LR(t-k)
  // against the exact shading of each visible scene point at t-k.
  double worst = 0.0;
  for (int variant : {0, 1}) {
    scene::SceneSpec s = scene::make_desk_scene(variant, 41 + variant, 60);
    for (auto& o : s.objects) o.material.checker_scale = 0.0;
    const double t = 30.0;
    const scene::Camera cam = scene::Camera::at(s.camera, t, s.lr_width, s.lr_height);
    for (int k : {1, 2, 5}) {
      const double ts = t - k;
      const scene::Camera prev = scene::Camera::at(s.camera, ts, s.lr_width, s.lr_height);
      const Image mv = scene::motion_field(s, t, k, s.lr_width, s.lr_height);
      const warp::Warped wp = warp::warp(scene::render_lr(s, ts), mv);
      double err = 0.0;
      std::size_t n = 0;
      for (std::size_t y = 0; y < mv.height; ++y)
        for (std::size_t x = 0; x < mv.width; ++x) {
          if (wp.mask.at(0, y, x) == 0.0f) continue;
          const scene::Hit now = scene::intersect(s, t, cam.eye, cam.ray_dir(x + 0.5, y + 0.5));
          scene::Vec3 expected = s.sky;
          if (now.object >= 0) {
            const auto& obj = s.objects[now.object];
            const scene::Vec3 p = scene::object_to_world(obj, ts, now.local);
            const scene::Hit then = scene::intersect(s, ts, prev.eye, (p - prev.eye).normalized());
            expected = scene::shade_point(s.lights, then.point, then.normal, scene::surface_albedo(obj, then.local),
                                          obj.material.metallic, obj.material.roughness, prev.eye);
          }
          for (std::size_t c = 0; c < 3; ++c) err += std::abs(wp.image.at(c, y, x) - expected[c]);
          n += 3;
        }
      if (n == 0) return {false, "no valid pixels in analytic warp"};
      worst = std::max(worst, err / static_cast<double>(n));
    }
  }
  return {identity && shifts && worst < 2e-2,
          std::string("zero-MV identity ") + (identity ? "bit-exact" : "NOT exact") + "; integer shifts " +
              (shifts ? "exact" : "NOT exact") + "; analytic warp worst MAE " + fmt("%.2e", worst) +
              " (limit 2e-2, 2 scenes x k in {1,2,5})"};
}

// ---- 4: budget ---------------------------------------------------------------

Verdict budget() {
  const net::NetConfig cfg = net::paper_preset();
  const net::ComponentTable p = net::count_params(cfg);
  num::ParamStore params;
  net::init_params(params, cfg);
  const bool partition = p.backbone + p.history + p.erm == p.total() && params.total_count() == p.total() &&
                         params.count_with_prefix("backbone.") == p.backbone &&
                         params.count_with_prefix("history.") == p.history &&
                         params.count_with_prefix("erm.") == p.erm;
  const double rel = (static_cast<double>(p.total()) - 417240.0) / 417240.0;
  const net::ComponentTable f = net::count_flops(cfg, 540, 960);
  const double ratio = static_cast<double>(f.erm) / static_cast<double>(f.backbone);
  return {std::abs(rel) <= 0.15 && partition && ratio >= 0.08 && ratio <= 0.13,
          "paper preset " + std::to_string(p.total()) + " params (" + fmt("%+.1f", 100 * rel) +
              "% vs 417.24K, limit 15%); backbone " + std::to_string(p.backbone) + " + history " +
              std::to_string(p.history) + " + erm " + std::to_string(p.erm) +
              (partition ? " sums exactly" : " DOES NOT SUM") + "; ERM/backbone MACs " + fmt("%.4f", ratio) +
              " (limit [0.08, 0.13])"};
}

// ---- 5, 6, 8: trained desk models ------------------------------------------

struct Scale {
  int train_frames = 600;
  int test_frames = 45;
  int epochs = 0;
  int frame_stride = 1;
  float lr = 0.0f;
};

struct Data {
  std::vector<fs::path> train, test;
  double seconds = 0.0;
};

Data make_data(const fs::path& work, const Scale& sc, bool reuse) {
  const auto t0 = Clock::now();
  Data d;
  auto make = [&](const fs::path& dir, const scene::SceneSpec& s) {
    if (!(reuse && fs::exists(dir / scene::kManifestName) &&
          scene::read_manifest(dir / scene::kManifestName).meta.count("layout"))) {
      fs::remove_all(dir);
      scene::write_clip(s, dir);
      warp::preprocess_clip_dir(dir);
    }
    return dir;
  };
  d.train.push_back(make(work / "train_drift", scene::make_desk_scene(0, 1, sc.train_frames)));
  d.train.push_back(make(work / "train_dolly", scene::make_desk_scene(1, 2, sc.train_frames)));
  d.test.push_back(make(work / "test_drift", scene::make_desk_scene(0, 101, sc.test_frames)));
  d.test.push_back(make(work / "test_dolly", scene::make_desk_scene(1, 102, sc.test_frames)));
  d.seconds = seconds_since(t0);
  return d;
}

train::TrainConfig train_config(const Scale& sc) {
  train::TrainConfig c;
  c.epochs = sc.epochs;
  c.lr = sc.lr;
  c.frame_stride = sc.frame_stride;
  c.decay_unit = train::DecayUnit::Epoch;
  c.decay_step = std::max(1, sc.epochs / 2);
  c.decay_gamma = 0.5f;
  c.seed = 7;
  return c;
}

struct Trained {
  net::Checkpoint ckpt;
  train::EvalReport report;
  double train_seconds = 0.0;
};

Trained train_and_eval(const Data& d, const train::TrainConfig& tc, const net::NetConfig& nc, const char* label) {
  const auto t0 = Clock::now();
  int last_epoch = -1;
  double sum = 0.0;
  int n = 0;
  train::TrainHooks hooks;
  hooks.on_step = [&](const train::LossRecord& r) {
    if (r.epoch != last_epoch && n > 0) {
      std::fprintf(stderr, "  [%s] epoch %d mean loss %.5f (%.0f s)\n", label, last_epoch + 1, sum / n,
                   seconds_since(t0));
      sum = n = 0;
    }
    last_epoch = r.epoch;
    sum += r.loss;
    ++n;
  };
  Trained out;
  out.ckpt.cfg = nc;
  out.ckpt.params = train::train(train::list_samples(d.train, tc.frame_stride), tc, nc, hooks).params;
  out.train_seconds = seconds_since(t0);
  std::fprintf(stderr, "  [%s] epoch %d mean loss %.5f, trained in %.0f s\n", label, last_epoch + 1, n ? sum / n : 0.0,
               out.train_seconds);
  out.report = train::evaluate(d.test, train::model_predictor(out.ckpt));
  return out;
}

std::string metrics_line(const char* label, const train::EvalReport& r) {
  const FrameRole ef = FrameRole::EF;
  const train::EvalRow all = r.combined(), e = r.combined(&ef);
  return std::string(label) + " psnr " + fmt("%.2f", all.psnr()) + " edge " + fmt("%.2f", all.edge.psnr()) +
         " EF-hole " + fmt("%.2f", e.hole.psnr()) + " all-hole " + fmt("%.2f", all.hole.psnr());
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  const std::string sa{std::istreambuf_iterator<char>(fa), {}}, sb{std::istreambuf_iterator<char>(fb), {}};
  return !sa.empty() && sa == sb;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string work = (fs::temp_directory_path() / "stss_acceptance").string();
  std::set<int> only;
  bool reuse = false;
  Scale sc;
  sc.epochs = 4;
  sc.lr = 1e-3f;
  app.add_option("--work", work, "Scratch directory for clips and checkpoints");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--reuse-data", reuse, "Keep previously rendered clips");
  app.add_option("--epochs", sc.epochs, "Training epochs for criteria 5 and 6");
  app.add_option("--frames", sc.train_frames, "Frames per training scene");
  app.add_option("--stride", sc.frame_stride, "Keep every k-th training frame");
  app.add_option("--lr", sc.lr, "Base learning rate");
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int id) { return only.empty() || only.count(id); };
  fs::create_directories(work);

  if (want(1)) run(1, "gradient suite", gradient_suite);
  if (want(2)) run(2, "ERM oracle equivalence", erm_oracle);
  if (want(3)) run(3, "warping oracle", warping_oracle);
  if (want(4)) run(4, "budget reproduction", budget);

  if (want(5) || want(6) || want(7) || want(8)) {
    const auto t0 = Clock::now();
    std::optional<Data> data;
    std::optional<Trained> full;
    std::optional<train::EvalReport> base;
    std::string setup_error;
    try {
      data = make_data(work, sc, reuse);
      std::fprintf(stderr, "  data ready in %.0f s\n", data->seconds);
      if (want(5) || want(6) || want(8)) {
        full = train_and_eval(*data, train_config(sc), net::desk_preset(), "full");
        base = train::evaluate(data->test, train::baseline_predictor());
      }
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    const double full_run = seconds_since(t0);

    if (want(5))
      run(5, "scaled training efficacy", [&]() -> Verdict {
        if (!full) return {false, "setup failed: " + setup_error};
        const FrameRole ef = FrameRole::EF;
        const double d_all = full->report.combined().psnr() - base->combined().psnr();
        const double d_hole = full->report.combined(&ef).hole.psnr() - base->combined(&ef).hole.psnr();
        const bool ok = d_all >= 1.5 && d_hole >= 2.0 && full_run <= 1800.0;
        return {ok, "overall +" + fmt("%.2f", d_all) + " dB (need 1.5), EF hole +" + fmt("%.2f", d_hole) +
                        " dB (need 2.0); " + metrics_line("model", full->report) + "; " +
                        metrics_line("baseline", *base) + "; full run " + fmt("%.0f", full_run) +
                        " s (limit 1800: data " + fmt("%.0f", data->seconds) + " s, train " +
                        fmt("%.0f", full->train_seconds) + " s)"};
      });

    if (want(6))
      run(6, "ablation direction", [&]() -> Verdict {
        if (!full) return {false, "setup failed: " + setup_error};
        train::TrainConfig no_rrm_cfg = train_config(sc);
        no_rrm_cfg.rrm.enabled = false;
        const Trained no_rrm = train_and_eval(*data, no_rrm_cfg, net::desk_preset(), "no-rrm");
        net::NetConfig no_erm_net = net::desk_preset();
        no_erm_net.use_erm = false;
        const Trained no_erm = train_and_eval(*data, train_config(sc), no_erm_net, "no-erm");
        const FrameRole ef = FrameRole::EF;
        const auto& F = full->report;
        const double full_ef_hole = F.combined(&ef).hole.psnr();
        const double rrm_ef_hole = no_rrm.report.combined(&ef).hole.psnr();
        const double full_edge = F.combined().edge.psnr(), erm_edge = no_erm.report.combined().edge.psnr();
        const double full_hole = F.combined().hole.psnr(), erm_hole = no_erm.report.combined().hole.psnr();
        const bool ok = rrm_ef_hole < full_ef_hole && erm_edge < full_edge && erm_hole < full_hole;
        return {ok, "no-RRM EF hole " + fmt("%.2f", rrm_ef_hole) + " vs full " + fmt("%.2f", full_ef_hole) +
                        "; no-ERM edge " + fmt("%.2f", erm_edge) + " vs " + fmt("%.2f", full_edge) + ", hole " +
                        fmt("%.2f", erm_hole) + " vs " + fmt("%.2f", full_hole)};
      });

    if (want(7))
      run(7, "determinism", [&]() -> Verdict {
        if (!data) return {false, "setup failed: " + setup_error};
        train::TrainConfig tc = train_config(sc);
        tc.epochs = 1;
        tc.frame_stride = 20;
        std::vector<fs::path> ckpts, csvs;
        for (int r = 0; r < 2; ++r) {
          const train::TrainResult res = train::train(train::list_samples(data->train, tc.frame_stride), tc,
                                                      net::desk_preset());
          const fs::path ck = fs::path(work) / ("determinism_" + std::to_string(r) + ".bin");
          net::save_checkpoint(ck, res.params, net::desk_preset());
          const net::Checkpoint loaded = net::load_checkpoint(ck);
          const fs::path csv = fs::path(work) / ("determinism_" + std::to_string(r) + ".csv");
          std::ofstream(csv, std::ios::binary)
              << train::format_report_csv(train::evaluate(data->test, train::model_predictor(loaded)));
          ckpts.push_back(ck);
          csvs.push_back(csv);
        }
        const bool ck_same = same_bytes(ckpts[0], ckpts[1]), csv_same = same_bytes(csvs[0], csvs[1]);
        return {ck_same && csv_same, std::string("checkpoints ") + (ck_same ? "byte-identical" : "DIFFER") +
                                         ", CSV reports " + (csv_same ? "byte-identical" : "DIFFER")};
      });

    if (want(8))
      run(8, "SF/EF parity", [&]() -> Verdict {
        if (!full) return {false, "setup failed: " + setup_error};
        std::map<std::string, std::set<FrameRole>> roles;
        for (const auto& r : full->report.rows)
          if (r.frames > 0) roles[r.scene].insert(r.role);
        bool ok = roles.size() == data->test.size();
        std::string detail;
        for (const auto& [scene, rs] : roles) {
          ok = ok && rs.size() == 2;
          detail += scene + (rs.size() == 2 ? " SF+EF; " : " missing a role; ");
        }
        const std::string csv = train::format_report_csv(full->report);
        return {ok, detail + "one checkpoint, " + std::to_string(full->ckpt.params.total_count()) + " params, " +
                        std::to_string(std::count(csv.begin(), csv.end(), '\n') - 1) + " CSV rows"};
      });
  }

  std::printf("%d criteria failed\n", failures);
  return failures;
}
