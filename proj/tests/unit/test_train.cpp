#include "stss/error.hpp"
#include "stss/net/stssnet.hpp"
#include "stss/numerics/grad_check.hpp"
#include "stss/numerics/init.hpp"
#include "stss/numerics/ops.hpp"
#include "stss/scene/clip.hpp"
#include "stss/train/eval.hpp"
#include "stss/train/loss.hpp"
#include "stss/train/metrics.hpp"
#include "stss/train/train.hpp"
#include "stss/warp/warp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

using namespace stss;
using namespace stss::train;
using stss::num::Tensor;
namespace fs = std::filesystem;

namespace {

Image random_image(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(c, h, w);
  for (auto& v : img.data) v = u(rng);
  return img;
}

// Direct 2-D window SSIM at one pixel with mirrored borders.
double ssim_oracle_at(const Image& a, const Image& b, std::ptrdiff_t y, std::ptrdiff_t x) {
  const auto H = static_cast<std::ptrdiff_t>(a.height), W = static_cast<std::ptrdiff_t>(a.width);
  auto mirror = [](std::ptrdiff_t i, std::ptrdiff_t n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  double wsum = 0, mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / 4.5);
      const std::ptrdiff_t yy = mirror(y + dy, H), xx = mirror(x + dx, W);
      const double p = a.at(0, yy, xx), q = b.at(0, yy, xx);
      wsum += w;
      mx += w * p;
      my += w * q;
      sxx += w * p * p;
      syy += w * q * q;
      sxy += w * p * q;
    }
  mx /= wsum;
  my /= wsum;
  const double vx = sxx / wsum - mx * mx, vy = syy / wsum - my * my, c = sxy / wsum - mx * my;
  const double c1 = 1e-4, c2 = 9e-4;
  return (2 * mx * my + c1) * (2 * c + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

Tensor rand_tensor(num::Shape s, std::uint64_t seed) { return num::uniform(s, 0.0f, 1.0f, seed); }

} // namespace

TEST(WeightedL1, Examples) {
  const Tensor a = rand_tensor({1, 3, 4, 4}, 1);
  const Tensor ones({1, 1, 4, 4}, 1.0f);
  EXPECT_EQ(weighted_l1(a, a, ones).item(), 0.0f);
  const Tensor zero({1, 3, 4, 4}, 0.0f), one({1, 3, 4, 4}, 1.0f);
  EXPECT_FLOAT_EQ(weighted_l1(zero, one, ones).item(), 1.0f);
  Tensor half({1, 1, 4, 4}, 1.0f);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 4; ++x) half.at(0, 0, y, x) = 2.0f;
  EXPECT_FLOAT_EQ(weighted_l1(zero, one, half).item(), 1.5f);
  EXPECT_THROW(weighted_l1(zero, Tensor({1, 3, 4, 2}), ones), ContractError);
}

TEST(PerceptualProxy, ZeroSymmetricNonNegative) {
  const PerceptualProxy p;
  const Tensor a = rand_tensor({2, 3, 8, 8}, 2), b = rand_tensor({2, 3, 8, 8}, 3);
  EXPECT_EQ(p.loss(a, a).item(), 0.0f);
  EXPECT_GT(p.loss(a, b).item(), 0.0f);
  EXPECT_EQ(p.loss(a, b).item(), p.loss(b, a).item());
  EXPECT_EQ(p.features(a).size(), 3u);
  EXPECT_THROW(p.features(rand_tensor({1, 3, 6, 8}, 4)), ContractError);
}

TEST(PerceptualProxy, SeedFixed) {
  const Tensor a = rand_tensor({1, 3, 8, 8}, 5), b = rand_tensor({1, 3, 8, 8}, 6);
  EXPECT_EQ(PerceptualProxy().loss(a, b).item(), PerceptualProxy().loss(a, b).item());
  EXPECT_NE(PerceptualProxy(1).loss(a, b).item(), PerceptualProxy(2).loss(a, b).item());
}

TEST(PerceptualProxy, LoadsWeightsFromFile) {
  num::ParamStore store;
  const int widths[] = {3, 4, 4, 4};
  for (int s = 0; s < 3; ++s) {
    const std::string name = "feat." + std::to_string(s);
    store.add(name + ".weight", num::uniform({std::size_t(widths[s + 1]), std::size_t(widths[s]), 1, 1}, -1, 1, s));
    store.add(name + ".bias", Tensor({std::size_t(widths[s + 1])}));
  }
  const fs::path path = fs::temp_directory_path() / "stss_proxy_weights.bin";
  num::save_params(store, path);
  const PerceptualProxy p = PerceptualProxy::from_file(path);
  EXPECT_EQ(p.features(rand_tensor({1, 3, 8, 8}, 7))[2].dim(1), 4u);
  fs::remove(path);
}

TEST(TotalLoss, Composition) {
  const PerceptualProxy p;
  const Tensor a = rand_tensor({1, 3, 8, 8}, 8), b = rand_tensor({1, 3, 8, 8}, 9);
  const Tensor w = num::uniform({1, 1, 8, 8}, 1.0f, 2.0f, 10);
  EXPECT_EQ(total_loss(a, b, w, 0.0f, p).item(), weighted_l1(a, b, w).item());
  EXPECT_EQ(total_loss(a, a, w, 0.01f, p).item(), 0.0f);
  EXPECT_NEAR(total_loss(a, b, w, 0.01f, p).item(), weighted_l1(a, b, w).item() + 0.01f * p.loss(a, b).item(),
              1e-6);
  EXPECT_THROW(total_loss(a, b, w, -1.0f, p), ContractError);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  const PerceptualProxy p;
  Tensor pred = rand_tensor({1, 3, 8, 8}, 11);
  pred.set_requires_grad(true);
  const Tensor target = rand_tensor({1, 3, 8, 8}, 12), w = num::uniform({1, 1, 8, 8}, 1.0f, 2.0f, 13);
  std::vector<num::GradProbe> probes;
  for (std::size_t i = 0; i < pred.numel(); i += 7) probes.push_back({pred, i});
  // w_p of 1 so the proxy term is visible next to the L1 term.
  EXPECT_LT(num::grad_check_probes([&] { return total_loss(pred, target, w, 1.0f, p); }, probes), 1e-2f);
}

TEST(Psnr, ClosedFormsAndLoopOracle) {
  const Image a = random_image(3, 8, 8, 1);
  EXPECT_EQ(psnr(a, a), kPsnrCap);
  Image x(3, 4, 4, 0.5f), y(3, 4, 4, 0.6f);
  EXPECT_NEAR(psnr(x, y), 20.0, 1e-5);
  const Image b = random_image(3, 8, 8, 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::pow(double(a.data[i]) - b.data[i], 2.0);
  EXPECT_NEAR(psnr(a, b), 10.0 * std::log10(1.0 / (acc / a.data.size())), 1e-6);
  EXPECT_THROW(psnr(a, Image(3, 8, 4)), ContractError);
}

TEST(Psnr, ClampsToUnitRange) {
  Image a(3, 2, 2, 1.5f), b(3, 2, 2, 1.0f);
  EXPECT_EQ(psnr(a, b), kPsnrCap);
}

TEST(Ssim, Examples) {
  const Image a = random_image(3, 16, 16, 3);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-9);
  Image inv = a;
  for (auto& v : inv.data) v = 1.0f - v;
  EXPECT_LT(ssim(a, inv), 0.5);
  double prev = -1.0;
  for (float eps : {0.1f, 0.01f, 0.001f}) {
    const double s = ssim(Image(1, 16, 16, 0.4f), Image(1, 16, 16, 0.4f + eps));
    EXPECT_GT(s, prev);
    prev = s;
  }
  EXPECT_GT(prev, 0.999);
}

TEST(Ssim, MatchesDirectWindowOracle) {
  const Image a = random_image(1, 13, 17, 4), b = random_image(1, 13, 17, 5);
  const Image m = ssim_map(a, b);
  for (std::ptrdiff_t y = 0; y < 13; ++y)
    for (std::ptrdiff_t x = 0; x < 17; ++x) EXPECT_NEAR(m.at(0, y, x), ssim_oracle_at(a, b, y, x), 1e-5);
}

TEST(Canny, StepEdgeIsThinAndStraight) {
  Image img(3, 12, 16, 0.0f);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 12; ++y)
      for (std::size_t x = 8; x < 16; ++x) img.at(c, y, x) = 1.0f;
  const Image e = canny_edges(img);
  for (std::size_t y = 0; y < 12; ++y) {
    int count = 0;
    for (std::size_t x = 0; x < 16; ++x) count += e.at(0, y, x) > 0.5f;
    EXPECT_EQ(count, 1) << "row " << y;
    EXPECT_TRUE(e.at(0, y, 7) > 0.5f || e.at(0, y, 8) > 0.5f);
  }
}

TEST(Canny, ThresholdsAndHysteresis) {
  const Image flat = canny_edges(Image(3, 8, 8, 0.3f));
  EXPECT_EQ(std::count(flat.data.begin(), flat.data.end(), 1.0f), 0);
  // Step of 20 levels: Sobel magnitude 80 stays below the low threshold.
  Image weak(3, 8, 8, 0.0f);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 4; x < 8; ++x) weak.at(c, y, x) = 20.0f / 255.0f;
  const Image none = canny_edges(weak);
  EXPECT_EQ(std::count(none.data.begin(), none.data.end(), 1.0f), 0);
  // Vertical step whose height grows down the image: rows 0-3 give Sobel
  // magnitudes 144-156 (weak), rows 4-7 give 220-232 (strong).
  auto step = [](std::function<float(std::size_t)> level) {
    Image img(3, 8, 8, 0.0f);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 4; x < 8; ++x) img.at(c, y, x) = level(y) / 255.0f;
    return img;
  };
  auto rows_with_one_edge = [](const Image& e) {
    int rows = 0, total = 0;
    for (std::size_t y = 0; y < 8; ++y) {
      int n = 0;
      for (std::size_t x = 0; x < 8; ++x) n += e.at(0, y, x) > 0.5f;
      rows += n == 1;
      total += n;
    }
    return std::make_pair(rows, total);
  };
  const auto linked = rows_with_one_edge(canny_edges(step([](std::size_t y) { return y < 4 ? 36.0f + y : 51.0f + y; })));
  EXPECT_EQ(linked.first, 8); // weak rows kept through the strong ones
  EXPECT_EQ(linked.second, 8);
  const auto isolated = rows_with_one_edge(canny_edges(step([](std::size_t y) { return 36.0f + (y % 4); })));
  EXPECT_EQ(isolated.second, 0);
}

TEST(RegionMetrics, FullMaskMatchesPlain) {
  const Image a = random_image(3, 16, 16, 6), b = random_image(3, 16, 16, 7);
  const RegionMetrics r = region_metrics(a, b, Image(1, 16, 16, 1.0f));
  EXPECT_FALSE(r.empty);
  EXPECT_NEAR(r.psnr(), psnr(a, b), 1e-9);
  EXPECT_NEAR(r.ssim(), ssim(a, b), 1e-9);
}

TEST(RegionMetrics, IdenticalAndEmpty) {
  const Image a = random_image(3, 16, 16, 8);
  Image mask(1, 16, 16, 0.0f);
  mask.at(0, 3, 4) = 1.0f;
  const RegionMetrics r = region_metrics(a, a, mask);
  EXPECT_EQ(r.psnr(), kPsnrCap);
  EXPECT_NEAR(r.ssim(), 1.0, 1e-9);
  EXPECT_TRUE(region_metrics(a, a, Image(1, 16, 16, 0.0f)).empty);
}

TEST(RegionMetrics, InpaintedHoleBeatsBlackHole) {
  const Image truth = random_image(3, 16, 16, 9);
  Image mask(1, 16, 16, 0.0f), black = truth, inpainted = truth;
  for (std::size_t y = 4; y < 10; ++y)
    for (std::size_t x = 5; x < 12; ++x) {
      mask.at(0, y, x) = 1.0f;
      for (std::size_t c = 0; c < 3; ++c) {
        black.at(c, y, x) = 0.0f;
        inpainted.at(c, y, x) = 0.5f;
      }
    }
  EXPECT_GT(region_metrics(inpainted, truth, mask).psnr(), region_metrics(black, truth, mask).psnr());
}

TEST(Schedule, StepDecay) {
  TrainConfig cfg;
  cfg.lr = 1e-4f;
  EXPECT_FLOAT_EQ(scheduled_lr(cfg, 0, 0), 1e-4f);
  EXPECT_FLOAT_EQ(scheduled_lr(cfg, 49, 10000), 1e-4f);
  EXPECT_FLOAT_EQ(scheduled_lr(cfg, 50, 0), 0.9f * scheduled_lr(cfg, 49, 0));
  cfg.decay_unit = DecayUnit::Iteration;
  EXPECT_FLOAT_EQ(scheduled_lr(cfg, 0, 50), 0.9e-4f);
  EXPECT_FLOAT_EQ(scheduled_lr(cfg, 99, 49), 1e-4f);
}

TEST(TrainConfigCheck, RejectsBadValues) {
  TrainConfig c;
  c.validate();
  c.crop = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lr = 0.0f;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.decay_gamma = 1.5f;
  EXPECT_THROW(c.validate(), ConfigError);
}

class TinyClip : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "stss_train_tiny";
    fs::remove_all(dir_);
    scene::SceneSpec s = scene::make_desk_scene(0, 3, 11);
    s.lr_width = 32;
    s.lr_height = 32;
    scene::write_clip(s, dir_);
    warp::preprocess_clip_dir(dir_);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static TrainConfig tiny_config() {
    TrainConfig c;
    c.epochs = 1;
    c.lr = 1e-3f;
    c.crop = 16;
    c.crops_per_image = 2;
    return c;
  }
  static inline fs::path dir_;
};

TEST_F(TinyClip, SamplesCoverBothRoles) {
  const auto all = list_samples({dir_});
  ASSERT_EQ(all.size(), 6u); // frames 5..10
  int sf = 0;
  for (const auto& s : all) sf += s.role == scene::FrameRole::SF;
  EXPECT_EQ(sf, 3);
  EXPECT_EQ(list_samples({dir_}, 2).size(), 3u);
  const fs::path raw = fs::temp_directory_path() / "stss_train_raw";
  fs::remove_all(raw);
  scene::SceneSpec s = scene::make_desk_scene(0, 3, 6);
  s.lr_width = 16;
  s.lr_height = 8;
  scene::write_clip(s, raw);
  EXPECT_THROW(list_samples({raw}), IoError);
  fs::remove_all(raw);
}

TEST_F(TinyClip, OverfitsSingleSample) {
  TrainConfig c = tiny_config();
  c.epochs = 500;
  c.crop = 64; // the whole frame, so every step sees the same input
  c.crops_per_image = 1;
  c.rrm.enabled = false;
  const auto samples = list_samples({dir_});
  const TrainResult r = train::train({samples[1]}, c, net::desk_preset());
  ASSERT_EQ(r.curve.size(), 500u);
  // Loss averaged over blocks of 50 steps must fall block after block.
  std::vector<double> blocks(10, 0.0);
  for (const auto& rec : r.curve) blocks[rec.step / 50] += rec.loss / 50.0;
  for (std::size_t i = 1; i < blocks.size(); ++i) EXPECT_LT(blocks[i], blocks[i - 1]) << "block " << i;
  EXPECT_LT(blocks.back(), 0.5 * blocks.front());
}

TEST_F(TinyClip, SameSeedSameResult) {
  const auto samples = list_samples({dir_});
  TrainConfig c = tiny_config();
  c.epochs = 2;
  const TrainResult a = train::train(samples, c, net::desk_preset());
  const TrainResult b = train::train(samples, c, net::desk_preset());
  EXPECT_EQ(num::serialize_params(a.params), num::serialize_params(b.params));
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].loss, b.curve[i].loss);
  c.seed = 2;
  EXPECT_NE(num::serialize_params(train::train(samples, c, net::desk_preset()).params), num::serialize_params(a.params));
}

TEST_F(TinyClip, CheckpointHookFires) {
  TrainConfig c = tiny_config();
  c.epochs = 4;
  c.checkpoint_every = 2;
  std::vector<int> epochs;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](int e, const num::ParamStore&) { epochs.push_back(e); };
  train::train(list_samples({dir_}, 3), c, net::desk_preset(), hooks);
  EXPECT_EQ(epochs, (std::vector<int>{1, 3}));
}

TEST_F(TinyClip, DivergenceAbortsWithDump) {
  TrainConfig c = tiny_config();
  c.epochs = 20;
  c.lr = 1e30f;
  TrainHooks hooks;
  hooks.dump_dir = fs::temp_directory_path() / "stss_nan_dump";
  fs::remove_all(hooks.dump_dir);
  EXPECT_THROW(train::train(list_samples({dir_}), c, net::desk_preset(), hooks), NumericError);
  int files = 0;
  for (const auto& e : fs::directory_iterator(hooks.dump_dir)) files += e.path().extension() == ".stsf";
  EXPECT_EQ(files, 2 * c.crops_per_image);
  fs::remove_all(hooks.dump_dir);
}

TEST_F(TinyClip, CropLargerThanFrameRejected) {
  TrainConfig c = tiny_config();
  c.crop = 128;
  EXPECT_THROW(train::train(list_samples({dir_}), c, net::desk_preset()), ContractError);
}

TEST_F(TinyClip, ReportHasBothRoles) {
  const EvalReport r = evaluate(dir_, baseline_predictor());
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].role, scene::FrameRole::SF);
  EXPECT_EQ(r.rows[1].role, scene::FrameRole::EF);
  EXPECT_EQ(r.rows[0].frames, 3);
  EXPECT_EQ(r.rows[1].frames, 3);
  const std::string csv = format_report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scene,role,psnr,ssim,edge_psnr,edge_ssim,hole_psnr,hole_ssim");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(format_report_csv(evaluate(dir_, baseline_predictor())), csv);
}

TEST_F(TinyClip, ZeroInitModelEqualsBaseline) {
  net::Checkpoint ck;
  ck.cfg = net::desk_preset();
  net::init_params(ck.params, ck.cfg);
  EXPECT_EQ(format_report_csv(evaluate(dir_, model_predictor(ck))), format_report_csv(evaluate(dir_, baseline_predictor())));
}

TEST_F(TinyClip, HoleRegionFollowsRole) {
  const Image in = scene::read_frame(dir_ / "frames/000007_in.stsf");
  const Image ef = hole_region(in, scene::FrameRole::EF), sf = hole_region(in, scene::FrameRole::SF);
  for (std::size_t i = 0; i < ef.data.size(); ++i) {
    EXPECT_EQ(ef.data[i], in.plane(warp::kMasks)[i] > 0.5f ? 0.0f : 1.0f);
    EXPECT_EQ(sf.data[i], in.plane(warp::kMasks + 1)[i] > 0.5f ? 0.0f : 1.0f);
  }
}

TEST_F(TinyClip, EvaluateWritesPredictions) {
  const fs::path out = fs::temp_directory_path() / "stss_eval_out";
  fs::remove_all(out);
  evaluate(dir_, baseline_predictor(), out, true);
  EXPECT_TRUE(fs::exists(out / "000005_pred.stsf"));
  EXPECT_TRUE(fs::exists(out / "000010_pred.png"));
  fs::remove_all(out);
}

TEST(RunConfigFile, ParsesSections) {
  const fs::path p = fs::temp_directory_path() / "stss_run.ini";
  std::ofstream(p) << "[data]\nclips = a, b/c\n[train]\nepochs = 3\nlr = 0.002\ndecay_unit = iteration\n"
                      "[rrm]\nenabled = false\n[net]\npreset = paper\nerm = false\n";
  const RunConfig rc = load_run_config(p);
  ASSERT_EQ(rc.clips.size(), 2u);
  EXPECT_EQ(rc.clips[1], p.parent_path() / "b/c");
  EXPECT_EQ(rc.train.epochs, 3);
  EXPECT_FLOAT_EQ(rc.train.lr, 0.002f);
  EXPECT_EQ(rc.train.decay_unit, DecayUnit::Iteration);
  EXPECT_FALSE(rc.train.rrm.enabled);
  EXPECT_EQ(rc.net.preset, "paper");
  EXPECT_FALSE(rc.net.use_erm);
  std::ofstream(p) << "[data]\nclips = a\n[train]\nepoch = 3\n";
  EXPECT_THROW(load_run_config(p), ConfigError);
  std::ofstream(p) << "[data]\nclips = a\n[train]\nepochs = three\n";
  EXPECT_THROW(load_run_config(p), ConfigError);
  std::ofstream(p) << "[train]\nepochs = 3\n";
  EXPECT_THROW(load_run_config(p), ConfigError);
  fs::remove(p);
}

TEST(RunConfigFile, ShippedConfigsLoad) {
  const fs::path dir = fs::path(STSS_SOURCE_DIR) / "configs";
  const RunConfig desk = load_run_config(dir / "train_desk.ini");
  EXPECT_EQ(desk.clips.size(), 2u);
  EXPECT_EQ(desk.net.preset, "desk");
  EXPECT_EQ(desk.train.crop % 4, 0);
  const RunConfig paper = load_run_config(dir / "train_paper.ini");
  EXPECT_EQ(paper.net.preset, "paper");
  EXPECT_EQ(paper.train.epochs, 100);
  EXPECT_EQ(paper.train.crop, 256);
}
