#include "stss/train/train.hpp"

#include "stss/error.hpp"
#include "stss/numerics/optim.hpp"
#include "stss/train/loss.hpp"
#include "stss/train/metrics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace stss::train {

namespace fs = std::filesystem;
using scene::Image;

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr > 0.0f) || !std::isfinite(lr)) throw ConfigError("lr must be > 0");
  if (decay_step < 1) throw ConfigError("decay_step must be >= 1");
  if (!(decay_gamma > 0.0f && decay_gamma <= 1.0f)) throw ConfigError("decay_gamma must be in (0, 1]");
  if (crop < 4 || crop % 4 != 0) throw ConfigError("crop must be a positive multiple of 4");
  if (crops_per_image < 1) throw ConfigError("crops_per_image must be >= 1");
  if (!(w_p >= 0.0f) || !std::isfinite(w_p)) throw ConfigError("w_p must be >= 0");
  if (frame_stride < 1) throw ConfigError("frame_stride must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  rrm.validate();
}

float scheduled_lr(const TrainConfig& cfg, int epoch, int step) {
  return num::step_decay_lr(cfg.lr, cfg.decay_unit == DecayUnit::Epoch ? epoch : step, cfg.decay_step,
                            cfg.decay_gamma);
}

std::vector<Sample> list_samples(const std::vector<fs::path>& clip_dirs, int stride) {
  if (stride < 1) throw ContractError("list_samples: stride must be >= 1");
  std::vector<Sample> out;
  for (const auto& dir : clip_dirs) {
    const scene::ClipManifest m = scene::read_manifest(dir / scene::kManifestName);
    if (!m.meta.count("layout")) throw IoError(dir.string() + ": clip has not been preprocessed");
    const auto it = m.meta.find("scene");
    const std::string name = it != m.meta.end() ? it->second : dir.filename().string();
    int eligible = 0;
    for (const auto& r : m.records) {
      if (r.input == "-") continue;
      if (r.hr == "-") throw IoError(dir.string() + ": frame " + std::to_string(r.index) + " has no HR");
      if (eligible++ % stride != 0) continue;
      out.push_back({name, r.index, r.role, dir / r.input, dir / r.hr});
    }
  }
  return out;
}

namespace {

Image crop_image(const Image& img, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
  Image out(img.channels, h, w);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(img.data.begin() + static_cast<std::ptrdiff_t>((c * img.height + y0 + y) * img.width + x0), w,
                  out.data.begin() + static_cast<std::ptrdiff_t>((c * h + y) * w));
  return out;
}

void dump_batch(const fs::path& dir, int step, const Sample& s, const std::vector<Image>& inputs,
                const std::vector<Image>& targets, const std::string& what) {
  fs::create_directories(dir);
  char stem[64];
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::snprintf(stem, sizeof stem, "nan_step%06d_crop%zu", step, i);
    scene::write_frame(dir / (std::string(stem) + "_input.stsf"), inputs[i], s.role);
    scene::write_frame(dir / (std::string(stem) + "_target.stsf"), targets[i], s.role);
  }
  std::snprintf(stem, sizeof stem, "nan_step%06d.txt", step);
  std::ofstream(dir / stem) << "step " << step << "\nsample " << s.input.string() << "\nerror " << what << "\n";
}

} // namespace

TrainResult train(const std::vector<Sample>& samples, const TrainConfig& cfg, const net::NetConfig& net_cfg,
                  const TrainHooks& hooks) {
  cfg.validate();
  net_cfg.validate();
  if (samples.empty()) throw ContractError("train: no samples");

  TrainResult result;
  net::init_params(result.params, net_cfg);
  num::ParamStore& params = result.params;
  const PerceptualProxy proxy;
  num::AdamState adam;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto lr_crop = static_cast<std::size_t>(cfg.crop / 2);

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const std::size_t idx : order) {
      const Sample& s = samples[idx];
      const Image in = net::prepare_net_input(scene::read_frame(s.input));
      const Image hr = scene::read_frame(s.hr);
      if (hr.height != 2 * in.height || hr.width != 2 * in.width)
        throw ContractError(s.hr.string() + ": HR is not twice the input size");
      if (lr_crop > in.width || lr_crop > in.height)
        throw ContractError("crop " + std::to_string(cfg.crop) + " exceeds the frame size");

      std::vector<Image> planes, weights, targets;
      std::uniform_int_distribution<std::size_t> px(0, in.width - lr_crop), py(0, in.height - lr_crop);
      for (int c = 0; c < cfg.crops_per_image; ++c) {
        const std::size_t x0 = px(rng), y0 = py(rng);
        rrm::Augmented a = rrm::augment(crop_image(in, x0, y0, lr_crop, lr_crop), cfg.rrm, rng);
        planes.push_back(std::move(a.planes));
        weights.push_back(upscale_mask(a.weights, 2));
        targets.push_back(crop_image(hr, 2 * x0, 2 * y0, 2 * lr_crop, 2 * lr_crop));
      }

      const float lr = scheduled_lr(cfg, epoch, step);
      double loss_value = 0.0;
      try {
        params.zero_grad();
        const Tensor out = net::forward(net::to_tensor(planes), params, net_cfg);
        Tensor loss = total_loss(out, net::to_tensor(targets), net::to_tensor(weights), cfg.w_p, proxy);
        loss_value = loss.item();
        if (!std::isfinite(loss_value)) throw NumericError("loss is not finite");
        loss.backward();
        num::AdamConfig ac;
        ac.lr = lr;
        num::adam_step(params, num::collect_grads(params), adam, ac, step + 1);
      } catch (const NumericError& e) {
        std::ostringstream msg;
        msg << "training diverged at step " << step << " (epoch " << epoch << ", lr " << lr << ") on "
            << s.input.string() << ": " << e.what();
        if (!hooks.dump_dir.empty()) {
          dump_batch(hooks.dump_dir, step, s, planes, targets, e.what());
          msg << "; batch dumped to " << hooks.dump_dir.string();
        }
        throw NumericError(msg.str());
      }
      const LossRecord rec{step, epoch, lr, loss_value};
      result.curve.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      ++step;
    }
    if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
      hooks.on_checkpoint(epoch, params);
  }
  return result;
}

void write_loss_curve(const fs::path& path, const std::vector<LossRecord>& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,epoch,lr,loss\n";
  char line[128];
  for (const auto& r : curve) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g\n", r.step, r.epoch, static_cast<double>(r.lr), r.loss);
    out << line;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

namespace pt = boost::property_tree;

template <class T> T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  if (!(is >> v) || !(is >> std::ws).eof()) throw ConfigError("bad value for " + key + ": '" + text + "'");
  return v;
}

template <> bool parse_value<bool>(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + text + "'");
}

class Section {
public:
  Section(const pt::ptree& tree, std::string name, std::set<std::string> keys) : name_(std::move(name)) {
    const auto node = tree.get_child_optional(name_);
    if (!node) return;
    for (const auto& [k, v] : *node) {
      if (!keys.count(k)) throw ConfigError("unknown key [" + name_ + "] " + k);
      values_[k] = v.data();
    }
  }
  template <class T> void get(const std::string& key, T& out) const {
    const auto it = values_.find(key);
    if (it != values_.end()) out = parse_value<T>(name_ + "." + key, it->second);
  }
  const std::string* raw(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

private:
  std::string name_;
  std::map<std::string, std::string> values_;
};

} // namespace

RunConfig load_run_config(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& [name, _] : tree)
    if (name != "data" && name != "train" && name != "rrm" && name != "net")
      throw ConfigError(path.string() + ": unknown section [" + name + "]");

  RunConfig rc;
  const Section data(tree, "data", {"clips"});
  if (const std::string* clips = data.raw("clips")) {
    std::istringstream is(*clips);
    std::string item;
    while (std::getline(is, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) rc.clips.push_back(path.parent_path() / item);
    }
  }
  if (rc.clips.empty()) throw ConfigError(path.string() + ": [data] clips is empty");

  TrainConfig& t = rc.train;
  const Section tr(tree, "train",
                   {"epochs", "lr", "decay_step", "decay_gamma", "decay_unit", "crop", "crops_per_image", "w_p",
                    "seed", "frame_stride", "checkpoint_every"});
  tr.get("epochs", t.epochs);
  tr.get("lr", t.lr);
  tr.get("decay_step", t.decay_step);
  tr.get("decay_gamma", t.decay_gamma);
  if (const std::string* unit = tr.raw("decay_unit")) {
    if (*unit == "epoch") t.decay_unit = DecayUnit::Epoch;
    else if (*unit == "iteration") t.decay_unit = DecayUnit::Iteration;
    else throw ConfigError("decay_unit must be epoch or iteration");
  }
  tr.get("crop", t.crop);
  tr.get("crops_per_image", t.crops_per_image);
  tr.get("w_p", t.w_p);
  tr.get("seed", t.seed);
  tr.get("frame_stride", t.frame_stride);
  tr.get("checkpoint_every", t.checkpoint_every);

  const Section r(tree, "rrm",
                  {"enabled", "rect_count_min", "rect_count_max", "max_frac", "weight_hi", "weight_lo"});
  r.get("enabled", t.rrm.enabled);
  r.get("rect_count_min", t.rrm.rect_count_min);
  r.get("rect_count_max", t.rrm.rect_count_max);
  r.get("max_frac", t.rrm.max_frac);
  r.get("weight_hi", t.rrm.weight_hi);
  r.get("weight_lo", t.rrm.weight_lo);
  t.rrm.seed = t.seed;

  const Section n(tree, "net", {"preset", "erm", "seed"});
  std::string preset = "desk";
  n.get("preset", preset);
  if (preset == "desk") rc.net = net::desk_preset();
  else if (preset == "paper") rc.net = net::paper_preset();
  else throw ConfigError("net.preset must be desk or paper");
  n.get("erm", rc.net.use_erm);
  rc.net.seed = t.seed;
  n.get("seed", rc.net.seed);

  t.validate();
  rc.net.validate();
  return rc;
}

} // namespace stss::train
