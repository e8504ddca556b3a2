#include "stss/net/stssnet.hpp"

#include "stss/error.hpp"
#include "stss/numerics/layers.hpp"
#include "stss/numerics/ops.hpp"
#include "stss/rrm/rrm.hpp"
#include "stss/scene/render.hpp"
#include "stss/warp/warp.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace stss::net {
namespace {

constexpr int kGBufferChannels = 9;
constexpr std::size_t kOriginal = warp::kNetInputChannels; // offset of the original copy

enum class Group { Backbone, History };

struct ConvDef {
  std::string name;
  int in, out, k;
  Group group;
  int level; // pixel count = LR pixels / 4^level; -1 = HR resolution
  bool zero_init = false;
};

std::string enc(int level, int i) { return "backbone.enc" + std::to_string(level) + "." + std::to_string(i); }
std::string dec(int j) { return "backbone.dec" + std::to_string(j); }
std::string hist(int i) { return "history." + std::to_string(i); }

int decoder_level(const NetConfig& cfg, int j) { return cfg.levels() - 1 - j; }

std::vector<ConvDef> conv_layout(const NetConfig& cfg) {
  std::vector<ConvDef> defs;
  const int L = cfg.levels();
  int in = static_cast<int>(rrm::kAugmentedChannels);
  for (int l = 0; l < L; ++l) {
    defs.push_back({enc(l, 0), in, cfg.encoder[l], 3, Group::Backbone, l});
    defs.push_back({enc(l, 1), cfg.encoder[l], cfg.encoder[l], 3, Group::Backbone, l});
    in = cfg.encoder[l];
  }
  defs.push_back({hist(0), 8, cfg.history[0], 3, Group::History, 0});
  defs.push_back({hist(1), cfg.history[0], cfg.history[1], 3, Group::History, cfg.history_fuse_level});
  defs.push_back({hist(2), cfg.history[1], cfg.history[2], 3, Group::History, cfg.history_fuse_level});
  int prev = cfg.encoder[L - 1];
  for (int j = 0; j < L; ++j) {
    const int level = decoder_level(cfg, j);
    int ch = prev;
    if (level < L - 1) ch += cfg.encoder[level];
    if (level == cfg.history_fuse_level) ch += cfg.history[2];
    defs.push_back({dec(j), ch, cfg.decoder[j], 3, Group::Backbone, level});
    prev = cfg.decoder[j];
  }
  defs.push_back({"backbone.head.0", prev, cfg.head, 3, Group::Backbone, -1});
  defs.push_back({"backbone.head.1", cfg.head, 3, 3, Group::Backbone, -1, true});
  return defs;
}

std::vector<int> parse_ints(const std::string& s, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("net config: bad integer list for " + key);
    }
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Constant tensor holding channels [first, first + count) of x.
Tensor channels(const Tensor& x, std::size_t first, std::size_t count) {
  const std::size_t n = x.dim(0), c = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out({n, count, x.dim(2), x.dim(3)});
  for (std::size_t b = 0; b < n; ++b)
    std::copy_n(x.data().begin() + static_cast<long>((b * c + first) * plane), count * plane,
                out.data().begin() + static_cast<long>(b * count * plane));
  return out;
}

// 2x2 minimum pooling of a binary mask: a low-resolution pixel is valid only
// if every covered pixel is.
Tensor min_pool2(const Tensor& m) {
  const std::size_t n = m.dim(0), c = m.dim(1), h = m.dim(2) / 2, w = m.dim(3) / 2;
  Tensor out({n, c, h, w});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          out.at(b, ch, y, x) = std::min(std::min(m.at(b, ch, 2 * y, 2 * x), m.at(b, ch, 2 * y, 2 * x + 1)),
                                         std::min(m.at(b, ch, 2 * y + 1, 2 * x), m.at(b, ch, 2 * y + 1, 2 * x + 1)));
  return out;
}

Tensor act(const Tensor& x, const NetConfig& cfg) { return num::leaky_relu(x, cfg.slope); }

} // namespace

void NetConfig::validate() const {
  const int L = levels();
  if (L < 1) throw ConfigError("net: encoder schedule is empty");
  if (decoder.size() != encoder.size()) throw ConfigError("net: encoder and decoder schedules must have equal length");
  auto positive = [](int v) { return v > 0; };
  if (!std::all_of(encoder.begin(), encoder.end(), positive) || !std::all_of(decoder.begin(), decoder.end(), positive) ||
      head <= 0 || !std::all_of(history.begin(), history.end(), positive))
    throw ConfigError("net: channel counts must be positive");
  if (history_fuse_level < 0 || history_fuse_level >= L) throw ConfigError("net: history_fuse_level out of range");
  if (upscale_factor != 2) throw ConfigError("net: upscale_factor is fixed at 2");
  if (use_erm) erm.validate();
}

NetConfig desk_preset() { return NetConfig{}; }

NetConfig paper_preset() {
  NetConfig c;
  c.preset = "paper";
  c.encoder = {16, 24, 32, 48};
  c.decoder = {48, 32, 24, 16};
  c.head = 16;
  c.history = {32, 64, 64};
  c.history_fuse_level = 1;
  c.erm = erm::ErmConfig{5, 96, 2};
  return c;
}

std::string format_net_config(const NetConfig& c) {
  std::ostringstream os;
  os << "preset=" << c.preset << "\n"
     << "encoder=" << join(c.encoder) << "\n"
     << "decoder=" << join(c.decoder) << "\n"
     << "head=" << c.head << "\n"
     << "history=" << join({c.history.begin(), c.history.end()}) << "\n"
     << "history_fuse_level=" << c.history_fuse_level << "\n"
     << "erm.enabled=" << (c.use_erm ? 1 : 0) << "\n"
     << "erm.window=" << c.erm.window << "\n"
     << "erm.embed_dim=" << c.erm.embed_dim << "\n"
     << "erm.encoder_layers=" << c.erm.encoder_layers << "\n"
     << "slope=" << c.slope << "\n"
     << "upscale_factor=" << c.upscale_factor << "\n"
     << "seed=" << c.seed << "\n";
  return os.str();
}

NetConfig parse_net_config(const std::string& text) {
  NetConfig c;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("net config: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto as_int = [&] {
      const auto v = parse_ints(value, key);
      if (v.size() != 1) throw ConfigError("net config: " + key + " expects one integer");
      return v[0];
    };
    if (key == "preset") c.preset = value;
    else if (key == "encoder") c.encoder = parse_ints(value, key);
    else if (key == "decoder") c.decoder = parse_ints(value, key);
    else if (key == "head") c.head = as_int();
    else if (key == "history") {
      const auto v = parse_ints(value, key);
      if (v.size() != 3) throw ConfigError("net config: history expects three integers");
      std::copy(v.begin(), v.end(), c.history.begin());
    } else if (key == "history_fuse_level") c.history_fuse_level = as_int();
    else if (key == "erm.enabled") c.use_erm = as_int() != 0;
    else if (key == "erm.window") c.erm.window = as_int();
    else if (key == "erm.embed_dim") c.erm.embed_dim = as_int();
    else if (key == "erm.encoder_layers") c.erm.encoder_layers = as_int();
    else if (key == "slope") c.slope = std::stof(value);
    else if (key == "upscale_factor") c.upscale_factor = as_int();
    else if (key == "seed") c.seed = std::stoull(value);
    else throw ConfigError("net config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

scene::Image prepare_net_input(const scene::Image& net_input) {
  if (net_input.channels != warp::kNetInputChannels) throw ContractError("prepare_net_input: expected 21 channels");
  scene::Image out = net_input;
  for (float& d : out.plane(warp::kGBuffer + scene::kDepth)) d = 1.0f / (1.0f + std::max(d, 0.0f));
  return out;
}

HistoryInput history_input(const Tensor& augmented) {
  if (augmented.rank() != 4 || augmented.dim(1) != rrm::kAugmentedChannels)
    throw ConfigError("history_input: expected a 42-channel augmented input");
  return {num::concat_channels({channels(augmented, kOriginal + warp::kWarpedLr + 3, 6),
                                channels(augmented, kOriginal + warp::kMasks + 1, 2)})};
}

Tensor to_tensor(const std::vector<scene::Image>& images) {
  if (images.empty()) throw ContractError("to_tensor: no images");
  const auto& f = images.front();
  Tensor t({images.size(), f.channels, f.height, f.width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].channels != f.channels || !images[i].same_dims(f)) throw ContractError("to_tensor: image dims differ");
    std::copy(images[i].data.begin(), images[i].data.end(), t.data().begin() + static_cast<long>(i * f.data.size()));
  }
  return t;
}

scene::Image to_image(const Tensor& t, std::size_t n) {
  scene::Image img(t.dim(1), t.dim(2), t.dim(3));
  const auto begin = t.data().begin() + static_cast<long>(n * img.data.size());
  std::copy(begin, begin + static_cast<long>(img.data.size()), img.data.begin());
  return img;
}

void init_params(num::ParamStore& params, const NetConfig& cfg) {
  cfg.validate();
  for (const auto& d : conv_layout(cfg)) num::add_conv(params, d.name, d.in, d.out, d.k, cfg.seed, d.zero_init);
  if (cfg.use_erm) erm::register_params(params, cfg.erm, cfg.encoder.back(), kGBufferChannels, cfg.seed);
}

Tensor forward(const Tensor& augmented, const HistoryInput& history, const num::ParamStore& params,
               const NetConfig& cfg) {
  const int L = cfg.levels();
  if (augmented.rank() != 4 || augmented.dim(1) != rrm::kAugmentedChannels)
    throw ConfigError("forward: expected (N, " + std::to_string(rrm::kAugmentedChannels) + ", H, W) input, got " +
                      num::shape_str(augmented.shape()));
  const std::size_t div = std::size_t{1} << (L - 1);
  if (augmented.dim(2) % div || augmented.dim(3) % div)
    throw ConfigError("forward: input height/width must be divisible by " + std::to_string(div));

  std::vector<Tensor> skips;
  Tensor x = augmented;
  for (int l = 0; l < L; ++l) {
    if (l > 0) x = num::avg_pool2(x);
    x = act(num::conv(params, enc(l, 0), x), cfg);
    x = act(num::conv(params, enc(l, 1), x), cfg);
    skips.push_back(x);
  }

  Tensor deep = skips.back();
  if (cfg.use_erm) {
    Tensor gbuf = channels(augmented, kOriginal + warp::kGBuffer, kGBufferChannels);
    Tensor mask = channels(augmented, warp::kMasks, 1); // masked copy: holes plus any reshading rectangles
    for (int l = 1; l < L; ++l) {
      gbuf = num::avg_pool2(gbuf);
      mask = min_pool2(mask);
    }
    deep = erm::erm_block(params, cfg.erm, deep, gbuf, mask);
  }

  Tensor h = act(num::conv(params, hist(0), history.planes), cfg);
  for (int l = 0; l < cfg.history_fuse_level; ++l) h = num::avg_pool2(h);
  h = act(num::conv(params, hist(1), h), cfg);
  h = act(num::conv(params, hist(2), h), cfg);

  Tensor y = deep;
  for (int j = 0; j < L; ++j) {
    const int level = decoder_level(cfg, j);
    std::vector<Tensor> parts{level < L - 1 ? num::bilinear_upsample2(y) : y};
    if (level < L - 1) parts.push_back(skips[level]);
    if (level == cfg.history_fuse_level) parts.push_back(h);
    y = act(num::conv(params, dec(j), parts.size() == 1 ? parts[0] : num::concat_channels(parts)), cfg);
  }
  y = num::bilinear_upsample2(y);
  y = act(num::conv(params, "backbone.head.0", y), cfg);
  y = num::conv(params, "backbone.head.1", y);
  const Tensor base = num::bilinear_upsample2(channels(augmented, kOriginal + warp::kWarpedLr, 3));
  return num::add(y, base);
}

Tensor forward(const Tensor& augmented, const num::ParamStore& params, const NetConfig& cfg) {
  return forward(augmented, history_input(augmented), params, cfg);
}

ComponentTable count_params(const NetConfig& cfg) {
  cfg.validate();
  ComponentTable t;
  for (const auto& d : conv_layout(cfg)) {
    const auto n = num::conv_param_count(d.in, d.out, d.k);
    (d.group == Group::History ? t.history : t.backbone) += n;
  }
  if (cfg.use_erm) t.erm = erm::erm_param_count(cfg.erm, cfg.encoder.back(), kGBufferChannels);
  return t;
}

ComponentTable count_flops(const NetConfig& cfg, std::uint64_t height, std::uint64_t width) {
  cfg.validate();
  ComponentTable t;
  const std::uint64_t pixels = height * width;
  for (const auto& d : conv_layout(cfg)) {
    const std::uint64_t p = d.level < 0 ? pixels * 4 : pixels >> (2 * d.level);
    (d.group == Group::History ? t.history : t.backbone) += num::conv_macs(d.in, d.out, d.k, p);
  }
  if (cfg.use_erm) {
    const int deepest = cfg.levels() - 1;
    const std::uint64_t h = height >> deepest, w = width >> deepest;
    t.erm = erm::erm_flops(cfg.erm, h, w) +
            erm::erm_embedding_flops(cfg.erm, cfg.encoder.back(), kGBufferChannels, h, w);
  }
  return t;
}

std::filesystem::path config_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p += ".cfg";
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const num::ParamStore& params, const NetConfig& cfg) {
  num::save_params(params, path);
  std::ofstream out(config_sidecar(path), std::ios::binary);
  out << format_net_config(cfg);
  if (!out) throw IoError("cannot write " + config_sidecar(path).string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(config_sidecar(path));
  if (!in) throw IoError("missing checkpoint config " + config_sidecar(path).string());
  std::stringstream ss;
  ss << in.rdbuf();
  Checkpoint c{num::load_params(path), parse_net_config(ss.str())};
  num::ParamStore expected;
  init_params(expected, c.cfg);
  for (const auto& name : expected.names()) {
    if (!c.params.contains(name)) throw IoError("checkpoint is missing parameter " + name);
    if (c.params.get(name).shape() != expected.get(name).shape())
      throw IoError("checkpoint parameter " + name + " has the wrong shape");
  }
  if (c.params.size() != expected.size()) throw IoError("checkpoint has unexpected parameters");
  return c;
}

} // namespace stss::net
