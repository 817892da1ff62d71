// SPDX-License-Identifier: Apache-2.0
#include "logo/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace logo {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "' (want true/false)");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty element in " + key + ": '" + v + "'");
    out.push_back(int(parse_int(key, item)));
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

std::string fmt_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define F_STR(key, expr)                                                     \
  {key, [](RunConfig& c, const std::string& v) { c.expr = v; },              \
   [](const RunConfig& c) { return c.expr; }}
#define F_DBL(key, expr)                                                     \
  {key, [](RunConfig& c, const std::string& v) { c.expr = parse_double(key, v); }, \
   [](const RunConfig& c) { return fmt_double(c.expr); }}
#define F_INT(key, expr)                                                     \
  {key, [](RunConfig& c, const std::string& v) { c.expr = int(parse_int(key, v)); }, \
   [](const RunConfig& c) { return std::to_string(c.expr); }}
#define F_I64(key, expr)                                                     \
  {key, [](RunConfig& c, const std::string& v) { c.expr = parse_int(key, v); }, \
   [](const RunConfig& c) { return std::to_string(c.expr); }}
#define F_U64(key, expr)                                                     \
  {key,                                                                      \
   [](RunConfig& c, const std::string& v) {                                  \
     std::int64_t i = parse_int(key, v);                                     \
     if (i < 0) throw ConfigError(std::string(key) + " must be non-negative"); \
     c.expr = std::uint64_t(i);                                              \
   },                                                                        \
   [](const RunConfig& c) { return std::to_string(c.expr); }}
#define F_BOOL(key, expr)                                                    \
  {key, [](RunConfig& c, const std::string& v) { c.expr = parse_bool(key, v); }, \
   [](const RunConfig& c) { return c.expr ? "true" : "false"; }}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      F_STR("data.kind", data_kind),
      F_STR("data.path", data_path),
      F_DBL("data.val_fraction", data_val_fraction),
      F_INT("synth.num_images", synth.num_images),
      F_INT("synth.canvas_size", synth.canvas_size),
      F_INT("synth.objects_per_image", synth.objects_per_image),
      F_INT("synth.num_shape_classes", synth.num_shape_classes),
      F_INT("synth.background_kinds", synth.background_kinds),
      F_U64("synth.seed", synth.seed),
      F_DBL("synth.val_fraction", synth.val_fraction),
      {"train.variant",
       [](RunConfig& c, const std::string& v) { c.train.variant = variant_from_string(v); },
       [](const RunConfig& c) { return to_string(c.train.variant); }},
      F_DBL("train.lambda", train.lambda),
      F_STR("train.lambda_mode", train.lambda_mode),
      F_INT("train.batch_size", train.batch_size),
      F_INT("train.epochs", train.epochs),
      F_DBL("train.eta_max", train.eta_max),
      F_DBL("train.eta_min", train.eta_min),
      F_DBL("train.sgd_momentum", train.sgd_momentum),
      F_DBL("train.weight_decay", train.weight_decay),
      F_DBL("train.regressor_weight_decay", train.regressor_weight_decay),
      F_DBL("train.regressor_momentum", train.regressor_momentum),
      F_DBL("train.temperature", train.temperature),
      F_DBL("train.momentum_coef", train.momentum_coef),
      F_INT("train.queue_size", train.queue_size),
      F_U64("train.seed", train.seed),
      F_I64("train.regressor_seed", train.regressor_seed),
      F_BOOL("train.symmetrize", train.symmetrize),
      F_STR("train.affinity", train.affinity),
      F_INT("train.monitor_every", train.monitor_every),
      F_INT("train.checkpoint_every", train.checkpoint_every),
      F_INT("train.knn_k", train.knn_k),
      F_DBL("train.knn_vote_temperature", train.knn_vote_temperature),
      F_INT("model.embed_dim", train.embed_dim),
      {"model.backbone_widths",
       [](RunConfig& c, const std::string& v) {
         c.train.backbone_widths = parse_int_list("model.backbone_widths", v);
       },
       [](const RunConfig& c) { return fmt_int_list(c.train.backbone_widths); }},
      F_INT("model.predictor_hidden", train.predictor_hidden),
      F_INT("model.regressor_hidden", train.regressor_hidden),
      F_DBL("aug.global_scale_min", aug.global_scale_min),
      F_DBL("aug.global_scale_max", aug.global_scale_max),
      F_DBL("aug.local_scale_min", aug.local_scale_min),
      F_DBL("aug.local_scale_max", aug.local_scale_max),
      F_DBL("aug.aspect_min", aug.aspect_min),
      F_DBL("aug.aspect_max", aug.aspect_max),
      F_INT("aug.out_global", aug.out_global),
      F_INT("aug.out_local", aug.out_local),
      F_DBL("aug.flip_prob", aug.flip_prob),
      F_DBL("aug.jitter_prob", aug.jitter_prob),
      F_DBL("aug.jitter_brightness", aug.jitter_brightness),
      F_DBL("aug.jitter_contrast", aug.jitter_contrast),
      F_DBL("aug.jitter_saturation", aug.jitter_saturation),
      F_DBL("aug.jitter_hue", aug.jitter_hue),
      F_DBL("aug.grayscale_prob", aug.grayscale_prob),
      F_DBL("aug.blur_prob", aug.blur_prob),
      F_DBL("aug.blur_sigma_min", aug.blur_sigma_min),
      F_DBL("aug.blur_sigma_max", aug.blur_sigma_max),
      F_INT("probe.epochs", probe.epochs),
      F_DBL("probe.lr", probe.lr),
      F_DBL("probe.momentum", probe.momentum),
      F_DBL("probe.weight_decay", probe.weight_decay),
      F_INT("probe.batch", probe.batch),
      F_U64("probe.seed", probe.seed),
  };
  return fields;
}

#undef F_STR
#undef F_DBL
#undef F_INT
#undef F_I64
#undef F_U64
#undef F_BOOL

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& f : schema())
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  throw ConfigError("unknown config key: '" + key + "'");
}

}  // namespace

void RunConfig::validate() const {
  if (data_kind != "synthetic" && data_kind != "image_folder" && data_kind != "cifar")
    throw ConfigError("data.kind must be synthetic, image_folder, or cifar (got '" + data_kind +
                      "')");
  if (data_kind != "synthetic" && data_path.empty())
    throw ConfigError("data.path is required for data.kind=" + data_kind);
  if (data_val_fraction < 0.0 || data_val_fraction >= 1.0)
    throw ConfigError("data.val_fraction must lie in [0, 1)");
  try {
    synth.validate();
    train.validate();
    aug.validate();
  } catch (const ContractViolation& e) {
    throw ConfigError(e.what());
  }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be key=value, got '" + assignment + "'");
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string echo_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : schema()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

Dataset load_dataset(const RunConfig& cfg) {
  cfg.validate();
  Dataset ds;
  if (cfg.data_kind == "synthetic") {
    ds = generate_synthetic(cfg.synth);
  } else if (cfg.data_kind == "image_folder") {
    ds = load_image_folder(cfg.data_path);
  } else {
    ds = load_cifar_binary(cfg.data_path);
  }
  if (!ds.splits.count("val") && cfg.data_val_fraction > 0.0)
    make_val_split(ds, cfg.data_val_fraction, cfg.train.seed);
  return ds;
}

}  // namespace logo
