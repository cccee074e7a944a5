#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "peps/encoders.hpp"
#include "peps/losses.hpp"
#include "peps/mlp.hpp"
#include "peps/model.hpp"

namespace peps {

/// Experiment description parsed from the plain-text config format:
/// `[section]` headers and `key = value` lines, comments with '#'.
struct ExperimentConfig {
  // [task]
  std::string task = "image";   // image | texture_set | sdf
  std::string signal;           // image path, texture dir, .sdfv path, or
                                // analytic-{sphere|torus|box}-<res>
  // [encoder]
  std::string encoder_kind = "bi_grid";
  std::vector<std::size_t> resolution;       // per-axis; single value repeats
  std::size_t feat_dim = 8;
  std::size_t table_size = 32768;            // hash_grid
  std::vector<std::size_t> resolutions;      // multi_grid / multi_hash levels
  std::size_t max_table_size = 131072;       // multi_hash cap
  std::vector<std::size_t> grid0_resolution; // ntc concatenation grid
  std::vector<std::size_t> grid1_resolution; // ntc interpolated grid
  std::size_t grid0_feat_dim = 12;
  std::size_t grid1_feat_dim = 20;
  std::size_t pe_frequencies = 10;
  std::string inner = "bi_grid";             // peps inner encoder kind
  bool include_origin = true;
  bool wrap = false;
  std::size_t image_size = 0;                // ntc tiled PE; 0 = from signal

  // [aggregator]
  std::string aggregator_kind = "concat";
  double alpha = 1.0;
  std::size_t frequencies = 3;               // projection L

  // [mlp]
  std::size_t hidden_layers = 3;
  std::size_t hidden_width = 64;
  std::string activation = "leaky_relu";
  double leaky_slope = 0.01;
  std::size_t output_dim = 0;                // 0 = derive from task

  // [train]
  std::string loss = "l1";
  double base_lr = 0.01;
  double grid_lr = -1.0;                     // < 0 = same as base_lr
  std::string schedule = "constant";         // constant | cosine
  double lr_min = 0.0;
  std::size_t batch_size = 4096;
  std::size_t epochs = 2;
  std::size_t batches_per_epoch = 1000;
  std::uint64_t seed = 1;
  std::size_t log_every = 50;
  std::size_t eval_every = 0;                // 0 = final evaluation only

  // [output]
  std::string out_dir = "out";

  std::size_t coord_dims() const { return task == "sdf" ? 3 : 2; }
  std::size_t total_steps() const { return epochs * batches_per_epoch; }
};

namespace cfgdetail {

struct Entry {
  std::string value;
  int line;
};
using Sections = std::map<std::string, std::map<std::string, Entry>>;

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline Sections parse_sections(std::istream& in, const std::string& origin) {
  Sections out;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw config_error(origin + ":" + std::to_string(lineno) +
                           ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": expected key = value");
    if (section.empty())
      throw config_error(origin + ":" + std::to_string(lineno) +
                         ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    out[section][key] = Entry{trim(line.substr(eq + 1)), lineno};
  }
  return out;
}

class Reader {
 public:
  Reader(Sections s, std::string origin)
      : sections_(std::move(s)), origin_(std::move(origin)) {}

  bool has(const std::string& sec, const std::string& key) const {
    auto it = sections_.find(sec);
    return it != sections_.end() && it->second.count(key) > 0;
  }

  std::string str(const std::string& sec, const std::string& key,
                  std::string fallback) {
    if (!has(sec, key)) return fallback;
    mark(sec, key);
    return sections_[sec][key].value;
  }

  double num(const std::string& sec, const std::string& key, double fallback) {
    if (!has(sec, key)) return fallback;
    mark(sec, key);
    const Entry& e = sections_[sec][key];
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("");
      return v;
    } catch (...) {
      throw config_error(where(e) + ": '" + e.value + "' is not a number");
    }
  }

  std::size_t count(const std::string& sec, const std::string& key,
                    std::size_t fallback) {
    if (!has(sec, key)) return fallback;
    const Entry& e = sections_[sec][key];
    const double v = num(sec, key, 0.0);
    if (v < 0 || v != std::floor(v))
      throw config_error(where(e) + ": expected a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  bool flag(const std::string& sec, const std::string& key, bool fallback) {
    if (!has(sec, key)) return fallback;
    mark(sec, key);
    const Entry& e = sections_[sec][key];
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw config_error(where(e) + ": expected true/false");
  }

  std::vector<std::size_t> counts(const std::string& sec,
                                  const std::string& key,
                                  std::vector<std::size_t> fallback) {
    if (!has(sec, key)) return fallback;
    mark(sec, key);
    const Entry& e = sections_[sec][key];
    std::vector<std::size_t> out;
    std::stringstream ss(e.value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      try {
        std::size_t pos = 0;
        const long v = std::stol(tok, &pos);
        if (pos != tok.size() || v <= 0) throw std::invalid_argument("");
        out.push_back(static_cast<std::size_t>(v));
      } catch (...) {
        throw config_error(where(e) + ": '" + tok +
                           "' is not a positive integer");
      }
    }
    if (out.empty())
      throw config_error(where(e) + ": expected a comma-separated list");
    return out;
  }

  /// Rejects keys that were never consumed (catches typos, with lines).
  void check_consumed() const {
    for (const auto& [sec, entries] : sections_)
      for (const auto& [key, e] : entries)
        if (!consumed_.count(sec + "." + key))
          throw config_error(where(e) + ": unknown key '" + key +
                             "' in section [" + sec + "]");
  }

  std::string where(const Entry& e) const {
    return origin_ + ":" + std::to_string(e.line);
  }

 private:
  void mark(const std::string& sec, const std::string& key) {
    consumed_.insert(sec + "." + key);
  }

  Sections sections_;
  std::string origin_;
  std::set<std::string> consumed_;
};

}  // namespace cfgdetail

inline ExperimentConfig parse_experiment_config_text(const std::string& text,
                                                     const std::string& origin) {
  std::istringstream in(text);
  cfgdetail::Reader r(cfgdetail::parse_sections(in, origin), origin);
  ExperimentConfig c;
  c.task = r.str("task", "kind", c.task);
  c.signal = r.str("task", "signal", c.signal);

  c.encoder_kind = r.str("encoder", "kind", c.encoder_kind);
  c.resolution = r.counts("encoder", "resolution", c.resolution);
  c.feat_dim = r.count("encoder", "feat_dim", c.feat_dim);
  c.table_size = r.count("encoder", "table_size", c.table_size);
  c.resolutions = r.counts("encoder", "resolutions", c.resolutions);
  c.max_table_size = r.count("encoder", "max_table_size", c.max_table_size);
  c.grid0_resolution = r.counts("encoder", "grid0_resolution", c.grid0_resolution);
  c.grid1_resolution = r.counts("encoder", "grid1_resolution", c.grid1_resolution);
  c.grid0_feat_dim = r.count("encoder", "grid0_feat_dim", c.grid0_feat_dim);
  c.grid1_feat_dim = r.count("encoder", "grid1_feat_dim", c.grid1_feat_dim);
  c.pe_frequencies = r.count("encoder", "pe_frequencies", c.pe_frequencies);
  c.inner = r.str("encoder", "inner", c.inner);
  c.include_origin = r.flag("encoder", "include_origin", c.include_origin);
  c.wrap = r.flag("encoder", "wrap", c.wrap);
  c.image_size = r.count("encoder", "image_size", c.image_size);

  c.aggregator_kind = r.str("aggregator", "kind", c.aggregator_kind);
  c.alpha = r.num("aggregator", "alpha", c.alpha);
  c.frequencies = r.count("aggregator", "frequencies", c.frequencies);

  c.hidden_layers = r.count("mlp", "hidden_layers", c.hidden_layers);
  c.hidden_width = r.count("mlp", "hidden_width", c.hidden_width);
  c.activation = r.str("mlp", "activation", c.activation);
  c.leaky_slope = r.num("mlp", "leaky_slope", c.leaky_slope);
  c.output_dim = r.count("mlp", "output_dim", c.output_dim);

  c.loss = r.str("train", "loss", c.loss);
  c.base_lr = r.num("train", "base_lr", c.base_lr);
  c.grid_lr = r.num("train", "grid_lr", c.grid_lr);
  c.schedule = r.str("train", "schedule", c.schedule);
  c.lr_min = r.num("train", "lr_min", c.lr_min);
  c.batch_size = r.count("train", "batch_size", c.batch_size);
  c.epochs = r.count("train", "epochs", c.epochs);
  c.batches_per_epoch = r.count("train", "batches_per_epoch", c.batches_per_epoch);
  c.seed = static_cast<std::uint64_t>(r.count("train", "seed", c.seed));
  c.log_every = r.count("train", "log_every", c.log_every);
  c.eval_every = r.count("train", "eval_every", c.eval_every);

  c.out_dir = r.str("output", "dir", c.out_dir);
  r.check_consumed();
  return c;
}

inline ExperimentConfig parse_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config_text(ss.str(), path);
}

namespace cfgdetail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_counts(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace cfgdetail

/// Canonical text form: every key explicit, fixed order. Serializing the
/// parse of a canonical config reproduces it byte-for-byte.
inline std::string serialize_config(const ExperimentConfig& c) {
  using cfgdetail::fmt_counts;
  using cfgdetail::fmt_double;
  std::string s;
  s += "[task]\n";
  s += "kind = " + c.task + "\n";
  s += "signal = " + c.signal + "\n";
  s += "[encoder]\n";
  s += "kind = " + c.encoder_kind + "\n";
  if (!c.resolution.empty())
    s += "resolution = " + fmt_counts(c.resolution) + "\n";
  s += "feat_dim = " + std::to_string(c.feat_dim) + "\n";
  s += "table_size = " + std::to_string(c.table_size) + "\n";
  if (!c.resolutions.empty())
    s += "resolutions = " + fmt_counts(c.resolutions) + "\n";
  s += "max_table_size = " + std::to_string(c.max_table_size) + "\n";
  if (!c.grid0_resolution.empty())
    s += "grid0_resolution = " + fmt_counts(c.grid0_resolution) + "\n";
  if (!c.grid1_resolution.empty())
    s += "grid1_resolution = " + fmt_counts(c.grid1_resolution) + "\n";
  s += "grid0_feat_dim = " + std::to_string(c.grid0_feat_dim) + "\n";
  s += "grid1_feat_dim = " + std::to_string(c.grid1_feat_dim) + "\n";
  s += "pe_frequencies = " + std::to_string(c.pe_frequencies) + "\n";
  s += "inner = " + c.inner + "\n";
  s += std::string("include_origin = ") +
       (c.include_origin ? "true" : "false") + "\n";
  s += std::string("wrap = ") + (c.wrap ? "true" : "false") + "\n";
  s += "image_size = " + std::to_string(c.image_size) + "\n";
  s += "[aggregator]\n";
  s += "kind = " + c.aggregator_kind + "\n";
  s += "alpha = " + fmt_double(c.alpha) + "\n";
  s += "frequencies = " + std::to_string(c.frequencies) + "\n";
  s += "[mlp]\n";
  s += "hidden_layers = " + std::to_string(c.hidden_layers) + "\n";
  s += "hidden_width = " + std::to_string(c.hidden_width) + "\n";
  s += "activation = " + c.activation + "\n";
  s += "leaky_slope = " + fmt_double(c.leaky_slope) + "\n";
  s += "output_dim = " + std::to_string(c.output_dim) + "\n";
  s += "[train]\n";
  s += "loss = " + c.loss + "\n";
  s += "base_lr = " + fmt_double(c.base_lr) + "\n";
  s += "grid_lr = " + fmt_double(c.grid_lr) + "\n";
  s += "schedule = " + c.schedule + "\n";
  s += "lr_min = " + fmt_double(c.lr_min) + "\n";
  s += "batch_size = " + std::to_string(c.batch_size) + "\n";
  s += "epochs = " + std::to_string(c.epochs) + "\n";
  s += "batches_per_epoch = " + std::to_string(c.batches_per_epoch) + "\n";
  s += "seed = " + std::to_string(c.seed) + "\n";
  s += "log_every = " + std::to_string(c.log_every) + "\n";
  s += "eval_every = " + std::to_string(c.eval_every) + "\n";
  s += "[output]\n";
  s += "dir = " + c.out_dir + "\n";
  return s;
}

// ---- typed enum helpers ------------------------------------------------------

inline LossKind parse_loss(const std::string& s) {
  if (s == "l1") return LossKind::l1;
  if (s == "l2") return LossKind::l2;
  if (s == "mape") return LossKind::mape;
  throw config_error("unknown loss '" + s + "' (expected l1, l2, or mape)");
}

inline Activation parse_activation(const std::string& s) {
  if (s == "leaky_relu") return Activation::leaky_relu;
  if (s == "gelu") return Activation::gelu;
  if (s == "silu") return Activation::silu;
  throw config_error("unknown activation '" + s + "'");
}

inline AggregatorKind parse_aggregator(const std::string& s) {
  if (s == "concat") return AggregatorKind::concat;
  if (s == "pink") return AggregatorKind::pink;
  if (s == "sum_all") return AggregatorKind::sum_all;
  if (s == "sum_per_frequency") return AggregatorKind::sum_per_frequency;
  throw config_error("unknown aggregator '" + s + "'");
}

// ---- model building ----------------------------------------------------------

namespace cfgdetail {

inline std::vector<std::size_t> axis_resolution(
    const std::vector<std::size_t>& given, std::size_t dims,
    std::size_t fallback) {
  std::vector<std::size_t> res = given;
  if (res.empty()) res.assign(dims, fallback);
  if (res.size() == 1) res.assign(dims, res[0]);
  if (res.size() != dims)
    throw config_error("resolution lists " + std::to_string(res.size()) +
                       " axes for a " + std::to_string(dims) + "-D task");
  return res;
}

inline EncoderStack build_encoder_kind(const ExperimentConfig& c,
                                       const std::string& kind,
                                       std::size_t dims,
                                       std::size_t image_size) {
  const auto res = [&](std::size_t fallback) {
    return axis_resolution(c.resolution, dims, fallback);
  };
  if (kind == "identity") return EncoderStack::identity(dims);
  if (kind == "pe") return EncoderStack::pe(dims, c.pe_frequencies);
  if (kind == "bi_grid" || kind == "ti_grid") {
    auto e = EncoderStack::dense_grid(res(16), c.feat_dim, c.wrap);
    return e;
  }
  if (kind == "concat_grid")
    return EncoderStack::concat_grid(res(16), c.feat_dim);
  if (kind == "hash_grid")
    return EncoderStack::hash_grid(res(64), c.table_size, c.feat_dim);
  if (kind == "multi_grid") {
    if (c.resolutions.empty())
      throw config_error("multi_grid needs 'resolutions' in [encoder]");
    return EncoderStack::multi_grid(dims, c.resolutions, c.feat_dim);
  }
  if (kind == "multi_hash") {
    if (c.resolutions.empty())
      throw config_error("multi_hash needs 'resolutions' in [encoder]");
    return EncoderStack::multi_hash(dims, c.resolutions, c.max_table_size,
                                    c.feat_dim);
  }
  if (kind == "lpe") return EncoderStack::lpe(res(16), c.feat_dim);
  if (kind == "ntc") {
    auto r0 = axis_resolution(c.grid0_resolution, dims, 1024);
    auto r1 = axis_resolution(c.grid1_resolution, dims, 512);
    return EncoderStack::ntc(std::move(r0), c.grid0_feat_dim, std::move(r1),
                             c.grid1_feat_dim, image_size);
  }
  throw config_error("unknown encoder kind '" + kind + "'");
}

}  // namespace cfgdetail

/// Builds the full model described by the config. `value_dim` is the
/// signal's output dimensionality (3, 3k, or 1); `image_size` feeds the
/// NTC tiled positional encoding when the config leaves it zero.
inline Model build_model(const ExperimentConfig& c, std::size_t value_dim,
                         std::size_t image_size) {
  const std::size_t dims = c.coord_dims();
  const std::size_t img_size = c.image_size ? c.image_size : image_size;
  EncoderStack enc = [&]() -> EncoderStack {
    if (c.encoder_kind == "peps") {
      EncoderStack inner =
          cfgdetail::build_encoder_kind(c, c.inner, dims, img_size);
      AggregatorSpec agg{parse_aggregator(c.aggregator_kind), c.alpha};
      return EncoderStack::peps(std::move(inner),
                                FrequencySchedule::dyadic(c.frequencies), agg,
                                c.include_origin);
    }
    return cfgdetail::build_encoder_kind(c, c.encoder_kind, dims, img_size);
  }();
  enc.validate();

  MLPConfig mc;
  mc.input_dim = enc.output_dim();
  mc.hidden_layers = c.hidden_layers;
  mc.hidden_width = c.hidden_width;
  mc.output_dim = c.output_dim ? c.output_dim : value_dim;
  mc.activation = parse_activation(c.activation);
  mc.leaky_slope = c.leaky_slope;

  Rng rng(c.seed);
  Model m{std::move(enc), Mlp(mc, rng)};
  m.encoder.init(rng);
  return m;
}

/// Resolves the config-level enums early so bad values fail validation
/// even without the signal present.
inline void validate_config(const ExperimentConfig& c) {
  if (c.task != "image" && c.task != "texture_set" && c.task != "sdf")
    throw config_error("unknown task '" + c.task + "'");
  parse_loss(c.loss);
  parse_activation(c.activation);
  parse_aggregator(c.aggregator_kind);
  if (c.schedule != "constant" && c.schedule != "cosine")
    throw config_error("unknown lr schedule '" + c.schedule + "'");
  if (c.batch_size == 0 || c.epochs == 0 || c.batches_per_epoch == 0)
    throw config_error("batch_size, epochs, batches_per_epoch must be positive");
  if (c.base_lr <= 0.0) throw config_error("base_lr must be positive");
  // Building a throwaway model checks encoder/MLP dimension consistency.
  // Resolutions are capped first: feature widths do not depend on them,
  // and full-scale grids would allocate hundreds of megabytes.
  ExperimentConfig probe = c;
  auto cap = [](std::vector<std::size_t>& res) {
    for (std::size_t& r : res) r = std::min<std::size_t>(r, 4);
  };
  cap(probe.resolution);
  cap(probe.resolutions);
  cap(probe.grid0_resolution);
  cap(probe.grid1_resolution);
  probe.table_size = std::min<std::size_t>(probe.table_size, 64);
  probe.max_table_size = std::min<std::size_t>(probe.max_table_size, 64);
  const std::size_t probe_value_dim = c.task == "sdf" ? 1 : 3;
  Model m = build_model(probe, c.output_dim ? c.output_dim : probe_value_dim,
                        c.image_size ? c.image_size : 1024);
  (void)m;
}

}  // namespace peps
