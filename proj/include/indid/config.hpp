#pragma once

// Experiment configuration: one TOML document with a top-level `seed` and the
// sections [data], [model], [train], [detect], [metrics]. Every key is
// optional; unknown keys are rejected. to_toml() writes the fully resolved
// configuration, which parses back to the same value.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "indid/datagen.hpp"
#include "indid/dataset_io.hpp"
#include "indid/detector.hpp"
#include "indid/error.hpp"
#include "indid/loss.hpp"
#include "indid/model.hpp"
#include "indid/offline.hpp"
#include "indid/toml_lite.hpp"
#include "indid/training.hpp"

namespace indid {

struct DetectConfig {
  MultiMode multi_mode = MultiMode::AllCrossings;
  bool reset_after_alarm = false;
  double cusum_mu0 = 1.0;
  double cusum_mu1 = 50.0;
  double cusum_sigma = 1.0;
  double cusum_limit = 0.0;  // 0: calibrate on the training split
  double cusum_limit_min = 0.1;
  double cusum_limit_max = 1e5;
  std::size_t cusum_limit_count = 31;
  double penalty_min = 1e-2;
  double penalty_max = 1e4;
  std::size_t penalty_count = 25;
  std::size_t min_segment_len = 1;
  StopKind binseg_stop = StopKind::Penalty;
  std::size_t n_pred = 1;

  bool operator==(const DetectConfig&) const = default;
};

struct MetricsConfig {
  std::size_t grid_points = 41;
  std::vector<std::size_t> ablation_horizons{1, 2, 4, 8, 16, 32};

  bool operator==(const MetricsConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  GeneratorSpec data;
  ModelSpec model;
  TrainConfig train;
  DetectConfig detect;
  MetricsConfig metrics;

  /// Propagates the top-level seed into the data and training specs.
  void sync_seed() {
    data.seed = seed;
    train.seed = seed;
  }
};

namespace config_detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::string s = io::format_double(v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote(const std::string& s) { return "\"" + s + "\""; }

[[noreturn]] inline void type_error(const std::string& path, const std::string& want) {
  throw ConfigError(path + ": expected " + want);
}

inline std::size_t as_size(const toml::Value& v, const std::string& path) {
  if (v.kind != toml::Value::Kind::Int || v.i < 0) type_error(path, "a non-negative integer");
  return static_cast<std::size_t>(v.i);
}

inline double as_double(const toml::Value& v, const std::string& path) {
  if (!v.is_number()) type_error(path, "a number");
  return v.kind == toml::Value::Kind::Int ? static_cast<double>(v.i) : v.d;
}

inline bool as_bool(const toml::Value& v, const std::string& path) {
  if (v.kind != toml::Value::Kind::Bool) type_error(path, "a boolean");
  return v.b;
}

inline std::string as_string(const toml::Value& v, const std::string& path) {
  if (v.kind != toml::Value::Kind::String) type_error(path, "a string");
  return v.s;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const toml::Value&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> emit;
};

template <class Get>
Field size_field(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](ExperimentConfig& c, const toml::Value& v, const std::string& p) { get(c) = as_size(v, p); },
          [get](const ExperimentConfig& c) { return std::to_string(get(c)); }};
}

template <class Get>
Field double_field(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](ExperimentConfig& c, const toml::Value& v, const std::string& p) { get(c) = as_double(v, p); },
          [get](const ExperimentConfig& c) { return fmt_double(get(c)); }};
}

template <class Get>
Field bool_field(std::string sec, std::string key, Get get) {
  return {sec, key,
          [get](ExperimentConfig& c, const toml::Value& v, const std::string& p) { get(c) = as_bool(v, p); },
          [get](const ExperimentConfig& c) { return std::string(get(c) ? "true" : "false"); }};
}

template <class E, class Get>
Field enum_field(std::string sec, std::string key, std::vector<std::pair<std::string, E>> names, Get get) {
  return {sec, key,
          [get, names](ExperimentConfig& c, const toml::Value& v, const std::string& p) {
            const auto s = as_string(v, p);
            for (const auto& [n, e] : names)
              if (n == s) {
                get(c) = e;
                return;
              }
            std::string allowed;
            for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : ", ") + n;
            throw ConfigError(p + ": unknown value '" + s + "' (allowed: " + allowed + ")");
          },
          [get, names](const ExperimentConfig& c) {
            for (const auto& [n, e] : names)
              if (e == get(c)) return quote(n);
            return quote(names.front().first);
          }};
}

#define INDID_FIELD(expr) [](auto& c) -> auto& { return expr; }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"", "seed",
                 [](ExperimentConfig& c, const toml::Value& v, const std::string& p) {
                   if (v.kind != toml::Value::Kind::Int || v.i < 0) type_error(p, "a non-negative integer");
                   c.seed = static_cast<std::uint64_t>(v.i);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});

    f.push_back(size_field("data", "dim", INDID_FIELD(c.data.dim)));
    f.push_back(size_field("data", "length", INDID_FIELD(c.data.length)));
    f.push_back(size_field("data", "n_train", INDID_FIELD(c.data.n_train)));
    f.push_back(size_field("data", "n_test", INDID_FIELD(c.data.n_test)));
    f.push_back(double_field("data", "change_fraction_train", INDID_FIELD(c.data.change_fraction_train)));
    f.push_back(double_field("data", "change_fraction_test", INDID_FIELD(c.data.change_fraction_test)));
    f.push_back(double_field("data", "pre_mean", INDID_FIELD(c.data.pre_mean)));
    f.push_back(double_field("data", "post_mean_lo", INDID_FIELD(c.data.post_mean_lo)));
    f.push_back(double_field("data", "post_mean_hi", INDID_FIELD(c.data.post_mean_hi)));
    f.push_back(double_field("data", "variance", INDID_FIELD(c.data.variance)));
    f.push_back(bool_field("data", "multi", INDID_FIELD(c.data.multi)));
    f.push_back(size_field("data", "n_changes_min", INDID_FIELD(c.data.n_changes_min)));
    f.push_back(size_field("data", "n_changes_max", INDID_FIELD(c.data.n_changes_max)));
    f.push_back(size_field("data", "min_gap", INDID_FIELD(c.data.min_gap)));

    f.push_back(enum_field<CellType>("model", "cell", {{"lstm", CellType::LSTM}, {"gru", CellType::GRU}},
                                     INDID_FIELD(c.model.cell)));
    f.push_back(size_field("model", "hidden_dim", INDID_FIELD(c.model.hidden_dim)));
    f.push_back(double_field("model", "dropout", INDID_FIELD(c.model.dropout)));

    f.push_back(enum_field<Regime>(
        "train", "regime",
        {{"indid", Regime::InDiD}, {"bce", Regime::BCE}, {"bce_indid", Regime::BCEThenInDiD}},
        INDID_FIELD(c.train.regime)));
    f.push_back(size_field("train", "batch_size", INDID_FIELD(c.train.batch_size)));
    f.push_back(double_field("train", "learning_rate", INDID_FIELD(c.train.learning_rate)));
    f.push_back(size_field("train", "max_epochs", INDID_FIELD(c.train.max_epochs)));
    f.push_back(size_field("train", "patience", INDID_FIELD(c.train.patience)));
    f.push_back(double_field("train", "min_delta", INDID_FIELD(c.train.min_delta)));
    f.push_back(double_field("train", "val_fraction", INDID_FIELD(c.train.val_fraction)));
    f.push_back(double_field("train", "max_grad_norm", INDID_FIELD(c.train.max_grad_norm)));
    f.push_back(enum_field<HorizonKind>(
        "train", "horizon",
        {{"full", HorizonKind::Full}, {"absolute", HorizonKind::Absolute}, {"relative", HorizonKind::Relative}},
        INDID_FIELD(c.train.loss.horizon.kind)));
    f.push_back(size_field("train", "horizon_value", INDID_FIELD(c.train.loss.horizon.value)));
    f.push_back({"train", "c",
                 [](ExperimentConfig& c, const toml::Value& v, const std::string& p) {
                   if (v.kind == toml::Value::Kind::String) {
                     if (v.s != "paper") throw ConfigError(p + ": expected \"paper\" or a non-negative number");
                     c.train.loss.c = Multiplier::paper_default();
                     return;
                   }
                   const double x = as_double(v, p);
                   if (!(x >= 0.0)) throw ConfigError(p + ": must be non-negative");
                   c.train.loss.c = Multiplier::fixed(x);
                 },
                 [](const ExperimentConfig& c) {
                   return c.train.loss.c.mode == MultiplierMode::PaperDefault ? quote("paper")
                                                                              : fmt_double(c.train.loss.c.value);
                 }});
    f.push_back(enum_field<RemainderSign>("train", "remainder",
                                          {{"consistent", RemainderSign::ConsistentBound},
                                           {"literal_main", RemainderSign::LiteralMainText},
                                           {"literal_appendix", RemainderSign::LiteralAppendix}},
                                          INDID_FIELD(c.train.loss.remainder)));

    f.push_back(enum_field<MultiMode>("detect", "multi_mode",
                                      {{"all", MultiMode::AllCrossings}, {"all_up", MultiMode::AllUpCrossings}, {"first", MultiMode::FirstOnly}},
                                      INDID_FIELD(c.detect.multi_mode)));
    f.push_back(bool_field("detect", "reset_after_alarm", INDID_FIELD(c.detect.reset_after_alarm)));
    f.push_back(double_field("detect", "cusum_mu0", INDID_FIELD(c.detect.cusum_mu0)));
    f.push_back(double_field("detect", "cusum_mu1", INDID_FIELD(c.detect.cusum_mu1)));
    f.push_back(double_field("detect", "cusum_sigma", INDID_FIELD(c.detect.cusum_sigma)));
    f.push_back(double_field("detect", "cusum_limit", INDID_FIELD(c.detect.cusum_limit)));
    f.push_back(double_field("detect", "cusum_limit_min", INDID_FIELD(c.detect.cusum_limit_min)));
    f.push_back(double_field("detect", "cusum_limit_max", INDID_FIELD(c.detect.cusum_limit_max)));
    f.push_back(size_field("detect", "cusum_limit_count", INDID_FIELD(c.detect.cusum_limit_count)));
    f.push_back(double_field("detect", "penalty_min", INDID_FIELD(c.detect.penalty_min)));
    f.push_back(double_field("detect", "penalty_max", INDID_FIELD(c.detect.penalty_max)));
    f.push_back(size_field("detect", "penalty_count", INDID_FIELD(c.detect.penalty_count)));
    f.push_back(size_field("detect", "min_segment_len", INDID_FIELD(c.detect.min_segment_len)));
    f.push_back(enum_field<StopKind>("detect", "binseg_stop",
                                     {{"penalty", StopKind::Penalty}, {"count", StopKind::FixedCount}},
                                     INDID_FIELD(c.detect.binseg_stop)));
    f.push_back(size_field("detect", "n_pred", INDID_FIELD(c.detect.n_pred)));

    f.push_back(size_field("metrics", "grid_points", INDID_FIELD(c.metrics.grid_points)));
    f.push_back({"metrics", "ablation_horizons",
                 [](ExperimentConfig& c, const toml::Value& v, const std::string& p) {
                   if (v.kind != toml::Value::Kind::Array) type_error(p, "an array of positive integers");
                   std::vector<std::size_t> hs;
                   for (const auto& e : v.array) {
                     const auto h = as_size(e, p);
                     if (h == 0) throw ConfigError(p + ": horizons must be >= 1");
                     hs.push_back(h);
                   }
                   c.metrics.ablation_horizons = std::move(hs);
                 },
                 [](const ExperimentConfig& c) {
                   std::string s = "[";
                   for (std::size_t i = 0; i < c.metrics.ablation_horizons.size(); ++i)
                     s += (i ? ", " : "") + std::to_string(c.metrics.ablation_horizons[i]);
                   return s + "]";
                 }});
    return f;
  }();
  return table;
}

#undef INDID_FIELD

inline std::string path_of(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

inline const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

}  // namespace config_detail

/// Checks cross-field constraints; throws ConfigError naming the field.
inline void validate(const ExperimentConfig& cfg) {
  cfg.data.validate();
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("model", [&] { ModelSpec m = cfg.model; m.input_dim = std::max<std::size_t>(1, cfg.data.dim); m.validate(); });
  wrap("train", [&] { cfg.train.validate(); });
  if (cfg.train.loss.horizon.kind == HorizonKind::Relative && cfg.train.loss.horizon.value == 0)
    throw ConfigError("train.horizon_value: relative horizon must be >= 1");
  if (cfg.detect.cusum_sigma <= 0.0) throw ConfigError("detect.cusum_sigma: must be positive");
  if (cfg.detect.cusum_mu0 == cfg.detect.cusum_mu1) throw ConfigError("detect.cusum_mu1: must differ from cusum_mu0");
  if (!(cfg.detect.penalty_min > 0.0 && cfg.detect.penalty_max >= cfg.detect.penalty_min))
    throw ConfigError("detect.penalty_min: need 0 < penalty_min <= penalty_max");
  if (cfg.detect.penalty_count == 0) throw ConfigError("detect.penalty_count: must be >= 1");
  if (!(cfg.detect.cusum_limit_min > 0.0 && cfg.detect.cusum_limit_max >= cfg.detect.cusum_limit_min))
    throw ConfigError("detect.cusum_limit_min: need 0 < cusum_limit_min <= cusum_limit_max");
  if (cfg.detect.cusum_limit_count == 0) throw ConfigError("detect.cusum_limit_count: must be >= 1");
  if (cfg.detect.min_segment_len == 0) throw ConfigError("detect.min_segment_len: must be >= 1");
  if (cfg.metrics.grid_points < 2) throw ConfigError("metrics.grid_points: must be >= 2");
}

/// Applies the keys of `doc` on top of `cfg`.
inline void apply_document(ExperimentConfig& cfg, const toml::Document& doc) {
  for (const auto& [section, table] : doc)
    for (const auto& [key, value] : table) {
      const auto* f = config_detail::find_field(section, key);
      if (!f) throw ConfigError("unknown config key '" + config_detail::path_of(section, key) + "'");
      f->set(cfg, value, config_detail::path_of(section, key));
    }
  cfg.sync_seed();
}

inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  apply_document(cfg, toml::parse(text));
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// `section.key=value` override, value in TOML syntax.
inline void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  std::string path = assignment.substr(0, eq);
  const auto dot = path.find('.');
  std::string section = dot == std::string::npos ? "" : path.substr(0, dot);
  std::string key = dot == std::string::npos ? path : path.substr(dot + 1);
  const std::string text = (section.empty() ? "" : "[" + section + "]\n") + key + " = " + assignment.substr(eq + 1) + "\n";
  apply_document(cfg, toml::parse(text));
}

inline std::string to_toml(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string current = "\x01";
  for (const auto& f : config_detail::fields()) {
    if (f.section != current) {
      if (!f.section.empty()) out << "\n[" << f.section << "]\n";
      current = f.section;
    }
    out << f.key << " = " << f.emit(cfg) << '\n';
  }
  return out.str();
}

/// Model spec for a dataset of the given dimension.
inline ModelSpec model_spec_for(const ExperimentConfig& cfg, std::size_t input_dim) {
  ModelSpec spec = cfg.model;
  spec.input_dim = input_dim;
  return spec;
}

}  // namespace indid
