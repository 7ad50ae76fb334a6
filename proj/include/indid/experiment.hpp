#pragma once

// End-to-end experiment commands behind the CLI. Each writes its outputs into
// an output directory together with the resolved configuration.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "indid/config.hpp"
#include "indid/datagen.hpp"
#include "indid/dataset_io.hpp"
#include "indid/detector.hpp"
#include "indid/evaluation.hpp"
#include "indid/model.hpp"
#include "indid/offline.hpp"
#include "indid/parallel.hpp"
#include "indid/training.hpp"

namespace indid {

namespace fs = std::filesystem;

namespace experiment_detail {

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out << text;
}

inline void echo_config(const ExperimentConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_text(out_dir / "config.resolved.toml", to_toml(cfg));
}

inline Dataset read_split_of(const fs::path& data_dir, const char* split) {
  if (!fs::is_directory(data_dir)) throw DataError("data directory '" + data_dir.string() + "' does not exist");
  return io::read_split(data_dir / split);
}

inline void write_curve_csv(const MetricsReport& rep, const fs::path& path) {
  std::ostringstream out;
  out << "threshold,mean_dd,mean_ttfa\n";
  for (const auto& r : rep.rows)
    out << (std::isnan(r.threshold) ? std::string("nan") : io::format_double(r.threshold)) << ','
        << io::format_double(r.mean_delay) << ',' << io::format_double(r.mean_ttfa) << '\n';
  write_text(path, out.str());
}

inline std::vector<ProbabilitySeries> label_oracle(const Dataset& ds) {
  std::vector<ProbabilitySeries> out;
  for (const auto& s : ds.sequences) {
    std::vector<double> p(s.length(), 0.0);
    if (s.label.has_change())
      for (std::size_t t = s.label.theta(); t < p.size(); ++t) p[t] = 1.0;
    out.emplace_back(std::move(p));
  }
  return out;
}

}  // namespace experiment_detail

/// Writes <out_dir>/train and <out_dir>/test.
inline void cmd_generate(ExperimentConfig cfg, const fs::path& out_dir) {
  cfg.sync_seed();
  validate(cfg);
  for (auto split : {SplitKind::Train, SplitKind::Test})
    io::write_split(generate(cfg.data, split), out_dir / to_string(split));
  experiment_detail::echo_config(cfg, out_dir);
}

/// Trains on <data_dir>/train; writes model.json, train_log.jsonl and the resolved config.
inline TrainResult cmd_train(ExperimentConfig cfg, const fs::path& data_dir, const fs::path& out_dir,
                             std::size_t threads = 1) {
  cfg.sync_seed();
  validate(cfg);
  const Dataset train_ds = experiment_detail::read_split_of(data_dir, "train");
  if (train_ds.size() == 0) throw DataError("training split is empty");

  TrainConfig tc = cfg.train;
  tc.threads = threads;
  auto result = train(train_ds, model_spec_for(cfg, train_ds.dim()), tc);

  fs::create_directories(out_dir);
  experiment_detail::write_text(out_dir / "model.json", checkpoint_json(result.params).dump(2) + "\n");
  std::ostringstream log;
  for (const auto& rec : result.log.epochs) log << to_json(rec).dump() << '\n';
  experiment_detail::write_text(out_dir / "train_log.jsonl", log.str());
  experiment_detail::echo_config(cfg, out_dir);
  return result;
}

inline ModelParams load_checkpoint(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint '" + path.string() + "'");
  try {
    return params_from_checkpoint(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

/// Scores a trained model on `test`.
inline MetricsReport evaluate_model(const ExperimentConfig& cfg, const ModelParams& params, const Dataset& test,
                                    std::size_t threads = 1) {
  if (test.dim() != params.spec().input_dim)
    throw DataError("dataset dimension " + std::to_string(test.dim()) + " does not match the model input_dim " +
                    std::to_string(params.spec().input_dim));
  const auto probs = predict_all(params, test, threads);
  CoveringAlarms resets;
  if (cfg.detect.reset_after_alarm && test.multi_labels) {
    resets = [&](std::size_t i, double s) {
      return detect_with_resets(test.sequences[i].observations, s,
                                [&](const Matrix& suffix) { return predict(params, suffix); });
    };
  }
  auto rep = evaluate_probabilities("model", test, probs, threshold_grid(cfg.metrics.grid_points),
                                    cfg.detect.multi_mode, resets);
  rep.hyperparameters = {{"cell", to_string(params.spec().cell)}, {"hidden_dim", params.spec().hidden_dim}};
  return rep;
}

/// Baseline scoring. Hyperparameters not fixed in the config are chosen on
/// `train` by maximal F1 and then applied to `test`.
inline MetricsReport evaluate_baseline(const ExperimentConfig& cfg, const std::string& baseline,
                                       const Dataset* train_ds, const Dataset& test, std::size_t threads = 1) {
  const auto& dc = cfg.detect;
  auto need_train = [&] {
    if (!train_ds) throw DataError("baseline '" + baseline + "' needs a training split for calibration");
    return train_ds;
  };
  auto run_sets = [&](const Dataset& ds, auto&& segmenter) {
    std::vector<MultiChangeLabel> out(ds.size());
    parallel_for(ds.size(), threads, [&](std::size_t i) { out[i] = segmenter(ds.sequences[i].observations); });
    return out;
  };
  auto pick_best = [&](const std::vector<double>& grid, auto&& make_segmenter) {
    const Dataset& tr = *need_train();
    double best_v = -1.0, best_param = grid.front();
    for (double g : grid) {
      const auto rep = evaluate_change_sets(baseline, tr, run_sets(tr, make_segmenter(g)));
      const double v = rep.best_f1().value_or(-1.0);
      if (v > best_v) {
        best_v = v;
        best_param = g;
      }
    }
    return best_param;
  };

  if (baseline == "oracle") {
    auto rep = evaluate_probabilities("oracle", test, experiment_detail::label_oracle(test),
                                      threshold_grid(cfg.metrics.grid_points), dc.multi_mode);
    return rep;
  }
  if (baseline == "cusum") {
    if (test.dim() != 1) throw DataError("cusum baseline requires univariate data");
    auto make = [&](double limit) {
      CusumSpec spec{dc.cusum_mu0, dc.cusum_mu1, dc.cusum_sigma, limit};
      spec.validate();
      return [spec](const Matrix& x) { return MultiChangeLabel(cusum_detect(x, spec).alarms); };
    };
    const double limit = dc.cusum_limit > 0.0
                             ? dc.cusum_limit
                             : pick_best(log_grid(dc.cusum_limit_min, dc.cusum_limit_max, dc.cusum_limit_count), make);
    auto rep = evaluate_change_sets("cusum", test, run_sets(test, make(limit)));
    rep.hyperparameters = {{"mu0", dc.cusum_mu0}, {"mu1", dc.cusum_mu1}, {"sigma", dc.cusum_sigma},
                           {"decision_limit", limit}};
    return rep;
  }
  if (baseline == "pelt" || baseline == "binseg") {
    const bool pelt = baseline == "pelt";
    auto make = [&](double penalty) {
      SegmentationSpec spec;
      spec.method = pelt ? SegmentationMethod::PELT : SegmentationMethod::BinSeg;
      spec.stop = pelt ? StopKind::Penalty : dc.binseg_stop;
      spec.penalty = penalty;
      spec.n_pred = dc.n_pred;
      spec.min_segment_len = dc.min_segment_len;
      return [spec](const Matrix& x) { return segment(x, spec); };
    };
    const bool fixed_count = !pelt && dc.binseg_stop == StopKind::FixedCount;
    const double penalty =
        fixed_count ? 0.0 : pick_best(log_grid(dc.penalty_min, dc.penalty_max, dc.penalty_count), make);
    auto rep = evaluate_change_sets(baseline, test, run_sets(test, make(penalty)));
    if (fixed_count)
      rep.hyperparameters = {{"n_pred", dc.n_pred}, {"min_segment_len", dc.min_segment_len}};
    else
      rep.hyperparameters = {{"penalty", penalty}, {"min_segment_len", dc.min_segment_len}};
    return rep;
  }
  throw ConfigError("unknown baseline '" + baseline + "' (expected cusum, pelt, binseg or oracle)");
}

struct EvalTarget {
  std::optional<fs::path> checkpoint;
  std::optional<std::string> baseline;
};

/// Scores a checkpoint or a baseline on <data_dir>/test; writes metrics.json and curve.csv.
inline MetricsReport cmd_eval(ExperimentConfig cfg, const fs::path& data_dir, const EvalTarget& target,
                              const fs::path& out_dir, std::size_t threads = 1, bool timing = false) {
  cfg.sync_seed();
  validate(cfg);
  if (target.checkpoint.has_value() == target.baseline.has_value())
    throw ConfigError("eval needs exactly one of --checkpoint or --baseline");

  const Dataset test = experiment_detail::read_split_of(data_dir, "test");
  const auto started = std::chrono::steady_clock::now();
  MetricsReport rep;
  if (target.checkpoint) {
    rep = evaluate_model(cfg, load_checkpoint(*target.checkpoint), test, threads);
  } else {
    std::optional<Dataset> train_ds;
    if (fs::is_directory(data_dir / "train")) train_ds = io::read_split(data_dir / "train");
    rep = evaluate_baseline(cfg, *target.baseline, train_ds ? &*train_ds : nullptr, test, threads);
  }
  const double elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  fs::create_directories(out_dir);
  auto j = to_json(rep);
  if (timing) j["eval_ms"] = elapsed_ms;
  experiment_detail::write_text(out_dir / "metrics.json", j.dump(2) + "\n");
  experiment_detail::write_curve_csv(rep, out_dir / "curve.csv");
  experiment_detail::echo_config(cfg, out_dir);
  return rep;
}

struct AblationRow {
  std::size_t horizon = 0;
  double c = 0.0;
  MetricsReport report;
  double loss_at_horizon = 0.0;  // reference model, window of `horizon` terms
  double loss_gap = 0.0;         // full-horizon loss minus loss_at_horizon
};

struct AblationResult {
  MetricsReport full;
  double full_loss = 0.0;
  std::vector<AblationRow> rows;
};

/// Sweeps the relative delay window H. For each H a model is trained with
/// that window and scored on the test split. Separately, the full-horizon
/// reference model's test loss is evaluated with each window at the fixed
/// full-horizon multiplier, which isolates the truncation effect.
inline AblationResult cmd_ablate_horizon(ExperimentConfig cfg, const fs::path& data_dir, const fs::path& out_dir,
                                         std::size_t threads = 1) {
  cfg.sync_seed();
  validate(cfg);
  if (cfg.metrics.ablation_horizons.empty()) throw ConfigError("metrics.ablation_horizons: empty sweep");
  const Dataset train_ds = experiment_detail::read_split_of(data_dir, "train");
  const Dataset test = experiment_detail::read_split_of(data_dir, "test");
  const ModelSpec spec = model_spec_for(cfg, train_ds.dim());

  TrainConfig tc = cfg.train;
  tc.regime = Regime::InDiD;
  tc.threads = threads;
  tc.loss.horizon = Horizon::full();
  const auto reference = train(train_ds, spec, tc);

  AblationResult result;
  result.full = evaluate_model(cfg, reference.params, test, threads);

  const auto ref_probs = predict_all(reference.params, test, threads);
  std::vector<ChangeLabel> labels;
  for (const auto& s : test.sequences) labels.push_back(s.label);
  const std::size_t T = test.sequences.front().length();
  LossConfig probe = tc.loss;
  probe.c = Multiplier::fixed(resolve_multiplier(tc.loss, T));
  result.full_loss = combined_loss(ref_probs, labels, probe).total;

  for (std::size_t H : cfg.metrics.ablation_horizons) {
    AblationRow row;
    row.horizon = H;
    TrainConfig th = tc;
    th.loss.horizon = Horizon::relative(H);
    row.c = resolve_multiplier(th.loss, T);
    const auto trained = train(train_ds, spec, th);
    row.report = evaluate_model(cfg, trained.params, test, threads);

    LossConfig window = probe;
    window.horizon = Horizon::relative(H);
    row.loss_at_horizon = combined_loss(ref_probs, labels, window).total;
    row.loss_gap = result.full_loss - row.loss_at_horizon;
    result.rows.push_back(std::move(row));
  }

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "horizon,c,f1,auc,mean_dd,mean_ttfa,covering_max,loss_at_horizon,loss_gap\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    const auto& best = r.report.best();
    csv << r.horizon << ',' << io::format_double(r.c) << ',' << io::format_double(best.f1.value_or(std::nan("")))
        << ',' << io::format_double(r.report.auc.value_or(std::nan(""))) << ',' << io::format_double(best.mean_delay)
        << ',' << io::format_double(best.mean_ttfa) << ',' << io::format_double(r.report.covering_max) << ','
        << io::format_double(r.loss_at_horizon) << ',' << io::format_double(r.loss_gap) << '\n';
    auto j = to_json(r.report);
    j.erase("grid");
    rows.push_back({{"horizon", r.horizon}, {"c", r.c}, {"loss_at_horizon", r.loss_at_horizon},
                    {"loss_gap", r.loss_gap}, {"metrics", j}});
  }
  auto full_json = to_json(result.full);
  full_json.erase("grid");
  experiment_detail::write_text(out_dir / "ablation.csv", csv.str());
  experiment_detail::write_text(
      out_dir / "ablation.json",
      nlohmann::json{{"full", full_json}, {"full_loss", result.full_loss}, {"rows", rows}}.dump(2) + "\n");
  experiment_detail::echo_config(cfg, out_dir);
  return result;
}

}  // namespace indid
