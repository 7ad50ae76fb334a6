#pragma once

// Dataset-level scoring of probability-emitting detectors and of detectors
// that return explicit change sets (CUSUM, PELT, BinSeg).

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indid/core_types.hpp"
#include "indid/detector.hpp"
#include "indid/metrics.hpp"
#include "json.hpp"

namespace indid {

struct ThresholdRow {
  double threshold = 0.0;
  ConfusionCounts counts;
  std::optional<double> f1;
  double mean_delay = 0.0;
  double mean_ttfa = 0.0;
  double covering = 0.0;
};

struct MetricsReport {
  std::string method;
  std::size_t n_sequences = 0;
  std::vector<ThresholdRow> rows;  // one per grid threshold, or a single row for threshold-free methods
  std::optional<double> auc;       // absent for threshold-free methods
  std::size_t best_row = 0;        // row with the largest F1
  double covering_max = 0.0;
  nlohmann::json hyperparameters = nlohmann::json::object();

  const ThresholdRow& best() const { return rows.at(best_row); }
  std::optional<double> best_f1() const { return best().f1; }
};

namespace detail {

inline std::size_t argmax_f1(const std::vector<ThresholdRow>& rows) {
  std::size_t best = 0;
  double best_v = -1.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double v = rows[i].f1.value_or(-1.0);
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

inline Partition truth_partition(const Dataset& ds, std::size_t i) {
  const auto& seq = ds.sequences[i];
  if (ds.multi_labels) return Partition::from_label((*ds.multi_labels)[i], seq.length());
  return Partition::from_label(seq.label, seq.length());
}

}  // namespace detail

/// Maps a sequence index and threshold to the alarm set used for covering.
using CoveringAlarms = std::function<DetectionResult(std::size_t seq_index, double threshold)>;

/// Scores per-sequence probabilities on a threshold grid. Confusion counts,
/// delay and time to false alarm use the first alarm; covering uses
/// `covering_alarms` when given, otherwise first-alarm detection on
/// single-change data and `multi_mode` on multiple-change data.
inline MetricsReport evaluate_probabilities(const std::string& method, const Dataset& ds,
                                            const std::vector<ProbabilitySeries>& probs,
                                            const std::vector<double>& grid, MultiMode multi_mode,
                                            const CoveringAlarms& covering_alarms = {}) {
  if (probs.size() != ds.size()) throw std::invalid_argument("evaluate_probabilities: size mismatch");
  MetricsReport report;
  report.method = method;
  report.n_sequences = ds.size();

  std::vector<ChangeLabel> labels;
  std::vector<std::size_t> lengths;
  for (const auto& s : ds.sequences) {
    labels.push_back(s.label);
    lengths.push_back(s.length());
  }
  const MultiMode cover_mode = ds.multi_labels ? multi_mode : MultiMode::FirstOnly;

  std::vector<CurvePoint> points;
  for (double s : grid) {
    std::vector<DetectionResult> first;
    double cover_sum = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      first.push_back(detect(probs[i], {s, MultiMode::FirstOnly}));
      const DetectionResult cover_res = covering_alarms ? covering_alarms(i, s)
                                        : cover_mode == MultiMode::FirstOnly ? first.back()
                                                                             : detect(probs[i], {s, cover_mode});
      cover_sum += covering(detail::truth_partition(ds, i), Partition::from_changes(cover_res.alarms, lengths[i]));
    }
    const auto summary = summarize(labels, first, lengths);
    ThresholdRow row{s, summary.counts, f1(summary.counts), summary.mean_delay, summary.mean_ttfa,
                     ds.size() ? cover_sum / static_cast<double>(ds.size()) : 0.0};
    report.rows.push_back(row);
    points.push_back({s, row.mean_delay, row.mean_ttfa});
    report.covering_max = std::max(report.covering_max, row.covering);
  }
  report.auc = curve_area(points);
  report.best_row = detail::argmax_f1(report.rows);
  return report;
}

/// Scores explicit change sets (first element acts as the alarm).
inline MetricsReport evaluate_change_sets(const std::string& method, const Dataset& ds,
                                          const std::vector<MultiChangeLabel>& predicted) {
  if (predicted.size() != ds.size()) throw std::invalid_argument("evaluate_change_sets: size mismatch");
  MetricsReport report;
  report.method = method;
  report.n_sequences = ds.size();
  std::vector<ChangeLabel> labels;
  std::vector<std::size_t> lengths;
  std::vector<DetectionResult> first;
  double cover_sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& seq = ds.sequences[i];
    labels.push_back(seq.label);
    lengths.push_back(seq.length());
    first.push_back(DetectionResult::from_alarms(predicted[i].points()));
    cover_sum += covering(detail::truth_partition(ds, i), Partition::from_label(predicted[i], seq.length()));
  }
  const auto summary = summarize(labels, first, lengths);
  ThresholdRow row{std::nan(""), summary.counts, f1(summary.counts), summary.mean_delay, summary.mean_ttfa,
                   ds.size() ? cover_sum / static_cast<double>(ds.size()) : 0.0};
  report.rows.push_back(row);
  report.covering_max = row.covering;
  return report;
}

inline nlohmann::json to_json(const ThresholdRow& r) {
  nlohmann::json j = {{"tp", r.counts.tp},         {"tn", r.counts.tn},         {"fp", r.counts.fp},
                      {"fn", r.counts.fn},         {"mean_dd", r.mean_delay}, {"mean_ttfa", r.mean_ttfa},
                      {"covering", r.covering}};
  j["threshold"] = std::isnan(r.threshold) ? nlohmann::json(nullptr) : nlohmann::json(r.threshold);
  j["f1"] = r.f1 ? nlohmann::json(*r.f1) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const MetricsReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) rows.push_back(to_json(r));
  const auto& best = rep.best();
  return {{"method", rep.method},
          {"n_sequences", rep.n_sequences},
          {"f1", best.f1 ? nlohmann::json(*best.f1) : nlohmann::json(nullptr)},
          {"best_threshold", std::isnan(best.threshold) ? nlohmann::json(nullptr) : nlohmann::json(best.threshold)},
          {"mean_dd", best.mean_delay},
          {"mean_ttfa", best.mean_ttfa},
          {"covering_at_best", best.covering},
          {"covering_max", rep.covering_max},
          {"auc", rep.auc ? nlohmann::json(*rep.auc) : nlohmann::json(nullptr)},
          {"hyperparameters", rep.hyperparameters},
          {"grid", rows}};
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (n <= 1 || lo == hi) return {lo};
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  return g;
}

}  // namespace indid
