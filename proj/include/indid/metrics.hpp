#pragma once

// Change-point evaluation: confusion semantics that treat premature alarms as
// false positives, F1, detection delay, time to false alarm, the
// delay/false-alarm detection curve with its area, and partition covering.
//
// Bounded conventions: a missed change has delay T - theta, and a sequence
// without a false alarm has time-to-false-alarm T.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "indid/core_types.hpp"
#include "indid/detector.hpp"

namespace indid {

enum class Outcome { TP, TN, FP, FN };

inline Outcome classify_outcome(const ChangeLabel& label, const DetectionResult& result) {
  const auto& tau = result.first_alarm;
  if (label.has_change()) {
    if (!tau) return Outcome::FN;
    return *tau >= label.theta() ? Outcome::TP : Outcome::FP;
  }
  return tau ? Outcome::FP : Outcome::TN;
}

struct ConfusionCounts {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  void add(Outcome o) {
    switch (o) {
      case Outcome::TP: ++tp; break;
      case Outcome::TN: ++tn; break;
      case Outcome::FP: ++fp; break;
      case Outcome::FN: ++fn; break;
    }
  }
  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// TP / (TP + (FP + FN) / 2); absent when TP = FP = FN = 0.
inline std::optional<double> f1(const ConfusionCounts& c) {
  const double denom = static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp + c.fn);
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(c.tp) / denom;
}

struct DelayAndAlarm {
  std::optional<double> delay;  // defined for TP and FN
  double time_to_false_alarm = 0.0;
};

inline DelayAndAlarm delay_and_ttfa(const ChangeLabel& label, const DetectionResult& result, std::size_t length) {
  DelayAndAlarm out;
  out.time_to_false_alarm = static_cast<double>(length);
  switch (classify_outcome(label, result)) {
    case Outcome::TP: out.delay = static_cast<double>(*result.first_alarm - label.theta()); break;
    case Outcome::FN: out.delay = static_cast<double>(length - label.theta()); break;
    case Outcome::FP: out.time_to_false_alarm = static_cast<double>(*result.first_alarm); break;
    case Outcome::TN: break;
  }
  return out;
}

/// Aggregate of single-alarm outcomes over a set of sequences.
struct OutcomeSummary {
  ConfusionCounts counts;
  double mean_delay = 0.0;  // over sequences where the delay is defined
  double mean_ttfa = 0.0;   // over all sequences
};

inline OutcomeSummary summarize(const std::vector<ChangeLabel>& labels, const std::vector<DetectionResult>& results,
                                const std::vector<std::size_t>& lengths) {
  if (labels.size() != results.size() || labels.size() != lengths.size())
    throw std::invalid_argument("summarize: size mismatch");
  OutcomeSummary s;
  double delay_sum = 0.0, ttfa_sum = 0.0;
  std::size_t n_delay = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.counts.add(classify_outcome(labels[i], results[i]));
    const auto da = delay_and_ttfa(labels[i], results[i], lengths[i]);
    if (da.delay) {
      delay_sum += *da.delay;
      ++n_delay;
    }
    ttfa_sum += da.time_to_false_alarm;
  }
  if (n_delay) s.mean_delay = delay_sum / static_cast<double>(n_delay);
  if (!labels.empty()) s.mean_ttfa = ttfa_sum / static_cast<double>(labels.size());
  return s;
}

struct CurvePoint {
  double threshold = 0.0;
  double mean_delay = 0.0;
  double mean_ttfa = 0.0;
};

struct DetectionCurve {
  std::vector<CurvePoint> points;
  double area = 0.0;
};

/// Trapezoidal area under (mean_delay, mean_ttfa) points ordered by delay;
/// points sharing a delay value are merged by averaging their ttfa.
inline double curve_area(const std::vector<CurvePoint>& points) {
  std::map<double, std::pair<double, std::size_t>> merged;
  for (const auto& p : points) {
    auto& slot = merged[p.mean_delay];
    slot.first += p.mean_ttfa;
    ++slot.second;
  }
  double area = 0.0;
  bool first = true;
  double px = 0.0, py = 0.0;
  for (const auto& [x, acc] : merged) {
    const double y = acc.first / static_cast<double>(acc.second);
    if (!first) area += 0.5 * (py + y) * (x - px);
    px = x;
    py = y;
    first = false;
  }
  return area;
}

inline std::vector<double> threshold_grid(std::size_t n_points) {
  if (n_points < 2) return {0.5};
  std::vector<double> grid(n_points);
  for (std::size_t i = 0; i < n_points; ++i) grid[i] = static_cast<double>(i) / static_cast<double>(n_points - 1);
  return grid;
}

inline DetectionCurve detection_curve(const std::vector<ProbabilitySeries>& probs,
                                      const std::vector<ChangeLabel>& labels, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("detection_curve: empty threshold grid");
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("detection_curve: grid must be sorted");
  if (probs.size() != labels.size()) throw std::invalid_argument("detection_curve: size mismatch");

  std::vector<std::size_t> lengths;
  lengths.reserve(probs.size());
  for (const auto& p : probs) lengths.push_back(p.size());

  DetectionCurve curve;
  for (double s : grid) {
    std::vector<DetectionResult> results;
    results.reserve(probs.size());
    for (const auto& p : probs) results.push_back(detect(p, {s, MultiMode::FirstOnly}));
    const auto sum = summarize(labels, results, lengths);
    curve.points.push_back({s, sum.mean_delay, sum.mean_ttfa});
  }
  curve.area = curve_area(curve.points);
  return curve;
}

/// Half-open segments [begin, end) that tile [0, T).
class Partition {
 public:
  /// Splits [0, T) before each change index; empty segments are dropped.
  static Partition from_changes(const std::vector<TimeIndex>& changes, std::size_t length) {
    Partition p;
    p.length_ = length;
    std::size_t start = 0;
    for (TimeIndex c : changes) {
      if (c > length) throw std::out_of_range("Partition: change beyond sequence end");
      if (c < start) throw std::invalid_argument("Partition: change points must be sorted");
      if (c > start) p.segments_.emplace_back(start, c);
      start = c;
    }
    if (length > start) p.segments_.emplace_back(start, length);
    return p;
  }

  static Partition from_label(const MultiChangeLabel& label, std::size_t length) {
    return from_changes(label.points(), length);
  }

  static Partition from_label(const ChangeLabel& label, std::size_t length) {
    return label.has_change() ? from_changes({label.theta()}, length) : from_changes({}, length);
  }

  std::size_t length() const noexcept { return length_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& segments() const noexcept { return segments_; }

 private:
  std::size_t length_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> segments_;
};

/// (1/T) sum_{A in truth} |A| max_{A' in pred} |A n A'| / |A u A'|.
inline double covering(const Partition& truth, const Partition& pred) {
  if (truth.length() != pred.length()) throw std::invalid_argument("covering: partitions over different lengths");
  if (truth.length() == 0) return 1.0;
  double total = 0.0;
  for (const auto& [a0, a1] : truth.segments()) {
    double best = 0.0;
    for (const auto& [b0, b1] : pred.segments()) {
      const std::size_t lo = std::max(a0, b0), hi = std::min(a1, b1);
      if (hi <= lo) continue;
      const double inter = static_cast<double>(hi - lo);
      const double uni = static_cast<double>(std::max(a1, b1) - std::min(a0, b0));
      best = std::max(best, inter / uni);
    }
    total += static_cast<double>(a1 - a0) * best;
  }
  return total / static_cast<double>(truth.length());
}

}  // namespace indid
