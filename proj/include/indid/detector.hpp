#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "indid/core_types.hpp"

namespace indid {

enum class MultiMode { FirstOnly, AllUpCrossings, AllCrossings };

struct ThresholdRule {
  double threshold = 0.5;
  MultiMode mode = MultiMode::FirstOnly;
};

/// Alarms where p_t strictly exceeds the threshold. FirstOnly keeps the
/// first such t; AllUpCrossings keeps every t that enters the region
/// above the threshold; AllCrossings keeps every t where the thresholded
/// state flips in either direction (the state before t = 0 is "below").
inline DetectionResult detect(const ProbabilitySeries& p, const ThresholdRule& rule) {
  if (!(rule.threshold >= 0.0 && rule.threshold <= 1.0))
    throw std::invalid_argument("detect: threshold outside [0, 1]");
  std::vector<TimeIndex> alarms;
  bool above = false;
  for (TimeIndex t = 0; t < p.size(); ++t) {
    const bool now = p[t] > rule.threshold;
    if (rule.mode == MultiMode::AllCrossings) {
      if (now != above) alarms.push_back(t);
    } else if (now && !above) {
      alarms.push_back(t);
      if (rule.mode == MultiMode::FirstOnly) break;
    }
    above = now;
  }
  return DetectionResult::from_alarms(std::move(alarms));
}

/// Multiple-change detection that restarts the detector after every alarm:
/// `predict` maps a suffix of the sequence to probabilities computed from a
/// fresh state, and the scan resumes right after each alarm.
template <class Predict>
DetectionResult detect_with_resets(const Matrix& seq, double threshold, Predict&& predict) {
  std::vector<TimeIndex> alarms;
  std::size_t start = 0;
  while (start < seq.rows()) {
    const ProbabilitySeries p = predict(seq.tail_rows(start));
    const auto hit = detect(p, {threshold, MultiMode::FirstOnly}).first_alarm;
    if (!hit) break;
    alarms.push_back(start + *hit);
    start += *hit + 1;
  }
  return DetectionResult::from_alarms(std::move(alarms));
}

/// Page's CUSUM for a known Gaussian mean shift mu0 -> mu1 with variance sigma^2.
struct CusumSpec {
  double mu0 = 0.0;
  double mu1 = 1.0;
  double sigma = 1.0;
  double decision_limit = 5.0;

  void validate() const {
    if (mu0 == mu1) throw std::invalid_argument("CusumSpec: mu1 must differ from mu0");
    if (!(sigma > 0.0)) throw std::invalid_argument("CusumSpec: sigma must be positive");
    if (!(decision_limit > 0.0)) throw std::invalid_argument("CusumSpec: decision_limit must be positive");
  }
};

/// S_t = max(0, S_{t-1} + (mu1 - mu0)/sigma^2 * (x_t - (mu0 + mu1)/2)), S_{-1} = 0.
inline std::vector<double> cusum_statistic(const Matrix& seq, const CusumSpec& spec) {
  if (seq.cols() != 1) throw std::invalid_argument("cusum: expects a univariate series");
  const double scale = (spec.mu1 - spec.mu0) / (spec.sigma * spec.sigma);
  const double mid = 0.5 * (spec.mu0 + spec.mu1);
  std::vector<double> stat(seq.rows());
  double s = 0.0;
  for (std::size_t t = 0; t < seq.rows(); ++t) {
    s = std::max(0.0, s + scale * (seq(t, 0) - mid));
    stat[t] = s;
  }
  return stat;
}

/// First t with S_t >= decision_limit, if any.
inline DetectionResult cusum_detect(const Matrix& seq, const CusumSpec& spec) {
  spec.validate();
  const auto stat = cusum_statistic(seq, spec);
  for (std::size_t t = 0; t < stat.size(); ++t)
    if (stat[t] >= spec.decision_limit) return DetectionResult::from_alarms({t});
  return {};
}

}  // namespace indid
