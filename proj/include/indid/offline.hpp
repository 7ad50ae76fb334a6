#pragma once

// Offline segmentation baselines over an L2 (mean-shift) segment cost:
// PELT (exact penalized optimum with pruning) and greedy binary segmentation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "indid/core_types.hpp"

namespace indid {

/// Sum of squared deviations from the segment mean, O(D) per query via
/// prefix sums. Segments are inclusive index ranges [a, b].
class L2Cost {
 public:
  explicit L2Cost(const Matrix& seq) : T_(seq.rows()), D_(seq.cols()), sums_((T_ + 1) * D_, 0.0), sq_(T_ + 1, 0.0) {
    for (std::size_t t = 0; t < T_; ++t) {
      double sq = 0.0;
      for (std::size_t d = 0; d < D_; ++d) {
        const double v = seq(t, d);
        sums_[(t + 1) * D_ + d] = sums_[t * D_ + d] + v;
        sq += v * v;
      }
      sq_[t + 1] = sq_[t] + sq;
    }
  }

  std::size_t length() const noexcept { return T_; }

  double operator()(std::size_t a, std::size_t b) const {
    if (a > b || b >= T_) throw std::out_of_range("L2Cost: invalid segment");
    const double n = static_cast<double>(b + 1 - a);
    double mean_part = 0.0;
    for (std::size_t d = 0; d < D_; ++d) {
      const double s = sums_[(b + 1) * D_ + d] - sums_[a * D_ + d];
      mean_part += s * s;
    }
    // Cancellation can leave a tiny negative residue.
    return std::max(0.0, (sq_[b + 1] - sq_[a]) - mean_part / n);
  }

 private:
  std::size_t T_, D_;
  std::vector<double> sums_;
  std::vector<double> sq_;
};

inline double l2_cost(const Matrix& seq, std::size_t a, std::size_t b) { return L2Cost(seq)(a, b); }

enum class SegmentationMethod { PELT, BinSeg };
enum class StopKind { Penalty, FixedCount };

struct SegmentationSpec {
  SegmentationMethod method = SegmentationMethod::PELT;
  StopKind stop = StopKind::Penalty;
  double penalty = 1.0;      // Penalty stop
  std::size_t n_pred = 1;    // FixedCount stop (discouraged for model selection)
  std::size_t min_segment_len = 1;

  void validate() const {
    if (min_segment_len == 0) throw std::invalid_argument("SegmentationSpec: min_segment_len must be >= 1");
    if (stop == StopKind::Penalty && !(penalty >= 0.0))
      throw std::invalid_argument("SegmentationSpec: penalty must be non-negative");
  }
};

/// Total segment cost of the partition induced by `changes` plus penalty * #changes.
inline double penalized_objective(const L2Cost& cost, const std::vector<TimeIndex>& changes, double penalty) {
  double total = 0.0;
  std::size_t start = 0;
  for (TimeIndex c : changes) {
    total += cost(start, c - 1);
    start = c;
  }
  total += cost(start, cost.length() - 1);
  return total + penalty * static_cast<double>(changes.size());
}

/// Exact minimizer of sum of segment costs + penalty * (#changes) subject to
/// every segment having at least min_segment_len points.
inline MultiChangeLabel pelt_segment(const Matrix& seq, const SegmentationSpec& spec) {
  spec.validate();
  if (spec.stop != StopKind::Penalty) throw std::invalid_argument("pelt_segment: requires a penalty stop");
  const std::size_t T = seq.rows();
  const std::size_t m = spec.min_segment_len;
  if (T == 0) return {};
  if (!std::isfinite(spec.penalty) || T < 2 * m) return {};

  const double beta = spec.penalty;
  const L2Cost cost(seq);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // best[t]: optimal penalized cost of the prefix of length t, counting one
  // penalty per segment; best[0] = -beta makes that one per change.
  std::vector<double> best(T + 1, inf);
  std::vector<std::size_t> last_change(T + 1, 0);
  best[0] = -beta;

  struct Candidate {
    std::size_t start;
    std::size_t prune_at;  // drop once t >= prune_at
  };
  std::vector<Candidate> candidates{{0, std::numeric_limits<std::size_t>::max()}};

  for (std::size_t t = m; t <= T; ++t) {
    // A prefix end s becomes a candidate once a segment of length m can follow it.
    if (t >= 2 * m && best[t - m] < inf) candidates.push_back({t - m, std::numeric_limits<std::size_t>::max()});

    std::erase_if(candidates, [&](const Candidate& c) { return t >= c.prune_at; });

    double f_best = inf;
    std::size_t arg = 0;
    for (const auto& c : candidates) {
      const double v = best[c.start] + cost(c.start, t - 1) + beta;
      if (v < f_best) {
        f_best = v;
        arg = c.start;
      }
    }
    best[t] = f_best;
    last_change[t] = arg;

    // For L2, cost(s, t'-1) >= cost(s, t-1) + cost(t, t'-1), so a start that
    // cannot beat best[t] here never wins for any t' reachable from t. Those
    // t' are at least m further on, hence the delayed removal.
    for (auto& c : candidates)
      if (c.prune_at == std::numeric_limits<std::size_t>::max() && best[c.start] + cost(c.start, t - 1) > best[t])
        c.prune_at = t + m;
  }

  std::vector<TimeIndex> changes;
  for (std::size_t t = T; t > 0;) {
    const std::size_t s = last_change[t];
    if (s > 0) changes.push_back(s);
    t = s;
  }
  std::reverse(changes.begin(), changes.end());
  return MultiChangeLabel(std::move(changes));
}

/// Greedy bisection: repeatedly applies the single split with the largest
/// cost reduction over all current segments.
inline MultiChangeLabel binseg_segment(const Matrix& seq, const SegmentationSpec& spec) {
  spec.validate();
  const std::size_t T = seq.rows();
  const std::size_t m = spec.min_segment_len;
  if (T == 0) return {};
  if (spec.stop == StopKind::FixedCount && spec.n_pred == 0) return {};
  if (spec.stop == StopKind::Penalty && !std::isfinite(spec.penalty)) return {};

  const L2Cost cost(seq);
  std::vector<TimeIndex> changes;
  while (true) {
    if (spec.stop == StopKind::FixedCount && changes.size() >= spec.n_pred) break;

    std::vector<TimeIndex> bounds{0};
    bounds.insert(bounds.end(), changes.begin(), changes.end());
    bounds.push_back(T);

    double best_gain = -std::numeric_limits<double>::infinity();
    TimeIndex best_split = 0;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
      const std::size_t a = bounds[k], b = bounds[k + 1];  // segment [a, b)
      if (b - a < 2 * m) continue;
      const double whole = cost(a, b - 1);
      for (std::size_t s = a + m; s + m <= b; ++s) {
        const double gain = whole - cost(a, s - 1) - cost(s, b - 1);
        if (gain > best_gain) {
          best_gain = gain;
          best_split = s;
        }
      }
    }
    if (best_split == 0) break;  // no admissible split left
    if (spec.stop == StopKind::Penalty && best_gain <= spec.penalty) break;
    changes.insert(std::upper_bound(changes.begin(), changes.end(), best_split), best_split);
  }
  return MultiChangeLabel(std::move(changes));
}

inline MultiChangeLabel segment(const Matrix& seq, const SegmentationSpec& spec) {
  return spec.method == SegmentationMethod::PELT ? pelt_segment(seq, spec) : binseg_segment(seq, spec);
}

}  // namespace indid
