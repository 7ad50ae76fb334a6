#pragma once

// Differentiable detection-delay / time-to-false-alarm loss.
//
// A probability series p_0..p_{T-1} defines a random stopping time tau that
// alarms at t with probability p_t given no earlier alarm. Both loss terms are
// truncated expectations of tau over a window [start, last]:
//
//   E[min(tau - start, last + 1 - start)]
//     = sum_{t=start}^{last} (t - start) p_t prod_{k=start}^{t-1} (1 - p_k)
//       + (last + 1 - start) prod_{k=start}^{last} (1 - p_k)
//
// The delay term restarts tau at theta; the alarm term starts at 0 and covers
// the change-free prefix. Truncation only removes non-negative mass, so each
// term lower-bounds its untruncated counterpart.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "indid/core_types.hpp"

namespace indid {

enum class HorizonKind { Full, Absolute, Relative };

/// How far past theta the delay expectation is kept.
///  Full:        last = T - 1
///  Absolute(h): last = h (requires theta <= h <= T - 1)
///  Relative(H): last = min(theta + H - 1, T - 1), a window of H terms
struct Horizon {
  HorizonKind kind = HorizonKind::Full;
  std::size_t value = 0;

  static Horizon full() { return {HorizonKind::Full, 0}; }
  static Horizon absolute(std::size_t h) { return {HorizonKind::Absolute, h}; }
  static Horizon relative(std::size_t window) { return {HorizonKind::Relative, window}; }

  bool operator==(const Horizon&) const = default;
};

enum class MultiplierMode { PaperDefault, Fixed };

struct Multiplier {
  MultiplierMode mode = MultiplierMode::PaperDefault;
  double value = 0.0;  // used when mode == Fixed

  static Multiplier paper_default() { return {MultiplierMode::PaperDefault, 0.0}; }
  static Multiplier fixed(double c) { return {MultiplierMode::Fixed, c}; }

  bool operator==(const Multiplier&) const = default;
};

/// Sign convention of the alarm-time term.
///  ConsistentBound:  sum + L * prod        (= E[min(tau, L)])
///  LiteralMainText:  sum - L * prod
///  LiteralAppendix:  -(sum - L * prod)
enum class RemainderSign { ConsistentBound, LiteralMainText, LiteralAppendix };

struct LossConfig {
  Horizon horizon = Horizon::full();
  Multiplier c = Multiplier::paper_default();
  RemainderSign remainder = RemainderSign::ConsistentBound;

  bool operator==(const LossConfig&) const = default;
};

struct LossValue {
  double total = 0.0;
  double delay_part = 0.0;  // batch mean of delay terms
  double alarm_part = 0.0;  // batch mean of alarm terms
  double c = 0.0;           // multiplier actually applied
  std::vector<std::vector<double>> grad_p;  // d total / d p, one vector per batch element
};

namespace detail {

inline void check_probabilities(std::span<const double> p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("probability outside [0, 1]");
}

// sum_{t=start}^{last} (t - start) p_t S_t + remainder * S_{last+1},
// S_t = prod_{k=start}^{t-1} (1 - p_k). When `grad` is non-empty, adds
// scale * d/dp_t to grad[t]. The backward pass uses the continuation value
// V_t = (t - start) p_t + (1 - p_t) V_{t+1}, V_{last+1} = remainder, which
// gives d/dp_t = S_t ((t - start) - V_{t+1}) without dividing by (1 - p_t).
inline double truncated_stop_expectation(std::span<const double> p, std::size_t start, std::size_t last,
                                         double remainder, std::span<double> grad = {}, double scale = 1.0) {
  const std::size_t n = last + 1 - start;
  std::vector<double> survival(n + 1);
  survival[0] = 1.0;
  double value = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double pt = p[start + j];
    value += static_cast<double>(j) * pt * survival[j];
    survival[j + 1] = survival[j] * (1.0 - pt);
  }
  value += remainder * survival[n];

  if (!grad.empty()) {
    double cont = remainder;  // V_{t+1}
    for (std::size_t j = n; j-- > 0;) {
      const double pt = p[start + j];
      grad[start + j] += scale * survival[j] * (static_cast<double>(j) - cont);
      cont = static_cast<double>(j) * pt + (1.0 - pt) * cont;
    }
  }
  return value;
}

inline double alarm_sign_value(double sum_part, double remainder_part, RemainderSign sign) {
  switch (sign) {
    case RemainderSign::ConsistentBound: return sum_part + remainder_part;
    case RemainderSign::LiteralMainText: return sum_part - remainder_part;
    case RemainderSign::LiteralAppendix: return -(sum_part - remainder_part);
  }
  return 0.0;
}

// Value and optional scaled gradient of the alarm term over p_0..p_{L-1}.
inline double alarm_term(std::span<const double> p, std::size_t prefix_len, RemainderSign sign,
                         std::span<double> grad = {}, double scale = 1.0) {
  if (prefix_len == 0) return 0.0;
  const double L = static_cast<double>(prefix_len);
  // Remainder and outer sign fold into the generic expectation:
  //   Consistent: E(remainder = +L); MainText: E(remainder = -L); Appendix: -E(remainder = -L)
  const double remainder = sign == RemainderSign::ConsistentBound ? L : -L;
  const double outer = sign == RemainderSign::LiteralAppendix ? -1.0 : 1.0;
  return outer * truncated_stop_expectation(p, 0, prefix_len - 1, remainder, grad, outer * scale);
}

}  // namespace detail

/// Truncated expected detection delay E[min(tau - theta, h + 1 - theta)],
/// with tau restarted at theta. Requires theta <= h <= T - 1.
inline double delay_loss(const ProbabilitySeries& p, TimeIndex theta, TimeIndex h) {
  if (h >= p.size()) throw std::out_of_range("delay_loss: horizon beyond series end");
  if (h < theta) throw std::invalid_argument("delay_loss: horizon precedes the change (empty window)");
  return detail::truncated_stop_expectation(p.values(), theta, h, static_cast<double>(h + 1 - theta));
}

/// Lower bound on the expected alarm time over the change-free prefix
/// p_0..p_{L-1}. Requires 1 <= L <= T.
inline double alarm_time_bound(const ProbabilitySeries& p, std::size_t prefix_len,
                               RemainderSign sign = RemainderSign::ConsistentBound) {
  if (prefix_len == 0 || prefix_len > p.size())
    throw std::out_of_range("alarm_time_bound: prefix length " + std::to_string(prefix_len) +
                            " outside [1, " + std::to_string(p.size()) + "]");
  return detail::alarm_term(p.values(), prefix_len, sign);
}

/// Last index of the delay window for one sequence.
inline TimeIndex resolve_horizon(const Horizon& horizon, TimeIndex theta, std::size_t length) {
  switch (horizon.kind) {
    case HorizonKind::Full: return length - 1;
    case HorizonKind::Absolute:
      if (horizon.value >= length) throw std::out_of_range("absolute horizon beyond series end");
      if (horizon.value < theta)
        throw std::invalid_argument("absolute horizon " + std::to_string(horizon.value) +
                                    " precedes change at " + std::to_string(theta));
      return horizon.value;
    case HorizonKind::Relative:
      if (horizon.value == 0) throw std::invalid_argument("relative horizon must be >= 1");
      return std::min(theta + horizon.value - 1, length - 1);
  }
  return length - 1;
}

/// Multiplier c. The default is (number of delay terms) / (2T): 1/2 for the
/// full horizon, H / (2T) for a window of H terms, (h + 1) / (2T) for an
/// absolute last index h.
inline double resolve_multiplier(const LossConfig& cfg, std::size_t length) {
  if (cfg.c.mode == MultiplierMode::Fixed) {
    if (!(cfg.c.value >= 0.0)) throw std::invalid_argument("multiplier c must be non-negative");
    return cfg.c.value;
  }
  const double T = static_cast<double>(length);
  switch (cfg.horizon.kind) {
    case HorizonKind::Full: return 0.5;
    case HorizonKind::Absolute: return static_cast<double>(cfg.horizon.value + 1) / (2.0 * T);
    case HorizonKind::Relative: return static_cast<double>(cfg.horizon.value) / (2.0 * T);
  }
  return 0.5;
}

/// Batch loss  mean(delay_i) - c * mean(alarm_i)  with its exact gradient.
/// Change sequences contribute a delay term and an alarm term over [0, theta);
/// no-change sequences contribute only an alarm term over the whole series.
inline LossValue combined_loss(const std::vector<ProbabilitySeries>& batch, const std::vector<ChangeLabel>& labels,
                               const LossConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("combined_loss: empty batch");
  if (batch.size() != labels.size()) throw std::invalid_argument("combined_loss: label count mismatch");

  std::size_t max_len = 0;
  for (const auto& p : batch) {
    if (p.size() == 0) throw std::invalid_argument("combined_loss: empty series");
    max_len = std::max(max_len, p.size());
  }

  LossValue out;
  out.c = resolve_multiplier(cfg, max_len);
  out.grad_p.resize(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto p = batch[i].values();
    const auto& label = labels[i];
    auto& g = out.grad_p[i];
    g.assign(p.size(), 0.0);

    std::size_t prefix = p.size();
    if (label.has_change()) {
      const TimeIndex theta = label.theta();
      if (theta >= p.size()) throw std::out_of_range("combined_loss: change index beyond series end");
      const TimeIndex last = resolve_horizon(cfg.horizon, theta, p.size());
      out.delay_part += inv_n * detail::truncated_stop_expectation(p, theta, last,
                                                                   static_cast<double>(last + 1 - theta), g, inv_n);
      prefix = theta;
    }
    out.alarm_part += inv_n * detail::alarm_term(p, prefix, cfg.remainder, g, -out.c * inv_n);
  }
  out.total = out.delay_part - out.c * out.alarm_part;
  return out;
}

inline constexpr double kBceEpsilon = 1e-7;

struct BceValue {
  double value = 0.0;
  std::vector<double> grad_p;
};

/// Mean per-step binary cross-entropy against y_t = 1[t >= theta].
/// Probabilities are clamped to [eps, 1 - eps]; the gradient is that of the
/// clamped expression (zero where the clamp is active).
inline BceValue bce_loss(const ProbabilitySeries& p, const ChangeLabel& label) {
  const std::size_t T = p.size();
  if (T == 0) throw std::invalid_argument("bce_loss: empty series");
  BceValue out;
  out.grad_p.assign(T, 0.0);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    const bool y = label.has_change() && t >= label.theta();
    const double raw = p[t];
    const double q = std::clamp(raw, kBceEpsilon, 1.0 - kBceEpsilon);
    const bool clamped = raw < kBceEpsilon || raw > 1.0 - kBceEpsilon;
    if (y) {
      out.value -= inv_t * std::log(q);
      if (!clamped) out.grad_p[t] = -inv_t / q;
    } else {
      out.value -= inv_t * std::log1p(-q);
      if (!clamped) out.grad_p[t] = inv_t / (1.0 - q);
    }
  }
  return out;
}

/// Batch mean of bce_loss with gradients scaled by 1/N.
inline LossValue bce_batch_loss(const std::vector<ProbabilitySeries>& batch, const std::vector<ChangeLabel>& labels) {
  if (batch.empty()) throw std::invalid_argument("bce_batch_loss: empty batch");
  if (batch.size() != labels.size()) throw std::invalid_argument("bce_batch_loss: label count mismatch");
  LossValue out;
  out.grad_p.resize(batch.size());
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto v = bce_loss(batch[i], labels[i]);
    out.total += inv_n * v.value;
    for (double& g : v.grad_p) g *= inv_n;
    out.grad_p[i] = std::move(v.grad_p);
  }
  return out;
}

/// Distribution of the stopping time started at `start`, evaluated directly
/// from the product formula: entry j < cap is P(tau = start + j), the final
/// entry is P(no alarm in start..start+cap-1). Requires start + cap <= T.
inline std::vector<double> stopping_time_oracle(const ProbabilitySeries& p, TimeIndex start, std::size_t cap) {
  if (start + cap > p.size()) throw std::out_of_range("stopping_time_oracle: window beyond series end");
  std::vector<double> dist(cap + 1, 0.0);
  for (std::size_t j = 0; j < cap; ++j) {
    double prob = p[start + j];
    for (std::size_t k = start; k < start + j; ++k) prob *= 1.0 - p[k];
    dist[j] = prob;
  }
  double none = 1.0;
  for (std::size_t k = start; k < start + cap; ++k) none *= 1.0 - p[k];
  dist[cap] = none;
  return dist;
}

}  // namespace indid
