#pragma once

// Synthetic Gaussian mean-shift data. Normal observations are N(pre_mean * 1, variance * I);
// after a change the mean jumps to mu * 1 with mu ~ Uniform(post_mean_lo, post_mean_hi),
// drawn afresh for every sequence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "indid/core_types.hpp"
#include "indid/error.hpp"
#include "json.hpp"

namespace indid {

enum class SplitKind { Train, Test };

inline std::string to_string(SplitKind s) { return s == SplitKind::Train ? "train" : "test"; }

struct GeneratorSpec {
  std::size_t dim = 1;
  std::size_t length = 128;
  std::size_t n_train = 700;
  std::size_t n_test = 300;
  double change_fraction_train = 0.489;
  double change_fraction_test = 0.527;
  double pre_mean = 1.0;
  double post_mean_lo = 2.0;
  double post_mean_hi = 100.0;
  double variance = 1.0;
  // Multiple-change mode: number of changes drawn uniformly from this range.
  bool multi = false;
  std::size_t n_changes_min = 0;
  std::size_t n_changes_max = 9;
  std::size_t min_gap = 2;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw ConfigError("data." + field + ": " + why);
    };
    if (dim == 0) fail("dim", "must be >= 1");
    if (length < 2) fail("length", "must be >= 2");
    if (!(change_fraction_train >= 0.0 && change_fraction_train <= 1.0))
      fail("change_fraction_train", "must be in [0, 1]");
    if (!(change_fraction_test >= 0.0 && change_fraction_test <= 1.0))
      fail("change_fraction_test", "must be in [0, 1]");
    if (!std::isfinite(pre_mean)) fail("pre_mean", "must be finite");
    if (!(post_mean_lo > pre_mean)) fail("post_mean_lo", "must exceed pre_mean");
    if (!(post_mean_hi >= post_mean_lo) || !std::isfinite(post_mean_hi))
      fail("post_mean_hi", "must be finite and >= post_mean_lo");
    if (!(variance > 0.0) || !std::isfinite(variance)) fail("variance", "must be positive");
    if (n_changes_min > n_changes_max) fail("n_changes_min", "must not exceed n_changes_max");
    if (min_gap == 0) fail("min_gap", "must be >= 1");
    if (multi && length < min_gap * (n_changes_max + 1))
      fail("n_changes_max", "infeasible for the sequence length and minimum gap");
  }

  std::size_t count(SplitKind s) const { return s == SplitKind::Train ? n_train : n_test; }
  double change_fraction(SplitKind s) const {
    return s == SplitKind::Train ? change_fraction_train : change_fraction_test;
  }
};

inline nlohmann::json to_json(const GeneratorSpec& g) {
  return {{"dim", g.dim},
          {"length", g.length},
          {"n_train", g.n_train},
          {"n_test", g.n_test},
          {"change_fraction_train", g.change_fraction_train},
          {"change_fraction_test", g.change_fraction_test},
          {"pre_mean", g.pre_mean},
          {"post_mean_lo", g.post_mean_lo},
          {"post_mean_hi", g.post_mean_hi},
          {"variance", g.variance},
          {"multi", g.multi},
          {"n_changes_min", g.n_changes_min},
          {"n_changes_max", g.n_changes_max},
          {"min_gap", g.min_gap},
          {"seed", g.seed}};
}

namespace detail {

// Independent stream per split: resizing one split leaves the other intact.
inline std::mt19937_64 split_rng(std::uint64_t seed, SplitKind split) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split == SplitKind::Train ? 0x7a11u : 0x7e57u)};
  return std::mt19937_64(seq);
}

inline std::string sequence_id(SplitKind split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu", to_string(split).c_str(), i);
  return buf;
}

inline void fill_segment(Matrix& m, std::size_t from, std::size_t to, double mean, double sd,
                         std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sd);
  for (std::size_t t = from; t < to; ++t)
    for (std::size_t d = 0; d < m.cols(); ++d) m(t, d) = mean + noise(rng);
}

inline Dataset make_dataset_shell(const GeneratorSpec& spec, SplitKind split, const char* kind) {
  Dataset ds;
  ds.metadata = {{"generator", kind}, {"split", to_string(split)}, {"spec", to_json(spec)}, {"seed", spec.seed}};
  return ds;
}

}  // namespace detail

/// One split of single-change data. Exactly round(change_fraction * n)
/// sequences carry a change, at randomly chosen positions in the split;
/// theta ~ Uniform{1, ..., T-1}.
inline Dataset generate_single_change(const GeneratorSpec& spec, SplitKind split) {
  spec.validate();
  auto rng = detail::split_rng(spec.seed, split);
  const std::size_t n = spec.count(split);
  const auto n_change =
      static_cast<std::size_t>(std::llround(spec.change_fraction(split) * static_cast<double>(n)));

  std::vector<bool> has_change(n, false);
  std::fill(has_change.begin(), has_change.begin() + static_cast<std::ptrdiff_t>(n_change), true);
  std::shuffle(has_change.begin(), has_change.end(), rng);

  const double sd = std::sqrt(spec.variance);
  std::uniform_int_distribution<std::size_t> theta_dist(1, spec.length - 1);
  std::uniform_real_distribution<double> mu_dist(spec.post_mean_lo, spec.post_mean_hi);

  Dataset ds = detail::make_dataset_shell(spec, split, "single_change");
  ds.sequences.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledSequence seq{detail::sequence_id(split, i), Matrix(spec.length, spec.dim), ChangeLabel::no_change()};
    if (has_change[i]) {
      const std::size_t theta = theta_dist(rng);
      const double mu = mu_dist(rng);
      detail::fill_segment(seq.observations, 0, theta, spec.pre_mean, sd, rng);
      detail::fill_segment(seq.observations, theta, spec.length, mu, sd, rng);
      seq.label = ChangeLabel::change(theta);
    } else {
      detail::fill_segment(seq.observations, 0, spec.length, spec.pre_mean, sd, rng);
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

/// k ~ Uniform{n_changes_min, ..., n_changes_max} change points per sequence,
/// every segment at least min_gap long (segment lengths are a uniformly random
/// composition). Segments alternate between the normal regime and a fresh
/// post-change mean, starting from the normal regime.
inline Dataset generate_multi_change(const GeneratorSpec& spec, SplitKind split) {
  spec.validate();
  auto rng = detail::split_rng(spec.seed, split);
  const std::size_t n = spec.count(split);
  const std::size_t T = spec.length;
  const double sd = std::sqrt(spec.variance);
  std::uniform_int_distribution<std::size_t> k_dist(spec.n_changes_min, spec.n_changes_max);
  std::uniform_real_distribution<double> mu_dist(spec.post_mean_lo, spec.post_mean_hi);

  Dataset ds = detail::make_dataset_shell(spec, split, "multi_change");
  ds.multi_labels.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = k_dist(rng);
    if (T < spec.min_gap * (k + 1)) throw ConfigError("data.n_changes_max: infeasible number of changes");

    // Stars and bars: k distinct cut positions in [1, slack + k] give a
    // uniform composition of the slack over k + 1 segments.
    const std::size_t slack = T - spec.min_gap * (k + 1);
    std::vector<std::size_t> cuts(slack + k);
    std::iota(cuts.begin(), cuts.end(), std::size_t{1});
    std::vector<std::size_t> chosen;
    std::sample(cuts.begin(), cuts.end(), std::back_inserter(chosen), k, rng);
    std::sort(chosen.begin(), chosen.end());

    std::vector<TimeIndex> changes;
    std::size_t pos = 0, prev_cut = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t extra = chosen[j] - prev_cut - 1;
      pos += spec.min_gap + extra;
      changes.push_back(pos);
      prev_cut = chosen[j];
    }

    LabeledSequence seq{detail::sequence_id(split, i), Matrix(T, spec.dim), ChangeLabel::no_change()};
    std::size_t start = 0;
    for (std::size_t j = 0; j <= k; ++j) {
      const std::size_t end = j < k ? changes[j] : T;
      const double mean = j % 2 == 0 ? spec.pre_mean : mu_dist(rng);
      detail::fill_segment(seq.observations, start, end, mean, sd, rng);
      start = end;
    }
    MultiChangeLabel label(changes);
    seq.label = label.first();
    ds.sequences.push_back(std::move(seq));
    ds.multi_labels->push_back(std::move(label));
  }
  return ds;
}

inline Dataset generate(const GeneratorSpec& spec, SplitKind split) {
  return spec.multi ? generate_multi_change(spec, split) : generate_single_change(spec, split);
}

}  // namespace indid
