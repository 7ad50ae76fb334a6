#pragma once

// Minibatch training of the recurrent detector with Adam and early stopping
// on validation loss. Three regimes: the delay/false-alarm loss alone (InDiD),
// per-step binary cross-entropy (BCE), and BCE followed by InDiD fine-tuning
// from the BCE optimum.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "indid/adam.hpp"
#include "indid/core_types.hpp"
#include "indid/error.hpp"
#include "indid/loss.hpp"
#include "indid/model.hpp"
#include "indid/parallel.hpp"
#include "json.hpp"

namespace indid {

enum class Regime { InDiD, BCE, BCEThenInDiD };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::InDiD: return "indid";
    case Regime::BCE: return "bce";
    case Regime::BCEThenInDiD: return "bce_indid";
  }
  return "indid";
}

inline Regime parse_regime(const std::string& s) {
  if (s == "indid") return Regime::InDiD;
  if (s == "bce") return Regime::BCE;
  if (s == "bce_indid") return Regime::BCEThenInDiD;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

enum class PhaseLoss { InDiD, BCE };

struct TrainConfig {
  Regime regime = Regime::InDiD;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 100;  // per phase
  std::size_t patience = 10;
  double min_delta = 0.0;
  LossConfig loss;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  double max_grad_norm = 0.0;  // 0 disables clipping
  std::size_t threads = 1;

  void validate() const {
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
      throw std::invalid_argument("TrainConfig: val_fraction must be in (0, 1)");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
    if (!(min_delta >= 0.0)) throw std::invalid_argument("TrainConfig: min_delta must be non-negative");
    if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("TrainConfig: max_grad_norm must be non-negative");
  }
};

struct EpochRecord {
  std::string phase;
  std::size_t epoch = 0;  // 1-based within the phase
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_ms = 0.0;
};

struct PhaseSummary {
  std::string phase;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool early_stopped = false;
};

struct TrainLog {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::vector<PhaseSummary> phases;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

struct TrainValSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Validation split stratified by label presence. Each stratum keeps at
/// least one training sequence; both index lists come back sorted.
inline TrainValSplit split_train_val(const Dataset& ds, double val_fraction, std::uint64_t seed) {
  std::vector<std::size_t> with_change, without_change;
  for (std::size_t i = 0; i < ds.size(); ++i)
    (ds.sequences[i].label.has_change() ? with_change : without_change).push_back(i);

  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  TrainValSplit split;
  for (auto* group : {&with_change, &without_change}) {
    if (group->empty()) continue;
    std::shuffle(group->begin(), group->end(), rng);
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(group->size())));
    n_val = std::min(n_val, group->size() - 1);
    split.val.insert(split.val.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.insert(split.train.end(), group->begin() + static_cast<std::ptrdiff_t>(n_val), group->end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  return split;
}

/// Eval-mode predictions for the given sequence indices.
inline std::vector<ProbabilitySeries> predict_all(const ModelParams& params, const Dataset& ds,
                                                  const std::vector<std::size_t>& indices, std::size_t threads = 1) {
  std::vector<ProbabilitySeries> out(indices.size());
  parallel_for(indices.size(), threads,
               [&](std::size_t k) { out[k] = predict(params, ds.sequences[indices[k]].observations); });
  return out;
}

inline std::vector<ProbabilitySeries> predict_all(const ModelParams& params, const Dataset& ds,
                                                  std::size_t threads = 1) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return predict_all(params, ds, all, threads);
}

inline LossValue phase_loss(PhaseLoss kind, const std::vector<ProbabilitySeries>& probs,
                            const std::vector<ChangeLabel>& labels, const LossConfig& cfg) {
  return kind == PhaseLoss::InDiD ? combined_loss(probs, labels, cfg) : bce_batch_loss(probs, labels);
}

/// Loss of the eval-mode model over a whole index set treated as one batch.
inline double evaluate_loss(const ModelParams& params, const Dataset& ds, const std::vector<std::size_t>& indices,
                            PhaseLoss kind, const LossConfig& cfg, std::size_t threads = 1) {
  const auto probs = predict_all(params, ds, indices, threads);
  std::vector<ChangeLabel> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) labels.push_back(ds.sequences[i].label);
  return phase_loss(kind, probs, labels, cfg).total;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct PhaseResult {
  ModelParams best;
  PhaseSummary summary;
};

inline PhaseResult run_phase(const std::string& name, std::uint64_t phase_id, PhaseLoss kind, ModelParams params,
                             const Dataset& ds, const TrainValSplit& split, const TrainConfig& cfg,
                             std::mt19937_64& rng, TrainLog& log) {
  const auto& monitor = split.val.empty() ? split.train : split.val;
  const std::size_t threads = std::max<std::size_t>(1, cfg.threads);
  AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  AdamState adam(params.size());

  PhaseResult result{params, {}};
  result.summary.phase = name;
  double best_for_patience = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;

  std::vector<std::size_t> order = split.train;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);

    double train_loss_sum = 0.0;
    for (std::size_t lo = 0, batch_idx = 0; lo < order.size(); lo += cfg.batch_size, ++batch_idx) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      const std::size_t n = hi - lo;

      std::vector<ForwardTape> tapes(n);
      parallel_for(n, threads, [&](std::size_t k) {
        std::mt19937_64 drop_rng(mix_seed(cfg.seed, {phase_id, epoch, batch_idx, k}));
        tapes[k] = forward(params, ds.sequences[order[lo + k]].observations, true, &drop_rng);
      });

      std::vector<ProbabilitySeries> probs;
      std::vector<ChangeLabel> labels;
      probs.reserve(n);
      labels.reserve(n);
      for (std::size_t k = 0; k < n; ++k) {
        probs.emplace_back(tapes[k].probs);
        labels.push_back(ds.sequences[order[lo + k]].label);
      }
      const LossValue loss = phase_loss(kind, probs, labels, cfg.loss);
      if (!std::isfinite(loss.total))
        throw NumericError(name + " phase diverged: non-finite training loss at epoch " + std::to_string(epoch));
      train_loss_sum += loss.total * static_cast<double>(n);

      std::vector<ModelParams> partial(n, ModelParams(params.spec()));
      parallel_for(n, threads, [&](std::size_t k) { backward_accumulate(params, tapes[k], loss.grad_p[k], partial[k]); });
      ModelParams grads(params.spec());
      auto g = grads.values();
      for (const auto& part : partial) {
        auto pv = part.values();
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += pv[j];
      }
      if (cfg.max_grad_norm > 0.0) {
        double norm = 0.0;
        for (double v : g) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > cfg.max_grad_norm)
          for (double& v : g) v *= cfg.max_grad_norm / norm;
      }
      adam_step(params.values(), g, adam, adam_cfg);
    }

    EpochRecord rec;
    rec.phase = name;
    rec.epoch = epoch;
    rec.train_loss = train_loss_sum / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(params, ds, monitor, kind, cfg.loss, threads);
    if (!std::isfinite(rec.val_loss))
      throw NumericError(name + " phase diverged: non-finite validation loss at epoch " + std::to_string(epoch));
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(rec);
    result.summary.epochs_run = epoch;

    if (rec.val_loss < result.summary.best_val_loss) {
      result.summary.best_val_loss = rec.val_loss;
      result.summary.best_epoch = epoch;
      result.best = params;
    }
    // Improvement must beat the best monitored value by more than min_delta;
    // with an infinite min_delta no epoch ever improves.
    if (rec.val_loss < best_for_patience - cfg.min_delta) {
      best_for_patience = rec.val_loss;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      result.summary.early_stopped = true;
      break;
    }
  }
  return result;
}

}  // namespace detail

/// Trains from a seeded initialization, or from `warm_start` when given.
/// Returns the parameters of the best-validation epoch of the final phase.
inline TrainResult train(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
                         const ModelParams* warm_start = nullptr) {
  cfg.validate();
  spec.validate();
  if (ds.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (ds.dim() != spec.input_dim)
    throw std::invalid_argument("train: dataset dimension " + std::to_string(ds.dim()) +
                                " does not match model input_dim " + std::to_string(spec.input_dim));

  std::mt19937_64 rng(cfg.seed);
  TrainResult result{warm_start ? *warm_start : init_params(spec, rng), {}};
  result.log.seed = cfg.seed;
  if (cfg.max_epochs == 0) return result;

  const auto split = split_train_val(ds, cfg.val_fraction, cfg.seed);

  std::vector<std::pair<std::string, PhaseLoss>> phases;
  switch (cfg.regime) {
    case Regime::InDiD: phases = {{"indid", PhaseLoss::InDiD}}; break;
    case Regime::BCE: phases = {{"bce", PhaseLoss::BCE}}; break;
    case Regime::BCEThenInDiD: phases = {{"bce", PhaseLoss::BCE}, {"indid", PhaseLoss::InDiD}}; break;
  }

  for (std::size_t ph = 0; ph < phases.size(); ++ph) {
    auto phase = detail::run_phase(phases[ph].first, ph, phases[ph].second, result.params, ds, split, cfg, rng,
                                   result.log);
    result.params = std::move(phase.best);
    result.log.phases.push_back(phase.summary);
  }
  return result;
}

inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"phase", r.phase}, {"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
          {"wall_ms", r.wall_ms}};
}

}  // namespace indid
