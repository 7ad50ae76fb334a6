#pragma once

// Single-layer LSTM / GRU followed by an affine head and a sigmoid, run
// causally over a T x D sequence: p_t = sigmoid(w . h_t + b), where h_t is the
// recurrent state after consuming x_t. Backward is exact BPTT.
//
// Gate layout follows the common convention (rows of the stacked weight
// matrices): LSTM [input, forget, cell, output], GRU [reset, update, new].
// Both cells carry an input-side and a hidden-side bias; for the GRU the
// hidden-side bias of the "new" gate sits inside the reset product.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "indid/core_types.hpp"
#include "indid/error.hpp"
#include "json.hpp"

namespace indid {

enum class CellType { LSTM, GRU };

inline std::string to_string(CellType c) { return c == CellType::LSTM ? "lstm" : "gru"; }

inline CellType parse_cell_type(const std::string& s) {
  if (s == "lstm") return CellType::LSTM;
  if (s == "gru") return CellType::GRU;
  throw std::invalid_argument("unknown cell type '" + s + "'");
}

struct ModelSpec {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 8;
  CellType cell = CellType::LSTM;
  // Inverted dropout on h_t before the head; training only.
  double dropout = 0.0;

  std::size_t gates() const noexcept { return cell == CellType::LSTM ? 4 : 3; }

  void validate() const {
    if (input_dim == 0) throw std::invalid_argument("ModelSpec: input_dim must be >= 1");
    if (hidden_dim == 0) throw std::invalid_argument("ModelSpec: hidden_dim must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("ModelSpec: dropout must be in [0, 1)");
  }

  bool operator==(const ModelSpec&) const = default;
};

/// All weights in one flat buffer; block accessors give row-major views.
/// The same type stores parameter gradients.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelSpec& spec) : spec_(spec) {
    spec_.validate();
    const std::size_t gh = spec.gates() * spec.hidden_dim;
    offsets_[0] = 0;
    offsets_[1] = offsets_[0] + gh * spec.input_dim;   // input weights
    offsets_[2] = offsets_[1] + gh * spec.hidden_dim;  // hidden weights
    offsets_[3] = offsets_[2] + gh;                    // input bias
    offsets_[4] = offsets_[3] + gh;                    // hidden bias
    offsets_[5] = offsets_[4] + spec.hidden_dim;       // head weights
    offsets_[6] = offsets_[5] + 1;                     // head bias
    values_.assign(offsets_[6], 0.0);
  }

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> input_weights() noexcept { return block(0); }
  std::span<double> hidden_weights() noexcept { return block(1); }
  std::span<double> input_bias() noexcept { return block(2); }
  std::span<double> hidden_bias() noexcept { return block(3); }
  std::span<double> head_weights() noexcept { return block(4); }
  double& head_bias() noexcept { return values_[offsets_[5]]; }

  std::span<const double> input_weights() const noexcept { return block(0); }
  std::span<const double> hidden_weights() const noexcept { return block(1); }
  std::span<const double> input_bias() const noexcept { return block(2); }
  std::span<const double> hidden_bias() const noexcept { return block(3); }
  std::span<const double> head_weights() const noexcept { return block(4); }
  double head_bias() const noexcept { return values_[offsets_[5]]; }

  static constexpr const char* kBlockNames[6] = {"input_weights", "hidden_weights", "input_bias",
                                                 "hidden_bias",   "head_weights",   "head_bias"};
  std::span<double> block(std::size_t k) noexcept {
    return {values_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }
  std::span<const double> block(std::size_t k) const noexcept {
    return {values_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

  bool operator==(const ModelParams& o) const { return spec_ == o.spec_ && values_ == o.values_; }

 private:
  ModelSpec spec_;
  std::size_t offsets_[7] = {};
  std::vector<double> values_;
};

/// Uniform on [-1/sqrt(H), 1/sqrt(H)] for every weight and bias.
inline ModelParams init_params(const ModelSpec& spec, std::mt19937_64& rng) {
  ModelParams params(spec);
  const double bound = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : params.values()) v = dist(rng);
  return params;
}

/// Intermediates of one forward pass, consumed by backward().
struct ForwardTape {
  ModelSpec spec;
  Matrix inputs;               // T x D
  std::vector<double> hidden;  // (T+1) x H, row 0 is the zero initial state
  std::vector<double> cell;    // (T+1) x H, LSTM only
  std::vector<double> gates;   // T x (G*H), post-activation
  std::vector<double> aux;     // T x H: tanh(c_t) for LSTM, U_n h + b_hn for GRU
  std::vector<double> mask;    // T x H dropout multipliers (empty when disabled)
  std::vector<double> probs;   // T

  std::size_t length() const noexcept { return probs.size(); }
};

namespace detail {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

/// Forward pass from the zero state. With `training` set and a positive
/// dropout rate, `rng` drives the dropout mask; otherwise it is unused.
inline ForwardTape forward(const ModelParams& params, const Matrix& seq, bool training = false,
                           std::mt19937_64* rng = nullptr) {
  const auto& spec = params.spec();
  if (seq.cols() != spec.input_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(seq.cols()) + " columns, model expects " +
                                std::to_string(spec.input_dim));
  if (seq.rows() == 0) throw std::invalid_argument("forward: empty sequence");
  if (!seq.all_finite()) throw std::invalid_argument("forward: non-finite input");

  const std::size_t T = seq.rows(), D = spec.input_dim, H = spec.hidden_dim, G = spec.gates();
  const std::size_t GH = G * H;
  const bool lstm = spec.cell == CellType::LSTM;
  const bool use_dropout = training && spec.dropout > 0.0;
  if (use_dropout && rng == nullptr) throw std::invalid_argument("forward: dropout requires an rng");

  ForwardTape tape;
  tape.spec = spec;
  tape.inputs = seq;
  tape.hidden.assign((T + 1) * H, 0.0);
  if (lstm) tape.cell.assign((T + 1) * H, 0.0);
  tape.gates.assign(T * GH, 0.0);
  tape.aux.assign(T * H, 0.0);
  if (use_dropout) tape.mask.assign(T * H, 0.0);
  tape.probs.assign(T, 0.0);

  const auto W = params.input_weights();
  const auto U = params.hidden_weights();
  const auto bi = params.input_bias();
  const auto bh = params.hidden_bias();
  const auto head = params.head_weights();
  const double keep_scale = use_dropout ? 1.0 / (1.0 - spec.dropout) : 1.0;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> ax(GH), ah(GH);
  for (std::size_t t = 0; t < T; ++t) {
    const auto x = seq.row(t);
    const double* hprev = &tape.hidden[t * H];
    double* hcur = &tape.hidden[(t + 1) * H];
    double* gate = &tape.gates[t * GH];
    double* aux = &tape.aux[t * H];

    for (std::size_t r = 0; r < GH; ++r) {
      double sx = bi[r];
      const double* wr = &W[r * D];
      for (std::size_t d = 0; d < D; ++d) sx += wr[d] * x[d];
      double sh = bh[r];
      const double* ur = &U[r * H];
      for (std::size_t k = 0; k < H; ++k) sh += ur[k] * hprev[k];
      ax[r] = sx;
      ah[r] = sh;
    }

    if (lstm) {
      const double* cprev = &tape.cell[t * H];
      double* ccur = &tape.cell[(t + 1) * H];
      for (std::size_t k = 0; k < H; ++k) {
        const double ig = detail::sigmoid(ax[k] + ah[k]);
        const double fg = detail::sigmoid(ax[H + k] + ah[H + k]);
        const double gg = std::tanh(ax[2 * H + k] + ah[2 * H + k]);
        const double og = detail::sigmoid(ax[3 * H + k] + ah[3 * H + k]);
        gate[k] = ig;
        gate[H + k] = fg;
        gate[2 * H + k] = gg;
        gate[3 * H + k] = og;
        ccur[k] = fg * cprev[k] + ig * gg;
        aux[k] = std::tanh(ccur[k]);
        hcur[k] = og * aux[k];
      }
    } else {
      for (std::size_t k = 0; k < H; ++k) {
        const double rg = detail::sigmoid(ax[k] + ah[k]);
        const double zg = detail::sigmoid(ax[H + k] + ah[H + k]);
        aux[k] = ah[2 * H + k];
        const double ng = std::tanh(ax[2 * H + k] + rg * aux[k]);
        gate[k] = rg;
        gate[H + k] = zg;
        gate[2 * H + k] = ng;
        hcur[k] = (1.0 - zg) * ng + zg * hprev[k];
      }
    }

    double z = params.head_bias();
    if (use_dropout) {
      double* m = &tape.mask[t * H];
      for (std::size_t k = 0; k < H; ++k) {
        m[k] = unif(*rng) < spec.dropout ? 0.0 : keep_scale;
        z += head[k] * hcur[k] * m[k];
      }
    } else {
      for (std::size_t k = 0; k < H; ++k) z += head[k] * hcur[k];
    }
    // Clamp away from exact 0/1 so the series stays strictly inside (0, 1).
    tape.probs[t] = std::clamp(detail::sigmoid(z), 1e-300, 1.0 - 1e-16);
  }
  return tape;
}

/// Eval-mode probabilities.
inline ProbabilitySeries predict(const ModelParams& params, const Matrix& seq) {
  return ProbabilitySeries(forward(params, seq).probs);
}

/// Accumulates d loss / d params into `grads` given upstream d loss / d p_t.
inline void backward_accumulate(const ModelParams& params, const ForwardTape& tape, std::span<const double> grad_p,
                                ModelParams& grads) {
  const auto& spec = params.spec();
  if (!(tape.spec == spec) || !(grads.spec() == spec))
    throw std::invalid_argument("backward: tape/gradient buffer do not match the model");
  if (grad_p.size() != tape.length()) throw std::invalid_argument("backward: grad_p length does not match tape");

  const std::size_t T = tape.length(), D = spec.input_dim, H = spec.hidden_dim, G = spec.gates();
  const std::size_t GH = G * H;
  const bool lstm = spec.cell == CellType::LSTM;
  const bool has_mask = !tape.mask.empty();

  const auto U = params.hidden_weights();
  const auto head = params.head_weights();
  auto dW = grads.input_weights();
  auto dU = grads.hidden_weights();
  auto dbi = grads.input_bias();
  auto dbh = grads.hidden_bias();
  auto dhead = grads.head_weights();
  double& dhead_b = grads.head_bias();

  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dax(GH), dah(GH);
  for (std::size_t t = T; t-- > 0;) {
    const auto x = tape.inputs.row(t);
    const double* hprev = &tape.hidden[t * H];
    const double* hcur = &tape.hidden[(t + 1) * H];
    const double* gate = &tape.gates[t * GH];
    const double* aux = &tape.aux[t * H];
    const double p = tape.probs[t];

    const double dz = grad_p[t] * p * (1.0 - p);
    dhead_b += dz;
    for (std::size_t k = 0; k < H; ++k) {
      const double m = has_mask ? tape.mask[t * H + k] : 1.0;
      dhead[k] += dz * hcur[k] * m;
      dh[k] = dz * head[k] * m + dh_next[k];
    }

    if (lstm) {
      const double* cprev = &tape.cell[t * H];
      for (std::size_t k = 0; k < H; ++k) {
        const double ig = gate[k], fg = gate[H + k], gg = gate[2 * H + k], og = gate[3 * H + k];
        const double tc = aux[k];
        const double dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
        const double da_i = dc * gg * ig * (1.0 - ig);
        const double da_f = dc * cprev[k] * fg * (1.0 - fg);
        const double da_g = dc * ig * (1.0 - gg * gg);
        const double da_o = dh[k] * tc * og * (1.0 - og);
        dax[k] = dah[k] = da_i;
        dax[H + k] = dah[H + k] = da_f;
        dax[2 * H + k] = dah[2 * H + k] = da_g;
        dax[3 * H + k] = dah[3 * H + k] = da_o;
        dc_next[k] = dc * fg;
      }
    } else {
      for (std::size_t k = 0; k < H; ++k) {
        const double rg = gate[k], zg = gate[H + k], ng = gate[2 * H + k];
        const double dn = dh[k] * (1.0 - zg);
        const double dzg = dh[k] * (hprev[k] - ng);
        const double da_n = dn * (1.0 - ng * ng);
        const double dr = da_n * aux[k];
        dax[k] = dah[k] = dr * rg * (1.0 - rg);
        dax[H + k] = dah[H + k] = dzg * zg * (1.0 - zg);
        dax[2 * H + k] = da_n;
        dah[2 * H + k] = da_n * rg;
      }
    }

    for (std::size_t k = 0; k < H; ++k) dh_next[k] = lstm ? 0.0 : dh[k] * gate[H + k];
    for (std::size_t r = 0; r < GH; ++r) {
      const double gx = dax[r], gh = dah[r];
      dbi[r] += gx;
      dbh[r] += gh;
      double* dwr = &dW[r * D];
      for (std::size_t d = 0; d < D; ++d) dwr[d] += gx * x[d];
      double* dur = &dU[r * H];
      const double* ur = &U[r * H];
      for (std::size_t k = 0; k < H; ++k) {
        dur[k] += gh * hprev[k];
        dh_next[k] += ur[k] * gh;
      }
    }
  }
}

inline ModelParams backward(const ModelParams& params, const ForwardTape& tape, std::span<const double> grad_p) {
  ModelParams grads(params.spec());
  backward_accumulate(params, tape, grad_p, grads);
  return grads;
}

// Checkpoint: {"format": "indid-model", "version": 1, "spec": {...}, "params": {<block>: [row-major values]}}

inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const ModelSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_dim", spec.hidden_dim},
          {"cell", to_string(spec.cell)},
          {"dropout", spec.dropout}};
}

inline nlohmann::json checkpoint_json(const ModelParams& params) {
  nlohmann::json blocks = nlohmann::json::object();
  for (std::size_t k = 0; k < 6; ++k) {
    auto b = params.block(k);
    blocks[ModelParams::kBlockNames[k]] = std::vector<double>(b.begin(), b.end());
  }
  return {{"format", "indid-model"},
          {"version", kCheckpointVersion},
          {"spec", to_json(params.spec())},
          {"params", blocks}};
}

inline ModelParams params_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format") != "indid-model") throw DataError("checkpoint: unexpected format tag");
    if (j.at("version").get<int>() != kCheckpointVersion) throw DataError("checkpoint: unsupported version");
    const auto& js = j.at("spec");
    ModelSpec spec;
    spec.input_dim = js.at("input_dim").get<std::size_t>();
    spec.hidden_dim = js.at("hidden_dim").get<std::size_t>();
    spec.cell = parse_cell_type(js.at("cell").get<std::string>());
    spec.dropout = js.at("dropout").get<double>();
    ModelParams params(spec);
    for (std::size_t k = 0; k < 6; ++k) {
      const auto values = j.at("params").at(ModelParams::kBlockNames[k]).get<std::vector<double>>();
      auto b = params.block(k);
      if (values.size() != b.size())
        throw DataError(std::string("checkpoint: block '") + ModelParams::kBlockNames[k] + "' has wrong size");
      std::copy(values.begin(), values.end(), b.begin());
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace indid
