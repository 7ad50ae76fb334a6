#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace indid {

// Time is 0-based: t in {0, ..., T-1}.
using TimeIndex = std::size_t;

/// Ground-truth change moment of a sequence: either a finite index or
/// "no change" (the theta = infinity case).
class ChangeLabel {
 public:
  ChangeLabel() = default;

  static ChangeLabel change(TimeIndex theta) { return ChangeLabel(theta); }
  static ChangeLabel no_change() { return ChangeLabel(); }

  bool has_change() const noexcept { return theta_.has_value(); }

  TimeIndex theta() const {
    if (!theta_) throw std::logic_error("ChangeLabel::theta: label has no change");
    return *theta_;
  }

  const std::optional<TimeIndex>& as_optional() const noexcept { return theta_; }

  bool operator==(const ChangeLabel&) const = default;

 private:
  explicit ChangeLabel(TimeIndex theta) : theta_(theta) {}

  std::optional<TimeIndex> theta_;
};

/// Dense row-major T x D matrix of observations.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("Matrix: data size does not match shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// First `n` rows as a new matrix.
  Matrix head_rows(std::size_t n) const {
    if (n > rows_) throw std::out_of_range("Matrix::head_rows");
    return Matrix(n, cols_,
                  std::vector<double>(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n * cols_)));
  }

  /// Rows [start, rows) as a new matrix.
  Matrix tail_rows(std::size_t start) const {
    if (start > rows_) throw std::out_of_range("Matrix::tail_rows");
    return Matrix(rows_ - start, cols_,
                  std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(start * cols_), data_.end()));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct LabeledSequence {
  std::string id;
  Matrix observations;
  ChangeLabel label;

  std::size_t length() const noexcept { return observations.rows(); }
  std::size_t dim() const noexcept { return observations.cols(); }

  bool operator==(const LabeledSequence&) const = default;
};

/// Throws std::invalid_argument when the sequence violates T >= 1, D >= 1,
/// finiteness, or label range.
inline void validate(const LabeledSequence& seq) {
  if (seq.length() == 0 || seq.dim() == 0)
    throw std::invalid_argument("sequence '" + seq.id + "' is empty");
  if (!seq.observations.all_finite())
    throw std::invalid_argument("sequence '" + seq.id + "' has non-finite observations");
  if (seq.label.has_change() && seq.label.theta() >= seq.length())
    throw std::invalid_argument("sequence '" + seq.id + "' has change index out of range");
}

/// Sorted, strictly increasing change indices of one sequence.
class MultiChangeLabel {
 public:
  MultiChangeLabel() = default;
  explicit MultiChangeLabel(std::vector<TimeIndex> points) : points_(std::move(points)) {
    for (std::size_t i = 1; i < points_.size(); ++i)
      if (points_[i] <= points_[i - 1])
        throw std::invalid_argument("MultiChangeLabel: change points must be strictly increasing");
  }

  const std::vector<TimeIndex>& points() const noexcept { return points_; }
  bool empty() const noexcept { return points_.empty(); }

  /// Throws unless every point lies in [0, length-1].
  void check_range(std::size_t length) const {
    if (!points_.empty() && points_.back() >= length)
      throw std::invalid_argument("MultiChangeLabel: change point out of range");
  }

  ChangeLabel first() const {
    return points_.empty() ? ChangeLabel::no_change() : ChangeLabel::change(points_.front());
  }

  bool operator==(const MultiChangeLabel&) const = default;

 private:
  std::vector<TimeIndex> points_;
};

struct Dataset {
  std::vector<LabeledSequence> sequences;
  // Present only for multiple-change data; parallel to `sequences`.
  std::optional<std::vector<MultiChangeLabel>> multi_labels;
  // Generator spec and seed as written to meta.json.
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t size() const noexcept { return sequences.size(); }
  std::size_t dim() const noexcept { return sequences.empty() ? 0 : sequences.front().dim(); }

  void validate() const {
    for (const auto& s : sequences) {
      indid::validate(s);
      if (s.dim() != dim()) throw std::invalid_argument("Dataset: sequences differ in dimension");
    }
    if (multi_labels) {
      if (multi_labels->size() != sequences.size())
        throw std::invalid_argument("Dataset: multi-change labels do not match sequence count");
      for (std::size_t i = 0; i < sequences.size(); ++i)
        (*multi_labels)[i].check_range(sequences[i].length());
    }
  }
};

/// Per-step change probabilities emitted by a causal model. Values lie in [0, 1].
class ProbabilitySeries {
 public:
  ProbabilitySeries() = default;
  explicit ProbabilitySeries(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("ProbabilitySeries: value outside [0, 1]");
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t t) const { return values_[t]; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const ProbabilitySeries&) const = default;

 private:
  std::vector<double> values_;
};

struct DetectionResult {
  std::vector<TimeIndex> alarms;  // sorted
  std::optional<TimeIndex> first_alarm;

  static DetectionResult from_alarms(std::vector<TimeIndex> alarms) {
    std::sort(alarms.begin(), alarms.end());
    DetectionResult r;
    if (!alarms.empty()) r.first_alarm = alarms.front();
    r.alarms = std::move(alarms);
    return r;
  }

  bool operator==(const DetectionResult&) const = default;
};

/// The sequence truncated to observations[0..t]; a change after t becomes
/// invisible and the label turns into NoChange.
inline LabeledSequence prefix_restrict(const LabeledSequence& seq, TimeIndex t) {
  if (t >= seq.length())
    throw std::out_of_range("prefix_restrict: t = " + std::to_string(t) + " outside sequence of length " +
                            std::to_string(seq.length()));
  LabeledSequence out;
  out.id = seq.id;
  out.observations = seq.observations.head_rows(t + 1);
  out.label = (seq.label.has_change() && seq.label.theta() <= t) ? seq.label : ChangeLabel::no_change();
  return out;
}

}  // namespace indid
