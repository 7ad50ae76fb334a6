#include <gtest/gtest.h>

#include <limits>

#include "indid/offline.hpp"
#include "test_util.hpp"

namespace indid {
namespace {

Matrix column(std::vector<double> v) {
  const std::size_t n = v.size();
  return Matrix(n, 1, std::move(v));
}

Matrix steps(std::vector<std::pair<std::size_t, double>> pieces) {
  std::vector<double> v;
  for (auto [len, val] : pieces) v.insert(v.end(), len, val);
  return column(v);
}

// Minimum penalized objective over every partition honouring min_len.
double exhaustive_optimum(const Matrix& x, double beta, std::size_t min_len) {
  const std::size_t T = x.rows();
  L2Cost cost(x);
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << (T - 1)); ++mask) {
    std::vector<TimeIndex> cps;
    for (std::size_t b = 0; b + 1 < T; ++b)
      if (mask & (1u << b)) cps.push_back(b + 1);
    std::size_t prev = 0;
    bool ok = true;
    for (auto c : cps) {
      ok &= c - prev >= min_len;
      prev = c;
    }
    ok &= T - prev >= min_len;
    if (ok) best = std::min(best, penalized_objective(cost, cps, beta));
  }
  return best;
}

TEST(L2Cost, Examples) {
  EXPECT_DOUBLE_EQ(l2_cost(column({4, 4, 4}), 0, 2), 0.0);
  EXPECT_DOUBLE_EQ(l2_cost(column({0, 2}), 0, 1), 2.0);
  EXPECT_DOUBLE_EQ(l2_cost(column({7, 1}), 1, 1), 0.0);
}

TEST(L2Cost, MultivariateSumsColumns) {
  Matrix x(2, 2, std::vector<double>{0, 10, 2, 14});
  EXPECT_DOUBLE_EQ(l2_cost(x, 0, 1), 2.0 + 8.0);
}

TEST(Pelt, ConstantHasNoChanges) {
  SegmentationSpec s;
  s.penalty = 0.1;
  EXPECT_TRUE(pelt_segment(Matrix(30, 1, 2.5), s).empty());
}

TEST(Pelt, StepFound) {
  SegmentationSpec s;
  s.penalty = 1.0;
  EXPECT_EQ(pelt_segment(steps({{10, 0.0}, {10, 100.0}}), s).points(), (std::vector<TimeIndex>{10}));
}

TEST(Pelt, InfinitePenaltyHasNoChanges) {
  SegmentationSpec s;
  s.penalty = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(pelt_segment(steps({{10, 0.0}, {10, 100.0}}), s).empty());
}

TEST(Pelt, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 150; ++trial) {
    std::uniform_int_distribution<std::size_t> len(1, 13);
    const std::size_t T = len(rng);
    auto x = testing::random_matrix(rng, T, 1, 3.0);
    std::uniform_real_distribution<double> pen(0.0, 20.0);
    SegmentationSpec s;
    s.penalty = pen(rng);
    s.min_segment_len = 1 + static_cast<std::size_t>(trial % 3);
    auto cps = pelt_segment(x, s);
    const double want = T < 2 * s.min_segment_len ? penalized_objective(L2Cost(x), {}, s.penalty)
                                                  : exhaustive_optimum(x, s.penalty, s.min_segment_len);
    EXPECT_NEAR(penalized_objective(L2Cost(x), cps.points(), s.penalty), want, 1e-9);
  }
}

TEST(BinSeg, FixedCountExamples) {
  SegmentationSpec s;
  s.method = SegmentationMethod::BinSeg;
  s.stop = StopKind::FixedCount;
  s.n_pred = 0;
  EXPECT_TRUE(binseg_segment(steps({{10, 0.0}, {10, 100.0}}), s).empty());
  s.n_pred = 1;
  EXPECT_EQ(binseg_segment(steps({{10, 0.0}, {10, 100.0}}), s).points(), (std::vector<TimeIndex>{10}));
  s.n_pred = 2;
  EXPECT_EQ(binseg_segment(steps({{6, 0.0}, {5, 50.0}, {7, -20.0}}), s).points(), (std::vector<TimeIndex>{6, 11}));
}

TEST(BinSeg, PenaltyStop) {
  SegmentationSpec s;
  s.method = SegmentationMethod::BinSeg;
  s.penalty = 1.0;
  EXPECT_EQ(segment(steps({{8, 0.0}, {8, 40.0}, {8, 0.0}}), s).points(), (std::vector<TimeIndex>{8, 16}));
  s.penalty = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(segment(steps({{8, 0.0}, {8, 40.0}}), s).empty());
}

TEST(BinSeg, RespectsMinSegmentLength) {
  SegmentationSpec s;
  s.method = SegmentationMethod::BinSeg;
  s.stop = StopKind::FixedCount;
  s.n_pred = 1;
  s.min_segment_len = 4;
  auto cps = binseg_segment(steps({{2, 0.0}, {10, 30.0}}), s);
  ASSERT_EQ(cps.points().size(), 1u);
  EXPECT_GE(cps.points()[0], 4u);
}

}  // namespace
}  // namespace indid
