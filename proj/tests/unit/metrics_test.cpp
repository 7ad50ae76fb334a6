#include <gtest/gtest.h>

#include <numeric>

#include "indid/evaluation.hpp"
#include "indid/metrics.hpp"
#include "test_util.hpp"

namespace indid {
namespace {

DetectionResult alarm_at(TimeIndex t) { return DetectionResult::from_alarms({t}); }

TEST(Outcome, Classification) {
  EXPECT_EQ(classify_outcome(ChangeLabel::change(5), alarm_at(7)), Outcome::TP);
  EXPECT_EQ(classify_outcome(ChangeLabel::change(5), alarm_at(5)), Outcome::TP);
  EXPECT_EQ(classify_outcome(ChangeLabel::change(5), alarm_at(3)), Outcome::FP);
  EXPECT_EQ(classify_outcome(ChangeLabel::change(5), {}), Outcome::FN);
  EXPECT_EQ(classify_outcome(ChangeLabel::no_change(), {}), Outcome::TN);
  EXPECT_EQ(classify_outcome(ChangeLabel::no_change(), alarm_at(0)), Outcome::FP);
}

TEST(F1, Examples) {
  EXPECT_DOUBLE_EQ(*f1({1, 0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(*f1({0, 0, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(*f1({3, 0, 1, 1}), 0.75);
  EXPECT_FALSE(f1({0, 5, 0, 0}));
}

TEST(DelayAndTtfa, Examples) {
  auto a = delay_and_ttfa(ChangeLabel::change(5), alarm_at(7), 20);
  EXPECT_EQ(a.delay, 2.0);
  EXPECT_EQ(a.time_to_false_alarm, 20.0);
  auto b = delay_and_ttfa(ChangeLabel::no_change(), alarm_at(4), 20);
  EXPECT_FALSE(b.delay);
  EXPECT_EQ(b.time_to_false_alarm, 4.0);
  auto c = delay_and_ttfa(ChangeLabel::change(5), {}, 20);
  EXPECT_EQ(c.delay, 15.0);
  EXPECT_EQ(c.time_to_false_alarm, 20.0);
}

TEST(Summarize, AggregatesMatchPerSequenceValues) {
  std::mt19937_64 rng(1);
  std::vector<ChangeLabel> labels;
  std::vector<DetectionResult> results;
  std::vector<std::size_t> lengths;
  double dsum = 0, tsum = 0;
  std::size_t dn = 0;
  for (int i = 0; i < 100; ++i) {
    std::uniform_int_distribution<int> u(-1, 19);
    const int th = u(rng), al = u(rng);
    labels.push_back(th < 0 ? ChangeLabel::no_change() : ChangeLabel::change(static_cast<TimeIndex>(th)));
    results.push_back(al < 0 ? DetectionResult{} : alarm_at(static_cast<TimeIndex>(al)));
    lengths.push_back(20);
    // Direct restatement of the conventions.
    if (th >= 0 && al >= th) dsum += al - th, ++dn;
    if (th >= 0 && al < 0) dsum += 20 - th, ++dn;
    tsum += (al >= 0 && (th < 0 || al < th)) ? al : 20;
  }
  auto s = summarize(labels, results, lengths);
  EXPECT_NEAR(s.mean_delay, dsum / dn, 1e-12);
  EXPECT_NEAR(s.mean_ttfa, tsum / 100, 1e-12);
  EXPECT_EQ(s.counts.total(), 100u);
}

TEST(CurveArea, Examples) {
  EXPECT_EQ(curve_area({{0.5, 3.0, 10.0}}), 0.0);
  EXPECT_DOUBLE_EQ(curve_area({{0.1, 0.0, 10.0}, {0.9, 5.0, 0.0}}), 25.0);
  EXPECT_DOUBLE_EQ(curve_area({{0.9, 5.0, 0.0}, {0.1, 0.0, 10.0}}), 25.0);
  EXPECT_EQ(curve_area({{0.1, 0.0, 20.0}, {0.5, 0.0, 20.0}, {0.9, 0.0, 20.0}}), 0.0);
  // Duplicate x values are averaged: (0, 10) and (0, 20) merge into (0, 15).
  EXPECT_DOUBLE_EQ(curve_area({{0.1, 0.0, 10.0}, {0.2, 0.0, 20.0}, {0.3, 2.0, 5.0}}), 20.0);
}

TEST(ThresholdGrid, Default) {
  auto g = threshold_grid(41);
  ASSERT_EQ(g.size(), 41u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.025);
}

TEST(Covering, Examples) {
  auto p = Partition::from_changes({5}, 10);
  EXPECT_DOUBLE_EQ(covering(p, p), 1.0);
  EXPECT_NEAR(covering(p, Partition::from_changes({6}, 10)), (5.0 * 5 / 6 + 5.0 * 4 / 5) / 10, 1e-12);
  EXPECT_NEAR(covering(p, Partition::from_changes({6}, 10)), 0.81667, 1e-5);
  EXPECT_DOUBLE_EQ(covering(p, Partition::from_changes({}, 10)), 0.5);
}

TEST(Partition, DropsEmptySegments) {
  auto p = Partition::from_changes({0, 3, 3, 10}, 10);
  ASSERT_EQ(p.segments().size(), 2u);
  EXPECT_EQ(p.segments()[0], (std::pair<std::size_t, std::size_t>{0, 3}));
}

Dataset step_dataset() {
  Dataset ds;
  for (int i = 0; i < 6; ++i) {
    auto label = i % 2 ? ChangeLabel::no_change() : ChangeLabel::change(static_cast<TimeIndex>(3 + i));
    ds.sequences.push_back({"s" + std::to_string(i), Matrix(12, 1), label});
  }
  return ds;
}

std::vector<ProbabilitySeries> oracle_probs(const Dataset& ds) {
  std::vector<ProbabilitySeries> out;
  for (const auto& s : ds.sequences) {
    std::vector<double> p(s.length(), 0.0);
    if (s.label.has_change())
      for (auto t = s.label.theta(); t < p.size(); ++t) p[t] = 1.0;
    out.emplace_back(p);
  }
  return out;
}

TEST(Evaluation, OracleProbabilitiesArePerfect) {
  auto ds = step_dataset();
  auto grid = threshold_grid(41);
  grid.pop_back();  // at s = 1 nothing can strictly exceed the threshold
  auto rep = evaluate_probabilities("oracle", ds, oracle_probs(ds), grid, MultiMode::FirstOnly);
  EXPECT_EQ(rep.best_f1(), 1.0);
  EXPECT_EQ(rep.best().mean_delay, 0.0);
  EXPECT_EQ(rep.auc, 0.0);
  EXPECT_EQ(rep.covering_max, 1.0);
}

TEST(Evaluation, OracleOnFullGridHasNoAlarmEndpoint) {
  auto ds = step_dataset();
  auto rep = evaluate_probabilities("oracle", ds, oracle_probs(ds), threshold_grid(41), MultiMode::FirstOnly);
  ASSERT_EQ(rep.rows.size(), 41u);
  EXPECT_EQ(rep.best_f1(), 1.0);
  // Change sequences at theta 3, 5, 7 of length 12: undetected delays 9, 7, 5.
  EXPECT_DOUBLE_EQ(rep.rows.back().mean_delay, 7.0);
  EXPECT_DOUBLE_EQ(*rep.auc, 12.0 * 7.0);
}

TEST(Evaluation, ChangeSetsSingleRow) {
  auto ds = step_dataset();
  std::vector<MultiChangeLabel> pred;
  for (const auto& s : ds.sequences)
    pred.push_back(s.label.has_change() ? MultiChangeLabel({s.label.theta() + 1}) : MultiChangeLabel());
  auto rep = evaluate_change_sets("x", ds, pred);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.best_f1(), 1.0);
  EXPECT_EQ(rep.best().mean_delay, 1.0);
  EXPECT_FALSE(rep.auc);
  auto j = to_json(rep);
  EXPECT_TRUE(j["best_threshold"].is_null());
}

TEST(Evaluation, LogGrid) {
  auto g = log_grid(0.01, 100, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_NEAR(g[2], 1.0, 1e-12);
  EXPECT_NEAR(g[4], 100.0, 1e-9);
}

}  // namespace
}  // namespace indid
