#include <gtest/gtest.h>

#include <cmath>

#include "indid/datagen.hpp"

namespace indid {
namespace {

GeneratorSpec small(std::uint64_t seed = 1) {
  GeneratorSpec g;
  g.n_train = 70;
  g.n_test = 30;
  g.seed = seed;
  return g;
}

TEST(Datagen, DefaultSizesAndFractions) {
  GeneratorSpec g;
  auto tr = generate(g, SplitKind::Train);
  auto te = generate(g, SplitKind::Test);
  ASSERT_EQ(tr.size(), 700u);
  ASSERT_EQ(te.size(), 300u);
  auto changed = [](const Dataset& d) {
    std::size_t n = 0;
    for (const auto& s : d.sequences) n += s.label.has_change();
    return n;
  };
  EXPECT_EQ(changed(tr), 342u);  // round(0.489 * 700)
  EXPECT_EQ(changed(te), 158u);  // round(0.527 * 300)
  EXPECT_EQ(tr.dim(), 1u);
  EXPECT_EQ(tr.sequences[0].length(), 128u);
  EXPECT_EQ(tr.sequences[0].id, "train_00000");
}

TEST(Datagen, ZeroFractionMeansNoChanges) {
  auto g = small();
  g.change_fraction_train = 0.0;
  for (const auto& s : generate(g, SplitKind::Train).sequences) EXPECT_FALSE(s.label.has_change());
}

TEST(Datagen, PostChangeMeanWithinBound) {
  auto g = small(4);
  g.dim = 3;
  g.post_mean_lo = g.post_mean_hi = 20.0;
  for (const auto& s : generate(g, SplitKind::Train).sequences) {
    if (!s.label.has_change()) continue;
    const std::size_t theta = s.label.theta();
    double sum = 0.0;
    for (std::size_t t = theta; t < s.length(); ++t)
      for (std::size_t d = 0; d < 3; ++d) sum += s.observations(t, d);
    const double n = static_cast<double>((s.length() - theta) * 3);
    EXPECT_LT(std::abs(sum / n - 20.0), 4.0 / std::sqrt(n));
  }
}

TEST(Datagen, Deterministic) {
  auto a = generate(small(9), SplitKind::Test);
  auto b = generate(small(9), SplitKind::Test);
  auto c = generate(small(10), SplitKind::Test);
  EXPECT_EQ(a.sequences, b.sequences);
  EXPECT_NE(a.sequences, c.sequences);
}

TEST(Datagen, SplitsAreIndependentStreams) {
  auto g = small(2);
  auto test_a = generate(g, SplitKind::Test);
  g.n_train = 5;
  EXPECT_EQ(generate(g, SplitKind::Test).sequences, test_a.sequences);
}

TEST(Datagen, InvalidSpecNamesField) {
  auto g = small();
  g.post_mean_lo = 0.5;
  try {
    generate(g, SplitKind::Train);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("post_mean_lo"), std::string::npos);
  }
}

TEST(Datagen, MultiChangeFeasibility) {
  auto g = small(3);
  g.multi = true;
  g.n_changes_min = g.n_changes_max = 9;
  auto ds = generate(g, SplitKind::Train);
  ASSERT_TRUE(ds.multi_labels);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& pts = (*ds.multi_labels)[i].points();
    ASSERT_EQ(pts.size(), 9u);
    std::size_t prev = 0;
    for (auto p : pts) {
      EXPECT_GE(p - prev, 2u);
      prev = p;
    }
    EXPECT_GE(128 - prev, 2u);
    EXPECT_EQ(ds.sequences[i].label, ChangeLabel::change(pts.front()));
  }
}

TEST(Datagen, MultiChangeZeroIsStationary) {
  auto g = small(3);
  g.multi = true;
  g.n_changes_min = g.n_changes_max = 0;
  auto ds = generate(g, SplitKind::Test);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_TRUE((*ds.multi_labels)[i].empty());
    EXPECT_FALSE(ds.sequences[i].label.has_change());
  }
}

TEST(Datagen, MultiChangeIncreasing) {
  auto g = small(5);
  g.multi = true;
  auto ds = generate(g, SplitKind::Train);
  for (const auto& l : *ds.multi_labels)
    for (std::size_t k = 1; k < l.points().size(); ++k) EXPECT_LT(l.points()[k - 1], l.points()[k]);
}

}  // namespace
}  // namespace indid
