#include <gtest/gtest.h>

#include "indid/config.hpp"

namespace indid {
namespace {

TEST(Toml, ParsesScalarsAndArrays) {
  auto doc = toml::parse("a = 1\nb = -2.5e3 # c\n[s]\nx = \"hi\"\ny = [1, 2, 3]\nz = true\nw = inf\n");
  EXPECT_EQ(doc[""]["a"].i, 1);
  EXPECT_EQ(doc[""]["b"].d, -2500.0);
  EXPECT_EQ(doc["s"]["x"].s, "hi");
  EXPECT_EQ(doc["s"]["y"].array.size(), 3u);
  EXPECT_TRUE(doc["s"]["z"].b);
  EXPECT_TRUE(std::isinf(doc["s"]["w"].d));
}

TEST(Toml, ErrorsCarryLineNumbers) {
  try {
    toml::parse("a = 1\nb = \n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(toml::parse("a = 1\na = 2\n"), ConfigError);
}

TEST(Config, DefaultsWhenEmpty) {
  auto cfg = parse_config("");
  EXPECT_EQ(cfg.data.n_train, 700u);
  EXPECT_EQ(cfg.model.hidden_dim, 8u);
  EXPECT_EQ(cfg.train.batch_size, 64u);
  EXPECT_EQ(cfg.train.loss.horizon, Horizon::full());
  EXPECT_EQ(cfg.metrics.grid_points, 41u);
}

TEST(Config, SectionsAndSeed) {
  auto cfg = parse_config(
      "seed = 7\n[data]\ndim = 100\n[model]\ncell = \"gru\"\n[train]\nhorizon = \"relative\"\nhorizon_value = 16\n"
      "c = 0.25\nregime = \"bce_indid\"\n[metrics]\nablation_horizons = [2, 4]\n");
  EXPECT_EQ(cfg.data.dim, 100u);
  EXPECT_EQ(cfg.data.seed, 7u);
  EXPECT_EQ(cfg.train.seed, 7u);
  EXPECT_EQ(cfg.model.cell, CellType::GRU);
  EXPECT_EQ(cfg.train.loss.horizon, Horizon::relative(16));
  EXPECT_EQ(cfg.train.loss.c, Multiplier::fixed(0.25));
  EXPECT_EQ(cfg.train.regime, Regime::BCEThenInDiD);
  EXPECT_EQ(cfg.metrics.ablation_horizons, (std::vector<std::size_t>{2, 4}));
}

TEST(Config, UnknownKeyRejected) {
  EXPECT_THROW(parse_config("[train]\nlearnin_rate = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("[bogus]\nx = 1\n"), ConfigError);
}

TEST(Config, WrongTypeRejected) {
  EXPECT_THROW(parse_config("[data]\ndim = \"ten\"\n"), ConfigError);
  EXPECT_THROW(parse_config("[data]\ndim = -3\n"), ConfigError);
  EXPECT_THROW(parse_config("[train]\nregime = \"xyz\"\n"), ConfigError);
}

TEST(Config, ResolvedEchoRoundTrips) {
  auto cfg = parse_config("seed = 3\n[data]\npost_mean_hi = 55.5\n[detect]\nmulti_mode = \"first\"\n");
  auto text = to_toml(cfg);
  auto back = parse_config(text);
  EXPECT_EQ(to_toml(back), text);
  EXPECT_EQ(back.data.post_mean_hi, 55.5);
  EXPECT_EQ(back.detect.multi_mode, MultiMode::FirstOnly);
  EXPECT_EQ(back.seed, 3u);
}

TEST(Config, OverrideAppliesTomlValue) {
  ExperimentConfig cfg;
  apply_override(cfg, "train.learning_rate=0.01");
  apply_override(cfg, "model.cell=\"gru\"");
  EXPECT_EQ(cfg.train.learning_rate, 0.01);
  EXPECT_EQ(cfg.model.cell, CellType::GRU);
  EXPECT_THROW(apply_override(cfg, "train.learning_rate"), ConfigError);
}

TEST(Config, ValidationNamesField) {
  auto cfg = parse_config("[data]\npost_mean_lo = 0.5\n");
  try {
    validate(cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("post_mean_lo"), std::string::npos);
  }
}

}  // namespace
}  // namespace indid
