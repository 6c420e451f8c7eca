#include <gtest/gtest.h>

#include <fstream>

#include "presort/config.hpp"
#include "presort/error.hpp"
#include "test_util.hpp"

using namespace presort;
using presort::testing::TempDir;

TEST(Config, DefaultsValidate) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  const auto g = cfg.network_geometry();
  EXPECT_EQ(g.input_height, 128);
  EXPECT_EQ(g.input_width, 88);
}

TEST(Config, ParsesIniFile) {
  TempDir dir;
  std::ofstream(dir / "a.cfg") << "[run]\nseed = 7\nregime = baseline\n\n[spectro]\nn_mels = 32\n"
                                  "[net]\nchannels = 8,16\n";
  const auto cfg = load_run_config(dir / "a.cfg");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.regime, Regime::baseline);
  EXPECT_EQ(cfg.spectro.n_mels, 32);
  EXPECT_EQ(cfg.net.channels, (std::vector<int>{8, 16}));
}

TEST(Config, UnknownKeyIsError) {
  TempDir dir;
  std::ofstream(dir / "a.cfg") << "[run]\nseeed = 7\n";
  try {
    load_run_config(dir / "a.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.seeed"), std::string::npos);
  }
  RunConfig cfg;
  EXPECT_THROW(apply_override(cfg, "run.nothing", "1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "noseparator", "1"), ConfigError);
  EXPECT_THROW(apply_override(cfg, "run.seed", "abc"), ConfigError);
}

TEST(Config, OverrideAndIniRoundTrip) {
  TempDir dir;
  RunConfig cfg;
  apply_override(cfg, "run.relabel_threshold", "0.7");
  apply_override(cfg, "segment.length_s", "0.5");
  apply_override(cfg, "augment.binary_stage", "true");
  EXPECT_DOUBLE_EQ(cfg.relabel_threshold, 0.7);
  EXPECT_TRUE(cfg.augment_binary);
  std::ofstream(dir / "b.cfg") << to_ini(cfg);
  const auto back = load_run_config(dir / "b.cfg");
  EXPECT_EQ(to_ini(back), to_ini(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  for (const auto& key : config_keys()) EXPECT_NE(key.find('.'), std::string::npos);
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig cfg;
  apply_override(cfg, "threshold.threshold", "1.5");
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_regime("sorted"), ConfigError);
}
