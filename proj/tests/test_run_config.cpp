#include <numbers>
#include <string>

#include <gtest/gtest.h>

#include "kdmd/errors.hpp"
#include "kdmd/run_config.hpp"
#include "kdmd/synth_oracle.hpp"
#include "support.hpp"

using namespace kdmd;

TEST(Config, Defaults) {
  const RunConfig c;
  EXPECT_TRUE(c.tlsq);
  EXPECT_TRUE(c.normalize);
  EXPECT_FALSE(c.mean_removal);
  EXPECT_FALSE(c.rank);
  EXPECT_EQ(c.loo_trials, 30);
  EXPECT_EQ(c.h_robust, 2e-3);
  EXPECT_EQ(c.h_cluster, 2.5e-2);
  EXPECT_EQ(describe(c.b_fit), describe(CoefficientFit(MultiSnapshotFit{10})));
}

TEST(Config, ParseFile) {
  const RunConfig c = parse_config(
      "# comment line\n"
      "input = data/x.dmds   # trailing comment\n"
      "rank = 12\n"
      "tlsq = off\n"
      "mean_removal = on\n"
      "bfit = first\n"
      "seed = 42\n"
      "loo_trials = 5\n"
      "horizon = 143\n"
      "rom.steady = persistent\n"
      "rom.big = box:rms_min=0.5\n"
      "rom.steady = all\n"
      "\n",
      "test.cfg");
  EXPECT_EQ(c.input, "data/x.dmds");
  EXPECT_EQ(c.rank, 12);
  EXPECT_FALSE(c.tlsq);
  EXPECT_TRUE(c.mean_removal);
  EXPECT_TRUE(std::holds_alternative<FirstSnapshotFit>(c.b_fit));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.loo_trials, 5);
  EXPECT_EQ(c.horizon, 143.0);
  ASSERT_EQ(c.roms.size(), 2u);
  EXPECT_EQ(c.roms[0].name, "steady");
  EXPECT_EQ(c.roms[0].selection, "all");
}

TEST(Config, ErrorsNameTheLine) {
  try {
    parse_config("rank = 3\nbogus = 1\n", "run.cfg");
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
  for (const char* bad : {"rank = 0", "rank = x", "loo_trials = 0", "tlsq = maybe", "bfit = multi:1", "h_robust = -1",
                          "cluster_level = 1", "persistence_factor = 0", "seed = -3", "svd = fast", "no equals sign",
                          "rom.bad name = all", "rom.x = nonsense", "synth.mode.A = 1 2", "synth_profile = wavy"})
    EXPECT_THROW(parse_config(bad), InvalidArgument) << bad;
}

TEST(Config, EchoRoundTrips) {
  RunConfig c;
  apply_setting(c, "rank", "9");
  apply_setting(c, "h_robust", "0.1");
  apply_setting(c, "rom.a", "indices:1,2");
  apply_setting(c, "synth_preset", "custom");
  apply_setting(c, "synth.mode.W", "-0.01 0.5 1 0.25 phase_ramp 0.3");
  const std::string text = echo_config(c);
  EXPECT_EQ(text.rfind("# kdmd config, schema_version 1\n", 0), 0u);
  const RunConfig back = parse_config(text);
  EXPECT_EQ(echo_config(back), text);
  EXPECT_EQ(back.h_robust, 0.1);
  ASSERT_EQ(back.synth_modes.size(), 1u);
  EXPECT_EQ(back.synth_modes[0].profile, ProfileKind::phase_ramp);
}

TEST(Config, ResolveOptions) {
  OracleSpec spec;
  spec.dim = 40;
  spec.count = 60;
  spec.modes = {kdmd_test::mode(0.0, 1.0), kdmd_test::mode(kdmd::cplx(0.0, 0.5), 0.5)};
  const SnapshotMatrix x = generate(spec).snapshots;
  RunConfig c;
  EXPECT_EQ(data_rank(x, false), 3);
  DmdOptions o = resolve_options(c, x);
  EXPECT_EQ(o.rank, 3);
  EXPECT_TRUE(o.use_tlsq);
  EXPECT_EQ(o.svd_mode, SvdMode::high_accuracy);
  EXPECT_EQ(resolve_horizon(c, x), 59.0);
  c.rank = 2;
  c.horizon = 10.0;
  EXPECT_EQ(resolve_options(c, x).rank, 2);
  EXPECT_EQ(resolve_horizon(c, x), 10.0);
}

TEST(Config, SynthSpecCustom) {
  RunConfig c;
  apply_setting(c, "synth_preset", "custom");
  apply_setting(c, "synth_dim", "8");
  apply_setting(c, "synth.mode.D", "-0.1 0 2 3.141592653589793");
  apply_setting(c, "synth.mode.W", "0 0.5 1 0");
  const OracleSpec s = synth_spec(c);
  ASSERT_EQ(s.modes.size(), 2u);
  EXPECT_EQ(s.modes[0].b, cplx(-2.0, 0.0));
  EXPECT_EQ(s.modes[1].gamma, cplx(0.0, 0.5));
  EXPECT_NO_THROW(generate(s));
  RunConfig empty;
  apply_setting(empty, "synth_preset", "custom");
  EXPECT_THROW(synth_spec(empty), InvalidArgument);
  EXPECT_EQ(synth_spec(RunConfig{}).modes.size(), 9u);
}
