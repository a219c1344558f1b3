#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "kdmd/dmd_core.hpp"
#include "kdmd/errors.hpp"
#include "kdmd/modal_analysis.hpp"
#include "kdmd/rom.hpp"
#include "kdmd/synth_oracle.hpp"
#include "support.hpp"

using namespace kdmd;
using kdmd_test::mode;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

OracleSpec pair_spec(std::vector<OracleMode> modes, std::uint64_t seed) {
  OracleSpec spec;
  spec.dim = 80;
  spec.count = 144;
  spec.seed = seed;
  spec.modes = std::move(modes);
  return spec;
}

// Time-summed squared norm of one orthogonal-profile conjugate pair: sum_n 2 |b|^2 e^{2 sigma t_n}.
double pair_energy(const OracleMode& m, const OracleSpec& spec) {
  double s = 0.0;
  for (Eigen::Index n = 0; n < spec.count; ++n)
    s += 2.0 * std::norm(m.b) * std::exp(2.0 * m.gamma.real() * (spec.t0 + spec.dt * static_cast<double>(n)));
  return s;
}

double summed_squared_error(const ErrorCurve& c) {
  double s = 0.0;
  for (double e : c.abs_error) s += e * e;
  return s;
}

std::vector<ModeInfo> constructed_table() {
  // Eight modes: two real, three conjugate pairs.
  std::vector<ModeInfo> t(8);
  const double rms[] = {5.0, 3.0, 3.0, 0.5, 2.0, 2.0, 0.1, 0.1};
  const double rob[] = {900.0, 800.0, 800.0, 10.0, 700.0, 700.0, 5.0, 5.0};
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k].index = static_cast<int>(k) + 1;
    t[k].rms = rms[k];
    t[k].robustness = rob[k];
    t[k].gamma = cplx(-0.001, 0.0);
  }
  auto pair = [&](int a, int b) {
    t[static_cast<std::size_t>(a - 1)].conj_partner = b;
    t[static_cast<std::size_t>(b - 1)].conj_partner = a;
  };
  pair(2, 3);
  pair(5, 6);
  pair(7, 8);
  t[0].is_real = t[3].is_real = true;
  t[6].gamma = t[7].gamma = cplx(-0.2, 0.5);
  return t;
}

}  // namespace

TEST(Selection, Parse) {
  const auto all = parse_selection("all", 143.0);
  ASSERT_TRUE(std::holds_alternative<BoxCriteria>(all));
  EXPECT_FALSE(std::get<BoxCriteria>(all).persistent_only);
  const auto p = std::get<BoxCriteria>(parse_selection("persistent", 143.0, 0.2));
  EXPECT_TRUE(p.persistent_only);
  EXPECT_EQ(p.persistence_horizon, 143.0);
  EXPECT_EQ(p.persistence_factor, 0.2);
  const auto e = std::get<ExplicitModes>(parse_selection("indices:1,4,2", 143.0));
  EXPECT_EQ(e.indices, (std::vector<int>{1, 4, 2}));
  const auto b = std::get<BoxCriteria>(parse_selection("box:rms_min=0.5,rob_min=100,persistent", 143.0));
  EXPECT_EQ(b.rms_min, 0.5);
  EXPECT_EQ(b.robustness_min, 100.0);
  EXPECT_FALSE(b.rms_max);
  EXPECT_TRUE(b.persistent_only);
  EXPECT_EQ(describe(RomSelection(b)), "box:rms_min=0.5,rob_min=100,persistent");
  EXPECT_EQ(describe(RomSelection(e)), "indices:1,4,2");
  for (const char* bad : {"some", "indices:", "indices:1.5", "box:rms_min", "box:foo=1", "box:rms_min=x"})
    EXPECT_THROW(parse_selection(bad, 143.0), InvalidArgument) << bad;
}

TEST(Selection, BoxAddsPartners) {
  const auto t = constructed_table();
  BoxCriteria c;
  c.rms_min = 1.0;
  c.robustness_min = 100.0;
  EXPECT_EQ(select_modes(t, c), (std::vector<int>{1, 2, 3, 5, 6}));
  // Partner of a selected mode joins even when it falls outside the box.
  auto skew = t;
  skew[2].rms = 0.01;
  EXPECT_EQ(select_modes(skew, c), (std::vector<int>{1, 2, 3, 5, 6}));
  BoxCriteria inclusive;
  inclusive.rms_min = 0.5;
  inclusive.rms_max = 0.5;
  EXPECT_EQ(select_modes(t, inclusive), (std::vector<int>{4}));
}

TEST(Selection, PersistenceAndErrors) {
  const auto t = constructed_table();
  BoxCriteria p;
  p.persistent_only = true;
  p.persistence_horizon = 143.0;
  EXPECT_EQ(select_modes(t, p), (std::vector<int>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(select_modes(t, ExplicitModes{{7}}), (std::vector<int>{7, 8}));
  EXPECT_THROW(select_modes(t, ExplicitModes{{9}}), InvalidArgument);
  BoxCriteria empty;
  empty.rms_min = 100.0;
  EXPECT_THROW(select_modes(t, empty), InvalidArgument);
  auto unscored = t;
  for (auto& m : unscored) m.robustness.reset();
  BoxCriteria rob;
  rob.robustness_min = 1.0;
  EXPECT_THROW(select_modes(unscored, rob), InvalidArgument);
}

TEST(Rom, AllModesReproduceData) {
  const OracleSpec spec = pair_spec(tidal_modes(3), 3);
  const OracleData o = generate(spec);
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(17));
  std::vector<int> idx(17);
  for (int k = 0; k < 17; ++k) idx[static_cast<std::size_t>(k)] = k + 1;
  const RomModel rom = build_rom(r, idx, "all");
  EXPECT_EQ(rom.dimension(), 17);
  const ErrorCurve c = error_curve(o.snapshots, rom);
  EXPECT_LT(*std::max_element(c.rel_error.begin(), c.rel_error.end()), 1e-8);
  EXPECT_EQ(c.csv().substr(0, c.csv().find('\n')), "n,t_hours,rom_norm,rel_error");
}

TEST(Rom, DroppedPairCostsItsEnergy) {
  const std::vector<OracleMode> gens{mode(0.0, 1.0), mode(cplx(-0.002, kTwoPi / 12.42), 0.9),
                                     mode(cplx(0.0, kTwoPi / 24.0), 0.5), mode(cplx(-0.004, kTwoPi / 8.0), 0.3),
                                     mode(cplx(0.001, kTwoPi / 6.0), 0.15)};
  const OracleSpec spec = pair_spec(gens, 8);
  const OracleData o = generate(spec);
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(9));
  const auto table = build_mode_table(r, static_cast<double>(spec.count - 1));
  for (std::size_t g = 1; g < gens.size(); ++g) {
    const double w = gens[g].gamma.imag();
    std::vector<int> keep;
    for (const auto& m : table)
      if (std::abs(std::abs(m.gamma.imag()) - w) > 1e-6) keep.push_back(m.index);
    ASSERT_EQ(keep.size(), 7u);
    const ErrorCurve c = error_curve(o.snapshots, build_rom(r, keep));
    const double expected = pair_energy(gens[g], spec);
    EXPECT_LT(std::abs(summed_squared_error(c) - expected) / expected, 0.05) << "pair " << g;
  }
}

TEST(Rom, PersistentOnlyTracksTransient) {
  const double sigma = std::log(0.5) / 10.0;  // 10 h half-life
  const std::vector<OracleMode> gens{mode(cplx(0.0, kTwoPi / 12.42), 1.0), mode(cplx(sigma, kTwoPi / 25.8), 0.7)};
  const OracleSpec spec = pair_spec(gens, 12);
  const OracleData o = generate(spec);
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(4));
  const double horizon = static_cast<double>(spec.count - 1);
  const auto table = build_mode_table(r, horizon);
  const auto idx = select_modes(table, parse_selection("persistent", horizon));
  ASSERT_EQ(idx.size(), 2u);
  const ErrorCurve c = error_curve(o.snapshots, build_rom(r, idx));
  const double e0 = c.abs_error[0];
  EXPECT_NEAR(e0, std::sqrt(2.0) * 0.7, 1e-8);
  for (std::size_t n = 1; n < c.abs_error.size(); ++n) {
    const double envelope = std::exp(sigma * static_cast<double>(n));
    if (envelope < 1e-6) break;
    EXPECT_NEAR(c.abs_error[n] / e0, envelope, 1e-6 * envelope) << "n = " << n;
  }
}

TEST(Rom, RejectsOpenOrInvalidSets) {
  const OracleData o = generate(pair_spec({mode(0.0, 1.0), mode(cplx(0.0, 0.5), 0.5)}, 1));
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(3));
  const auto table = build_mode_table(r, 143.0);
  int pair_member = 0;
  for (const auto& m : table)
    if (m.conj_partner) pair_member = m.index;
  ASSERT_GT(pair_member, 0);
  EXPECT_THROW(build_rom(r, std::vector<int>{pair_member}), InvalidArgument);
  EXPECT_THROW(build_rom(r, std::vector<int>{}), InvalidArgument);
  EXPECT_THROW(build_rom(r, std::vector<int>{4}), InvalidArgument);
  const RomModel rom = build_rom(r, std::vector<int>{3, 1, 2});
  EXPECT_EQ(rom.indices(), (std::vector<int>{1, 2, 3}));
  SnapshotMatrix other(o.snapshots.data, 2.0);
  EXPECT_THROW(error_curve(other, rom), InvalidArgument);
}

TEST(Rom, AsResultKeepsSourceDiagnostics) {
  const OracleData o = generate(pair_spec({mode(0.0, 1.0), mode(cplx(0.0, 0.5), 0.5)}, 2));
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(3));
  const auto table = build_mode_table(r, 143.0);
  std::vector<int> pair;
  for (const auto& m : table)
    if (m.conj_partner) pair.push_back(m.index);
  const DmdResult sub = build_rom(r, pair).as_result(r);
  ASSERT_EQ(sub.rank(), 2);
  for (Eigen::Index k = 0; k < 2; ++k) {
    const auto src = pair[static_cast<std::size_t>(k)] - 1;
    EXPECT_EQ(sub.mu[k], r.mu[src]);
    EXPECT_EQ(sub.gamma[k], r.gamma[src]);
    EXPECT_EQ(sub.residuals[k], r.residuals[src]);
  }
}
