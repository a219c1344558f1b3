#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "kdmd/dmd_core.hpp"
#include "kdmd/errors.hpp"
#include "kdmd/modal_analysis.hpp"
#include "kdmd/synth_oracle.hpp"
#include "support.hpp"

using namespace kdmd;

namespace {

// (1/T) int_0^T |b e^{gamma t}|^2 dt by the trapezoid rule, square-rooted.
double quadrature_rms(cplx b, cplx gamma, double horizon, int panels = 100000) {
  const double h = horizon / panels;
  auto f = [&](double t) { return std::norm(b * std::exp(gamma * t)); };
  double s = 0.5 * (f(0.0) + f(horizon));
  for (int k = 1; k < panels; ++k) s += f(k * h);
  return std::sqrt(s * h / horizon);
}

double riemann_mass(const KdeDensity& d, cplx lo, cplx hi) {
  const double step = d.bandwidth() / 4.0;
  const KdeGrid g = kde_raster(d, lo, hi, step);
  double s = 0.0;
  for (double v : g.values) s += v;
  return s * step * step;
}

// Constant mode plus well-separated oscillations, noise-free.
OracleData separated_oracle(std::uint64_t seed) {
  OracleSpec spec;
  spec.dim = 60;
  spec.count = 100;
  spec.seed = seed;
  spec.modes = {kdmd_test::mode(0.0, 1.0), kdmd_test::mode(cplx(0.0, 2 * std::numbers::pi / 24.0), 0.8),
                kdmd_test::mode(cplx(0.0, 2 * std::numbers::pi / 12.0), 0.5),
                kdmd_test::mode(cplx(0.0, 2 * std::numbers::pi / 6.0), 0.3)};
  return generate(spec);
}

}  // namespace

TEST(Rms, ClosedFormMatchesQuadrature) {
  const double horizon = 143.0;
  const cplx b = std::polar(1.7, 0.4);
  for (double x : {-5.0, -1.0, -1e-10, 0.0, 1e-10, 1.0, 5.0}) {
    const cplx gamma(x / horizon, 0.3);
    const double e = rms_contribution(b, gamma, horizon);
    const double q = quadrature_rms(b, gamma, horizon);
    EXPECT_LT(std::abs(e - q) / q, 1e-6) << "sigma T = " << x;
  }
  EXPECT_EQ(rms_contribution(b, cplx(0.0, 0.5), horizon), std::abs(b));
}

TEST(Rms, DirectEvaluation) {
  EXPECT_NEAR(rms_contribution(1.0, std::numbers::ln2, 1.0), std::sqrt(3.0 / (2.0 * std::numbers::ln2)), 1e-14);
  EXPECT_THROW(rms_contribution(1.0, 0.0, 0.0), InvalidArgument);
}

TEST(Rms, ComponentShare) {
  const double horizon = 100.0;
  const cplx b(2.0, 1.0), gamma(-0.01, 0.5);
  std::vector<cplx> mode(10, cplx(0.0, 0.0));
  // 10% of the squared norm on rows 8 and 9.
  for (int k = 0; k < 8; ++k) mode[static_cast<std::size_t>(k)] = std::sqrt(0.9 / 8.0);
  mode[8] = cplx(0.0, std::sqrt(0.05));
  mode[9] = std::sqrt(0.05);
  const std::vector<std::size_t> vertical{8, 9}, all{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, none_rows{0};
  const double e = rms_contribution(b, gamma, horizon);
  EXPECT_NEAR(component_rms(mode, vertical, b, gamma, horizon) / e, std::sqrt(0.1), 1e-10);
  EXPECT_EQ(component_rms(mode, all, b, gamma, horizon), e);
  mode[0] = 0.0;
  EXPECT_EQ(component_rms(mode, none_rows, b, gamma, horizon), 0.0);
  EXPECT_THROW(component_rms(mode, {}, b, gamma, horizon), InvalidArgument);
}

TEST(Persistence, BoundaryHalfLife) {
  const double horizon = 143.0;
  const double boundary = persistence_boundary_half_life(horizon);
  EXPECT_NEAR(boundary, -43.05, 0.01);
  EXPECT_NEAR(boundary, -143.0 * std::numbers::ln2 / std::numbers::ln10, 1e-12);
  const double edge = std::log(0.1) / horizon;
  EXPECT_FALSE(persistence_filter(cplx(edge * (1 + 1e-9), 0.0), horizon));
  EXPECT_TRUE(persistence_filter(cplx(edge * (1 - 1e-9), 0.0), horizon));
  EXPECT_TRUE(persistence_filter(cplx(std::log(0.5) / horizon, 1.0), horizon));
  EXPECT_TRUE(persistence_filter(cplx(0.0, 1.0), horizon));
  EXPECT_TRUE(persistence_filter(cplx(0.3, 0.0), horizon));
  EXPECT_THROW(persistence_filter(0.0, 143.0, 1.5), InvalidArgument);
}

TEST(Kde, PeakAndMass) {
  const double h = 2e-3;
  const KdeDensity single({cplx(0.9, 0.1)}, h);
  EXPECT_NEAR(single(cplx(0.9, 0.1)), 1.0 / (std::numbers::pi * h * h), 1e-6);
  const KdeDensity mix({cplx(0.9, 0.1), cplx(0.905, 0.1), cplx(0.5, -0.3)}, {1.0, 2.0, 0.5}, h);
  EXPECT_NEAR(riemann_mass(mix, {0.5 - 8 * h, -0.3 - 8 * h}, {0.905 + 8 * h, 0.1 + 8 * h}), 1.0, 1e-3);
  EXPECT_LT(single(cplx(1.9, 0.1)), 1e-30);
  EXPECT_THROW(KdeDensity({cplx(0.0, 0.0)}, 0.0), InvalidArgument);
}

TEST(Kde, DuplicationScalesUnnormalized) {
  const double h = 2e-3;
  const cplx p(0.7, -0.2), q(0.7012, -0.1991);
  for (int m : {2, 3, 7, 30}) {
    const KdeDensity one({p}, h), many(std::vector<cplx>(static_cast<std::size_t>(m), p), h);
    EXPECT_EQ(many.unnormalized(q), m * one.unnormalized(q));
    EXPECT_DOUBLE_EQ(many(q), one(q));
  }
}

TEST(Kde, WeightsAndPermutation) {
  const std::vector<cplx> pts{{0.1, 0.2}, {0.11, 0.2}, {0.3, 0.0}};
  const KdeDensity a(pts, {1.0, 2.0, 3.0}, 0.02), b(pts, {2.0, 4.0, 6.0}, 0.02);
  const KdeDensity c({pts[2], pts[0], pts[1]}, {3.0, 1.0, 2.0}, 0.02);
  const cplx z(0.105, 0.21);
  EXPECT_NEAR(a(z), b(z), 1e-12 * a(z));
  EXPECT_NEAR(a(z), c(z), 1e-12 * a(z));
  EXPECT_THROW(energy_density(pts, std::vector<double>{1.0, -1.0, 1.0}), InvalidArgument);
}

TEST(Kde, SerialAndParallelRastersAgree) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<cplx> pts;
  for (int k = 0; k < 400; ++k) pts.emplace_back(0.9 + g(rng), g(rng));
  const KdeDensity d(pts, 2.5e-2);
  const KdeGrid s = kde_raster(d, {0.6, -0.3}, {1.2, 0.3}, 2.5e-2 / 4, Execution::serial);
  const KdeGrid p = kde_raster(d, {0.6, -0.3}, {1.2, 0.3}, 2.5e-2 / 4, Execution::parallel);
  ASSERT_EQ(s.values.size(), p.values.size());
  EXPECT_TRUE(s.values == p.values);
}

TEST(Kde, EnergyDensityPeaksAtHeavyMode) {
  const std::vector<cplx> mus{std::polar(1.0, 2 * std::numbers::pi / 12.42), std::polar(1.0, 2 * std::numbers::pi / 25.8),
                              std::polar(0.99, 0.0)};
  const KdeDensity d = energy_density(mus, std::vector<double>{5.0, 0.5, 0.3});
  const KdeGrid g = kde_raster(d, {0.8, -0.1}, {1.05, 0.6}, d.bandwidth() / 4);
  const auto top = std::max_element(g.values.begin(), g.values.end()) - g.values.begin();
  const cplx node = g.node(static_cast<std::size_t>(top) % g.nre, static_cast<std::size_t>(top) / g.nre);
  EXPECT_LT(std::abs(node - mus[0]), d.bandwidth());
}

TEST(Cluster, TwoSeparatedGroups) {
  const double h = 2.5e-2;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, h / 4);
  const cplx ca(0.9, 0.2), cb = ca + cplx(10 * h, 0.0);
  std::vector<cplx> pooled;
  for (int k = 0; k < 60; ++k) {
    pooled.push_back(ca + cplx(g(rng), g(rng)));
    pooled.push_back(cb + cplx(g(rng), g(rng)));
  }
  const std::vector<cplx> base{ca, cb};
  const ClusterResult r = cluster_eigenvalues(pooled, base, std::vector<double>{1.0, 3.0}, h);
  EXPECT_EQ(r.cluster_count, 2);
  EXPECT_EQ(r.labels[0], 2);
  EXPECT_EQ(r.labels[1], 1);

  std::vector<cplx> shuffled = pooled;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const ClusterResult s = cluster_eigenvalues(shuffled, base, std::vector<double>{1.0, 3.0}, h);
  EXPECT_TRUE(s.labels == r.labels);
  EXPECT_TRUE(s.grid.values == r.grid.values);
}

TEST(Cluster, SingleAndOutlier) {
  const ClusterResult one = cluster_eigenvalues(std::vector<cplx>{cplx(0.5, 0.5)}, std::vector<cplx>{cplx(0.5, 0.5)}, {});
  EXPECT_EQ(one.cluster_count, 1);
  EXPECT_EQ(one.labels[0], 1);

  std::vector<cplx> pooled(50, cplx(0.9, 0.0));
  pooled.push_back(cplx(0.5, 0.0));
  const std::vector<cplx> base{cplx(0.9, 0.0), cplx(0.5, 0.0)};
  const ClusterResult r = cluster_eigenvalues(pooled, base, {}, 2.5e-2, 0.1);
  EXPECT_EQ(r.labels[0], 1);
  EXPECT_FALSE(r.labels[1]);
  EXPECT_THROW(cluster_eigenvalues(std::vector<cplx>{}, base, {}), InvalidArgument);
}

TEST(LeaveOneOut, OmittedColumnsWithoutReplacement) {
  const auto a = draw_omitted_columns(143, 30, 7);
  ASSERT_EQ(a.size(), 30u);
  std::vector<int> s = a;
  std::sort(s.begin(), s.end());
  EXPECT_TRUE(std::adjacent_find(s.begin(), s.end()) == s.end());
  EXPECT_TRUE(a == draw_omitted_columns(143, 30, 7));
  EXPECT_FALSE(a == draw_omitted_columns(143, 30, 8));
  const auto b = draw_omitted_columns(5, 12, 1);
  for (int c = 0; c < 5; ++c) EXPECT_GE(std::count(b.begin(), b.end(), c), 2);
  EXPECT_THROW(draw_omitted_columns(5, 0, 1), InvalidArgument);
}

TEST(LeaveOneOut, NoiselessTrialReproducesBase) {
  const OracleData o = separated_oracle(3);
  const auto opts = DmdOptions::modified(7);
  const auto loo = leave_one_out(o.snapshots, opts, 1, 9);
  ASSERT_EQ(loo.trials.size(), 1u);
  const auto cmp = compare_spectra(loo.trials[0].mus, loo.base);
  EXPECT_EQ(cmp.matches.size(), loo.base.size());
  EXPECT_TRUE(cmp.unmatched_estimated.empty());
  EXPECT_LT(cmp.max_error, 1e-8);
  EXPECT_THROW(leave_one_out(o.snapshots, opts, 0, 9), InvalidArgument);
}

TEST(LeaveOneOut, DeterministicAcrossExecution) {
  OracleData o = separated_oracle(4);
  const auto opts = DmdOptions::modified(7);
  std::mt19937_64 rng(2);
  o.snapshots.data += 1e-3 * kdmd_test::gaussian_matrix(o.snapshots.dim(), o.snapshots.count(), rng);
  const auto a = leave_one_out(o.snapshots, opts, 12, 21, Execution::parallel);
  const auto b = leave_one_out(o.snapshots, opts, 12, 21, Execution::serial);
  ASSERT_EQ(a.trials.size(), 12u);
  for (std::size_t t = 0; t < a.trials.size(); ++t) {
    EXPECT_EQ(a.trials[t].omitted, b.trials[t].omitted);
    EXPECT_TRUE(a.trials[t].mus == b.trials[t].mus);
  }
  EXPECT_TRUE(a.pooled() == b.pooled());
}

TEST(Robustness, NoiselessScoresAgree) {
  const OracleData o = separated_oracle(5);
  const auto loo = leave_one_out(o.snapshots, DmdOptions::modified(7), 30, 1);
  const auto d = robustness_scores(loo.base, loo);
  const double lo = *std::min_element(d.begin(), d.end()), hi = *std::max_element(d.begin(), d.end());
  EXPECT_LT((hi - lo) / hi, 0.01);
  const KdeDensity pooled(loo.pooled(), 2e-3);
  EXPECT_GT(lo, pooled(loo.base[0] + cplx(5e-3, 0.0)));
}

TEST(Robustness, ScatteredEigenvalueScoresLower) {
  const double h = 2e-3;
  const cplx fixed(0.95, 0.3), scattered(0.8, -0.2);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LeaveOneOutResult loo;
  for (int t = 0; t < 30; ++t) {
    const double r = 10 * h * std::sqrt(u(rng)), a = 2 * std::numbers::pi * u(rng);
    loo.trials.push_back({t, {fixed, scattered + std::polar(r, a)}});
  }
  const std::vector<cplx> base{fixed, scattered};
  const auto d = robustness_scores(base, loo, h);
  EXPECT_GT(d[0], d[1]);
  EXPECT_LT(robustness_scores(std::vector<cplx>{cplx(2.0, 0.3)}, loo, h)[0], 1e-30);
}

TEST(ModeTable, FromOracle) {
  const OracleData o = separated_oracle(6);
  const DmdResult r = exact_dmd(o.snapshots, DmdOptions::modified(7));
  const double horizon = 99.0;
  const auto table = build_mode_table(r, horizon);
  ASSERT_EQ(table.size(), 7u);
  int pairs = 0;
  for (const auto& m : table) {
    EXPECT_NEAR(m.rms, rms_contribution(r.b[m.index - 1], m.gamma, horizon), 0.0);
    if (m.conj_partner) {
      ++pairs;
      EXPECT_EQ(table[static_cast<std::size_t>(*m.conj_partner - 1)].conj_partner, m.index);
    }
  }
  EXPECT_EQ(pairs, 6);
  EXPECT_FALSE(table[0].rms_vertical);
}
