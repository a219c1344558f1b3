#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdmd/dmd_core.hpp"
#include "kdmd/field_io.hpp"
#include "kdmd/spectrum.hpp"

namespace kdmd {

enum class Execution { serial, parallel };

/// Time-RMS norm of b e^{gamma t} over [0, T]:
/// |b| sqrt((e^{2 sigma_r T} - 1) / (2 sigma_r T)), and |b| when |sigma_r T| < 1e-8.
double rms_contribution(cplx b, cplx gamma, double horizon);

/// rms_contribution with |b| scaled by the share of |mode| carried on `rows`.
double component_rms(std::span<const cplx> mode, std::span<const std::size_t> rows, cplx b, cplx gamma,
                     double horizon);

/// A mode is persistent unless e^{sigma_r T} < factor.
bool persistence_filter(cplx gamma, double horizon, double factor = 0.1);

/// The (negative) half-life below which modes stop being persistent: -T ln2 / ln(1/factor).
double persistence_boundary_half_life(double horizon, double factor = 0.1);

/// Gaussian mixture over the complex plane, normalized to unit mass:
/// d(z) = sum_k w_k exp(-|z - p_k|^2 / h^2) / (sum_k w_k * pi * h^2).
class KdeDensity {
 public:
  KdeDensity(std::vector<cplx> points, std::vector<double> weights, double h);
  KdeDensity(std::vector<cplx> points, double h) : KdeDensity(std::move(points), {}, h) {}

  const std::vector<cplx>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  double bandwidth() const { return h_; }
  double normalization() const { return z_; }

  double unnormalized(cplx z) const;
  double operator()(cplx z) const { return unnormalized(z) / z_; }
  std::vector<double> evaluate(std::span<const cplx> queries, Execution exec = Execution::parallel) const;

 private:
  std::vector<cplx> points_;
  std::vector<double> weights_;  // empty = unit weights
  double h_;
  double z_;
};

double kde_eval(const KdeDensity& density, cplx z);

/// Weighted eigenvalue density, points mu_k with weights E_k.
KdeDensity energy_density(std::span<const cplx> mus, std::span<const double> rms_weights, double h = 2e-3);

/// Rectangular lattice of density values; node (ire, iim) sits at
/// re0 + ire*step + i (im0 + iim*step). values are stored row-major in im.
struct KdeGrid {
  double re0 = 0.0, im0 = 0.0, step = 0.0;
  std::size_t nre = 0, nim = 0;
  std::vector<double> values;

  cplx node(std::size_t ire, std::size_t iim) const {
    return {re0 + static_cast<double>(ire) * step, im0 + static_cast<double>(iim) * step};
  }
  double at(std::size_t ire, std::size_t iim) const { return values[iim * nre + ire]; }
  /// CSV with header `re,im,value`.
  std::string csv() const;
};

/// Lattice with the given step covering [lo, hi] in both axes.
KdeGrid kde_raster(const KdeDensity& density, cplx lo, cplx hi, double step, Execution exec = Execution::parallel);

struct LooTrial {
  int omitted = 0;              // column index removed from both X1 and X2
  std::vector<cplx> mus;        // sorted by |mu| descending, then arg ascending
};

struct LeaveOneOutResult {
  std::vector<LooTrial> trials;
  std::vector<cplx> base;       // eigenvalues of the full-data run
  std::uint64_t seed = 0;
  int rank = 0;

  std::vector<cplx> pooled() const;
};

/// Omitted indices for `trials` trials over `columns` snapshot pairs: without
/// replacement until every column has been used once, then a fresh permutation.
std::vector<int> draw_omitted_columns(int columns, int trials, std::uint64_t seed);

LeaveOneOutResult leave_one_out(const SnapshotMatrix& x, const DmdOptions& opts, int trials, std::uint64_t seed,
                                Execution exec = Execution::parallel);

/// Density of the pooled leave-one-out eigenvalues evaluated at each base eigenvalue.
std::vector<double> robustness_scores(std::span<const cplx> base_mus, const LeaveOneOutResult& loo, double h = 2e-3);

struct ClusterResult {
  std::vector<std::optional<int>> labels;  // per base eigenvalue, 1-based
  int cluster_count = 0;
  KdeGrid grid;
  double threshold = 0.0;
};

/// Clusters are 4-connected components of the superlevel set
/// {d_h >= level_fraction * max d_h} on a lattice of step h/4 with margin 3h.
/// Clusters are numbered by descending total member weight (`base_weights`,
/// unit weights when empty).
ClusterResult cluster_eigenvalues(std::span<const cplx> pooled, std::span<const cplx> base,
                                  std::span<const double> base_weights, double h = 2.5e-2,
                                  double level_fraction = 0.1, Execution exec = Execution::parallel);

/// Spectrum table of a DMD result over the horizon T (hours). `vertical_rows`
/// selects the stacked rows used for the restricted RMS (none = column left empty).
std::vector<ModeInfo> build_mode_table(const DmdResult& result, double horizon,
                                       std::optional<std::span<const std::size_t>> vertical_rows = std::nullopt);

void apply_robustness(std::vector<ModeInfo>& table, std::span<const double> scores);
void apply_clusters(std::vector<ModeInfo>& table, const ClusterResult& clusters);

}  // namespace kdmd
