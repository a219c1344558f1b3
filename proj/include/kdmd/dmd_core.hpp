#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kdmd/field_io.hpp"

namespace kdmd {

enum class SvdMode {
  standard,       // divide-and-conquer bidiagonal SVD
  high_accuracy,  // QR-preconditioned one-sided Jacobi; small singular values to high relative accuracy
};

struct TruncatedSvd {
  Eigen::MatrixXd U;        // rows x r, orthonormal columns
  Eigen::VectorXd sigma;    // r values, descending
  Eigen::MatrixXd V;        // cols x r, orthonormal columns
  Eigen::VectorXd spectrum; // every singular value of the input, descending
};

struct FirstSnapshotFit {};
struct MultiSnapshotFit {
  int count = 10;  // evenly spaced indices including 0 and N-1
};
using CoefficientFit = std::variant<FirstSnapshotFit, MultiSnapshotFit>;

struct DmdOptions {
  int rank = 1;
  bool use_tlsq = false;
  std::optional<int> tlsq_rank;  // defaults to rank
  bool normalize_columns = false;
  bool remove_mean = false;
  CoefficientFit b_fit = FirstSnapshotFit{};
  SvdMode svd_mode = SvdMode::standard;

  /// Plain exact DMD: no preprocessing, first-snapshot fit.
  static DmdOptions exact(int r);
  /// Normalization, TLSQ projection, high-accuracy SVD and a multi-snapshot fit.
  static DmdOptions modified(int r, int fit_count = 10);
};

std::string describe(const CoefficientFit& fit);
std::string describe(SvdMode mode);
CoefficientFit parse_fit(const std::string& text);
SvdMode parse_svd_mode(const std::string& text);

struct DmdResult {
  Eigen::MatrixXcd modes;            // D x r, unit columns, largest entry real positive
  Eigen::VectorXcd mu;               // discrete eigenvalues
  Eigen::VectorXcd gamma;            // ln(mu) / dt, principal branch
  Eigen::VectorXcd b;                // coefficients against the original snapshots
  Eigen::VectorXd singular_values;   // full spectrum of the (projected) X1
  Eigen::VectorXd residuals;         // |K w - mu w| for unit w
  std::optional<Eigen::VectorXd> mean_mode;  // set when the temporal mean was removed
  DmdOptions options;
  double dt = 1.0;
  double t0 = 0.0;

  Eigen::Index rank() const { return mu.size(); }
};

struct SnapshotPair {
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;
};

/// X1 = columns 0..N-2, X2 = columns 1..N-1.
SnapshotPair split_snapshots(const Eigen::MatrixXd& x);

struct NormalizedPair {
  Eigen::MatrixXd x1;
  Eigen::MatrixXd x2;
  Eigen::VectorXd scales;
};

/// Divides column k of both matrices by |X1(:, k)|.
NormalizedPair column_normalize(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2);

/// Projects both matrices onto the leading right singular vectors of [X1; X2].
SnapshotPair tlsq_project(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, int rank,
                          SvdMode mode = SvdMode::high_accuracy);

TruncatedSvd truncated_svd(const Eigen::MatrixXd& a, int r, SvdMode mode);

/// Number of singular values above max(rows, cols) * eps * sigma_max.
int numerical_rank(const Eigen::VectorXd& spectrum, Eigen::Index rows, Eigen::Index cols);

/// Eigenvalues, exact modes and diagnostics of the reduced operator for one
/// snapshot pair; no coefficient fit. Modes are unit-norm with the phase
/// convention applied, in solver order.
struct PairDecomposition {
  Eigen::MatrixXcd modes;
  Eigen::VectorXcd mu;
  Eigen::VectorXd singular_values;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd reduced_operator;
};

/// Runs normalization/TLSQ (per options), the truncated SVD, the reduced
/// operator and its eigendecomposition on an already split pair.
PairDecomposition decompose_pair(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, const DmdOptions& opts);

DmdResult exact_dmd(const SnapshotMatrix& x, const DmdOptions& opts);

Eigen::VectorXcd fit_coefficients_first(const Eigen::MatrixXcd& modes, const Eigen::VectorXd& x0);

Eigen::VectorXcd fit_coefficients_multi(const Eigen::MatrixXcd& modes, const Eigen::VectorXcd& mu,
                                        const Eigen::MatrixXd& x, std::span<const int> subset);

/// `count` evenly spaced snapshot indices over [0, n-1], always including both ends.
std::vector<int> spread_indices(int n, int count);

/// Column t is sum_k modes_k mu_k^steps[t] b_k, plus the mean mode when present.
/// Throws NumericalError when the modes are conjugate-closed but the imaginary
/// residue exceeds 1e-10 of the column norm.
Eigen::MatrixXd reconstruct(const DmdResult& result, std::span<const long> steps);

Eigen::MatrixXd reconstruct_modes(const Eigen::MatrixXcd& modes, const Eigen::VectorXcd& mu,
                                  const Eigen::VectorXcd& b, std::span<const long> steps,
                                  const std::optional<Eigen::VectorXd>& mean_mode = std::nullopt);

/// Scales a vector so its largest-magnitude entry (first on ties) is real and positive.
void fix_phase(Eigen::Ref<Eigen::VectorXcd> v);

}  // namespace kdmd
