#include "kdmd/dmd_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/kernels.hpp"
#include "kdmd/spectrum.hpp"

namespace kdmd {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Eigenvector matrices worse conditioned than this are treated as defective.
constexpr double kMaxEigvecCondition = 1e12;
constexpr double kCoincidentEigenvalue = 1e-6;
constexpr double kParallelEigenvector = 1e-10;

std::string num(double v) { return format_g17(v); }

}  // namespace

DmdOptions DmdOptions::exact(int r) {
  DmdOptions o;
  o.rank = r;
  return o;
}

DmdOptions DmdOptions::modified(int r, int fit_count) {
  DmdOptions o;
  o.rank = r;
  o.use_tlsq = true;
  o.normalize_columns = true;
  o.svd_mode = SvdMode::high_accuracy;
  o.b_fit = MultiSnapshotFit{fit_count};
  return o;
}

std::string describe(const CoefficientFit& fit) {
  if (const auto* m = std::get_if<MultiSnapshotFit>(&fit)) return "multi:" + std::to_string(m->count);
  return "first";
}

std::string describe(SvdMode mode) { return mode == SvdMode::standard ? "standard" : "high_accuracy"; }

CoefficientFit parse_fit(const std::string& text) {
  if (text == "first") return FirstSnapshotFit{};
  if (text.rfind("multi:", 0) == 0) {
    const std::string k = text.substr(6);
    if (!k.empty() && k.find_first_not_of("0123456789") == std::string::npos && k.size() < 9) {
      const int count = std::stoi(k);
      if (count >= 2) return MultiSnapshotFit{count};
    }
  }
  throw InvalidArgument("b fit must be 'first' or 'multi:<k>' with k >= 2, got '" + text + "'");
}

SvdMode parse_svd_mode(const std::string& text) {
  if (text == "standard") return SvdMode::standard;
  if (text == "high_accuracy") return SvdMode::high_accuracy;
  throw InvalidArgument("svd mode must be 'standard' or 'high_accuracy', got '" + text + "'");
}

SnapshotPair split_snapshots(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) throw InvalidArgument("splitting needs N >= 2 snapshots, got " + std::to_string(x.cols()));
  const Eigen::Index n = x.cols() - 1;
  return {x.leftCols(n), x.rightCols(n)};
}

NormalizedPair column_normalize(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) throw InvalidArgument("X1 and X2 shapes differ");
  NormalizedPair out{x1, x2, Eigen::VectorXd(x1.cols())};
  for (Eigen::Index k = 0; k < x1.cols(); ++k) {
    const double s = x1.col(k).norm();
    if (!(s > 0.0)) throw InvalidArgument("column " + std::to_string(k) + " of X1 is zero; cannot normalize");
    out.scales[k] = s;
    out.x1.col(k) /= s;
    out.x2.col(k) /= s;
  }
  return out;
}

TruncatedSvd truncated_svd(const Eigen::MatrixXd& a, int r, SvdMode mode) {
  const Eigen::Index maxr = std::min(a.rows(), a.cols());
  if (r < 1 || r > maxr)
    throw InvalidArgument("truncation rank " + std::to_string(r) + " outside [1, " + std::to_string(maxr) + "]");
  TruncatedSvd out;
  if (mode == SvdMode::high_accuracy) {
    Eigen::JacobiSVD<Eigen::MatrixXd, Eigen::ColPivHouseholderQRPreconditioner> svd(
        a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("Jacobi SVD did not converge");
    out.spectrum = svd.singularValues();
    out.U = svd.matrixU().leftCols(r);
    out.V = svd.matrixV().leftCols(r);
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("divide-and-conquer SVD did not converge");
    out.spectrum = svd.singularValues();
    out.U = svd.matrixU().leftCols(r);
    out.V = svd.matrixV().leftCols(r);
  }
  out.sigma = out.spectrum.head(r);
  return out;
}

int numerical_rank(const Eigen::VectorXd& spectrum, Eigen::Index rows, Eigen::Index cols) {
  if (spectrum.size() == 0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) * kEps * spectrum[0];
  int rank = 0;
  for (Eigen::Index k = 0; k < spectrum.size(); ++k)
    if (spectrum[k] > tol) ++rank;
  return rank;
}

SnapshotPair tlsq_project(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2, int rank, SvdMode mode) {
  if (x1.rows() != x2.rows() || x1.cols() != x2.cols()) throw InvalidArgument("X1 and X2 shapes differ");
  const Eigen::Index maxr = std::min(2 * x1.rows(), x1.cols());
  if (rank < 1 || rank > maxr)
    throw InvalidArgument("TLSQ rank " + std::to_string(rank) + " outside [1, " + std::to_string(maxr) + "]");
  Eigen::MatrixXd z(2 * x1.rows(), x1.cols());
  z.topRows(x1.rows()) = x1;
  z.bottomRows(x2.rows()) = x2;
  const TruncatedSvd svd = truncated_svd(z, rank, mode);
  return {x1 * svd.V, x2 * svd.V};
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index best = -1;
  double best_mag = 0.0;
  for (Eigen::Index d = 0; d < v.size(); ++d) {
    const double m = std::abs(v[d]);
    if (m > best_mag) {
      best_mag = m;
      best = d;
    }
  }
  if (best < 0) return;
  const cplx rot = std::conj(v[best]) / best_mag;
  v *= rot;
  v[best] = cplx(best_mag, 0.0);
}

PairDecomposition decompose_pair(const Eigen::MatrixXd& x1_in, const Eigen::MatrixXd& x2_in, const DmdOptions& opts) {
  const int r = opts.rank;
  if (r < 1) throw InvalidArgument("rank must be at least 1");

  Eigen::MatrixXd x1 = x1_in, x2 = x2_in;
  if (opts.normalize_columns) {
    auto np = column_normalize(x1, x2);
    x1 = std::move(np.x1);
    x2 = std::move(np.x2);
  }
  if (opts.use_tlsq) {
    const int tr = opts.tlsq_rank.value_or(r);
    if (tr < r) throw InvalidArgument("TLSQ rank " + std::to_string(tr) + " is below the truncation rank " + std::to_string(r));
    auto pr = tlsq_project(x1, x2, tr, opts.svd_mode);
    x1 = std::move(pr.x1);
    x2 = std::move(pr.x2);
  }

  const TruncatedSvd svd = truncated_svd(x1, r, opts.svd_mode);
  const int nrank = numerical_rank(svd.spectrum, x1.rows(), x1.cols());
  if (nrank < r)
    throw NumericalError("rank deficiency: requested r=" + std::to_string(r) + " but X1 has numerical rank " +
                         std::to_string(nrank) + " (sigma_r/sigma_1=" + num(svd.sigma[r - 1] / svd.sigma[0]) + ")");

  // B = X2 V_r Sigma_r^-1 ; K = U_r^T B
  const Eigen::MatrixXd b = x2 * svd.V * svd.sigma.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd k = svd.U.transpose() * b;

  Eigen::EigenSolver<Eigen::MatrixXd> es(k, true);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the reduced operator did not converge");
  const Eigen::VectorXcd mu = es.eigenvalues();
  Eigen::MatrixXcd w = es.eigenvectors();
  for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c).normalize();

  Eigen::BDCSVD<Eigen::MatrixXcd> wsvd(w);
  const auto& ws = wsvd.singularValues();
  const double cond = ws[ws.size() - 1] > 0.0 ? ws[0] / ws[ws.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxEigvecCondition))
    throw NumericalError("reduced operator is defective or nearly so: eigenvector condition estimate " + num(cond));
  // A rounded Jordan block splits into eigenvalues ~sqrt(eps) apart whose
  // eigenvectors are parallel to working precision.
  const double knorm = std::max(k.norm(), 1.0);
  for (Eigen::Index i = 0; i < w.cols(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      if (std::abs(mu[i] - mu[j]) <= kCoincidentEigenvalue * knorm &&
          std::abs(w.col(i).dot(w.col(j))) >= 1.0 - kParallelEigenvector)
        throw NumericalError("reduced operator is defective: eigenvalues " + std::to_string(i + 1) + " and " +
                             std::to_string(j + 1) + " coincide with parallel eigenvectors (condition estimate " +
                             num(cond) + ")");

  PairDecomposition out;
  out.mu = mu;
  out.singular_values = svd.spectrum;
  out.reduced_operator = k;
  out.residuals.resize(r);
  const Eigen::MatrixXcd kc = k.cast<cplx>();
  for (Eigen::Index c = 0; c < r; ++c) out.residuals[c] = (kc * w.col(c) - mu[c] * w.col(c)).norm();

  // Exact modes, real and imaginary parts separately so conjugate eigenvectors
  // map to exactly conjugate modes.
  const Eigen::MatrixXd phi_re = b * w.real();
  const Eigen::MatrixXd phi_im = b * w.imag();
  out.modes.resize(x1.rows(), r);
  out.modes.real() = phi_re;
  out.modes.imag() = phi_im;
  const double zero_tol = 1e-14 * k.norm();
  for (Eigen::Index c = 0; c < r; ++c) {
    double nrm = out.modes.col(c).norm();
    if (!(nrm > zero_tol)) {
      // mu ~ 0: the exact mode vanishes, fall back to the projected mode U_r w.
      out.modes.col(c).real() = svd.U * w.col(c).real();
      out.modes.col(c).imag() = svd.U * w.col(c).imag();
      nrm = out.modes.col(c).norm();
    }
    out.modes.col(c) /= nrm;
    fix_phase(out.modes.col(c));
  }
  return out;
}

std::vector<int> spread_indices(int n, int count) {
  if (n < 1) throw InvalidArgument("need at least one snapshot");
  if (count < 2 || count > n)
    throw InvalidArgument("multi-snapshot count " + std::to_string(count) + " outside [2, " + std::to_string(n) + "]");
  std::vector<int> idx;
  for (int i = 0; i < count; ++i) idx.push_back(static_cast<int>((static_cast<long>(i) * (n - 1) + (count - 1) / 2) / (count - 1)));
  return idx;
}

namespace {

Eigen::VectorXcd solve_full_rank(const Eigen::MatrixXcd& a, const Eigen::VectorXcd& rhs, const char* what) {
  // Tall systems are reduced to their r x r triangular factor first; R shares the singular values of A.
  const Eigen::Index r = a.cols();
  Eigen::MatrixXcd small;
  Eigen::VectorXcd small_rhs;
  if (a.rows() > r) {
    const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    small = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    small_rhs = (qr.householderQ().adjoint() * rhs).head(r);
  } else {
    small = a;
    small_rhs = rhs;
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  const double smin = s.size() ? s[s.size() - 1] : 0.0;
  const double tol = static_cast<double>(std::max(a.rows(), a.cols())) * kEps * smax;
  if (!(smin > tol))
    throw NumericalError(std::string(what) + ": system is rank deficient (smallest singular value " + num(smin) +
                         ", largest " + num(smax) + ")");
  return svd.solve(small_rhs);
}

}  // namespace

Eigen::VectorXcd fit_coefficients_first(const Eigen::MatrixXcd& modes, const Eigen::VectorXd& x0) {
  if (modes.rows() != x0.size()) throw InvalidArgument("mode and snapshot dimensions differ");
  return solve_full_rank(modes, x0.cast<cplx>(), "first-snapshot coefficient fit");
}

Eigen::VectorXcd fit_coefficients_multi(const Eigen::MatrixXcd& modes, const Eigen::VectorXcd& mu,
                                        const Eigen::MatrixXd& x, std::span<const int> subset) {
  if (subset.empty()) throw InvalidArgument("multi-snapshot fit needs a nonempty subset");
  if (modes.rows() != x.rows() || modes.cols() != mu.size()) throw InvalidArgument("mode, eigenvalue and data shapes differ");
  const Eigen::Index d = modes.rows(), r = modes.cols();
  Eigen::MatrixXcd a(d * static_cast<Eigen::Index>(subset.size()), r);
  Eigen::VectorXcd rhs(a.rows());
  for (std::size_t s = 0; s < subset.size(); ++s) {
    const int n = subset[s];
    if (n < 0 || n >= x.cols()) throw InvalidArgument("snapshot index " + std::to_string(n) + " out of range");
    const Eigen::Index row0 = static_cast<Eigen::Index>(s) * d;
    for (Eigen::Index k = 0; k < r; ++k) a.block(row0, k, d, 1) = modes.col(k) * integer_power(mu[k], n);
    rhs.segment(row0, d) = x.col(n).cast<cplx>();
  }
  return solve_full_rank(a, rhs, "multi-snapshot coefficient fit");
}

DmdResult exact_dmd(const SnapshotMatrix& x, const DmdOptions& opts) {
  const Eigen::Index n = x.count();
  if (n < 2) throw InvalidArgument("exact DMD needs N >= 2 snapshots");
  const Eigen::Index maxr = std::min(x.dim(), n - 1);
  if (opts.rank < 1 || opts.rank > maxr)
    throw InvalidArgument("rank " + std::to_string(opts.rank) + " outside [1, min(D, N-1)=" + std::to_string(maxr) + "]");

  DmdResult res;
  res.options = opts;
  res.dt = x.dt;
  res.t0 = x.t0;

  Eigen::MatrixXd target;
  if (opts.remove_mean) {
    auto centered = remove_temporal_mean(x);
    res.mean_mode = std::move(centered.mean_mode);
    target = std::move(centered.centered.data);
  } else {
    target = x.data;
  }

  const SnapshotPair pair = split_snapshots(target);
  PairDecomposition dec = decompose_pair(pair.x1, pair.x2, opts);
  const Eigen::Index r = dec.mu.size();

  Eigen::VectorXcd b;
  if (const auto* multi = std::get_if<MultiSnapshotFit>(&opts.b_fit)) {
    const auto idx = spread_indices(static_cast<int>(n), multi->count);
    b = fit_coefficients_multi(dec.modes, dec.mu, target, idx);
  } else {
    b = fit_coefficients_first(dec.modes, target.col(0));
  }

  // The solver emits conjugate pairs adjacently and exactly; make their
  // coefficients exactly conjugate as well.
  for (Eigen::Index k = 0; k + 1 < r; ++k) {
    if (dec.mu[k].imag() != 0.0 && dec.mu[k + 1] == std::conj(dec.mu[k])) {
      const cplx avg = 0.5 * (b[k] + std::conj(b[k + 1]));
      b[k] = avg;
      b[k + 1] = std::conj(avg);
      ++k;
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    const double ba = std::abs(b[a]), bc = std::abs(b[c]);
    if (ba != bc) return ba > bc;
    const double ma = std::abs(dec.mu[a]), mc = std::abs(dec.mu[c]);
    if (ma != mc) return ma > mc;
    return std::arg(dec.mu[a]) < std::arg(dec.mu[c]);
  });

  res.modes.resize(dec.modes.rows(), r);
  res.mu.resize(r);
  res.gamma.resize(r);
  res.b.resize(r);
  res.residuals.resize(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    res.modes.col(i) = dec.modes.col(src);
    res.mu[i] = dec.mu[src];
    res.gamma[i] = dec.mu[src] == cplx(0.0, 0.0) ? cplx(-std::numeric_limits<double>::infinity(), 0.0)
                                                  : to_continuous(dec.mu[src], x.dt);
    res.b[i] = b[src];
    res.residuals[i] = dec.residuals[src];
  }
  res.singular_values = dec.singular_values;
  return res;
}

Eigen::MatrixXd reconstruct_modes(const Eigen::MatrixXcd& modes, const Eigen::VectorXcd& mu,
                                  const Eigen::VectorXcd& b, std::span<const long> steps,
                                  const std::optional<Eigen::VectorXd>& mean_mode) {
  const Eigen::Index r = modes.cols();
  if (mu.size() != r || b.size() != r) throw InvalidArgument("mode, eigenvalue and coefficient counts differ");
  Eigen::MatrixXcd coeffs(r, static_cast<Eigen::Index>(steps.size()));
  for (std::size_t t = 0; t < steps.size(); ++t)
    for (Eigen::Index k = 0; k < r; ++k) coeffs(k, static_cast<Eigen::Index>(t)) = b[k] * integer_power(mu[k], steps[t]);
  ReconstructionOut rec = parallel::reconstruct(modes, coeffs);

  std::vector<cplx> mus(mu.data(), mu.data() + mu.size());
  if (is_conjugate_closed(mus)) {
    for (Eigen::Index t = 0; t < rec.real.cols(); ++t) {
      // Columns that cancel to ~0 are judged against the size of the summed terms.
      const double scale = rec.real.col(t).norm();
      const double floor = 1e-14 * coeffs.col(t).cwiseAbs().sum();
      if (rec.imag_norm[t] > 1e-10 * scale + floor)
        throw NumericalError("reconstruction of a conjugate-closed mode set has imaginary residue " +
                             num(rec.imag_norm[t]) + " at column " + std::to_string(t));
    }
  }
  if (mean_mode) {
    if (mean_mode->size() != rec.real.rows()) throw InvalidArgument("mean mode dimension differs from modes");
    rec.real.colwise() += *mean_mode;
  }
  return std::move(rec.real);
}

Eigen::MatrixXd reconstruct(const DmdResult& result, std::span<const long> steps) {
  return reconstruct_modes(result.modes, result.mu, result.b, steps, result.mean_mode);
}

}  // namespace kdmd
