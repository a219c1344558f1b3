#include "kdmd/kernels.hpp"

#include <cmath>

#include <omp.h>

namespace kdmd {

cplx integer_power(cplx mu, long n) {
  if (n < 0) return cplx(1.0) / integer_power(mu, -n);
  cplx result(1.0, 0.0);
  cplx base = mu;
  unsigned long e = static_cast<unsigned long>(n);
  while (e != 0) {
    if (e & 1UL) result *= base;
    e >>= 1;
    if (e != 0) base *= base;
  }
  return result;
}

namespace {

inline double kde_point(std::span<const cplx> points, std::span<const double> weights,
                        double inv_h2, cplx z) {
  // Neumaier-compensated sum: M copies of one term give the rounded value of M * term.
  double acc = 0.0, comp = 0.0;
  const bool weighted = !weights.empty();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double dr = z.real() - points[k].real();
    const double di = z.imag() - points[k].imag();
    const double g = std::exp(-(dr * dr + di * di) * inv_h2);
    const double term = weighted ? weights[k] * g : g;
    const double t = acc + term;
    comp += std::abs(acc) >= std::abs(term) ? (acc - t) + term : (term - t) + acc;
    acc = t;
  }
  return acc + comp;
}

// Row d of the reconstruction at time column t.
inline cplx recon_entry(const Eigen::MatrixXcd& modes, const Eigen::MatrixXcd& coeffs,
                        Eigen::Index d, Eigen::Index t) {
  cplx acc(0.0, 0.0);
  for (Eigen::Index k = 0; k < modes.cols(); ++k) acc += modes(d, k) * coeffs(k, t);
  return acc;
}

inline double stack_entry(std::span<const double> ux, std::span<const double> uy,
                          std::span<const double> uz, std::size_t cell, int kind, double w) {
  switch (kind) {
    case 0: return w * ux[cell];
    case 1: return w * uy[cell];
    case 2: return w * uz[cell];
    default: return w * std::sqrt(ux[cell] * ux[cell] + uy[cell] * uy[cell]);
  }
}

ReconstructionOut finish(Eigen::MatrixXd real, const Eigen::MatrixXd& imag) {
  ReconstructionOut out;
  out.real = std::move(real);
  out.imag_norm.resize(imag.cols());
  for (Eigen::Index t = 0; t < imag.cols(); ++t) out.imag_norm[t] = imag.col(t).norm();
  return out;
}

}  // namespace

namespace serial {

void kde_sum(std::span<const cplx> points, std::span<const double> weights, double h,
             std::span<const cplx> queries, std::span<double> out) {
  const double inv_h2 = 1.0 / (h * h);
  for (std::size_t q = 0; q < queries.size(); ++q) out[q] = kde_point(points, weights, inv_h2, queries[q]);
}

ReconstructionOut reconstruct(const Eigen::MatrixXcd& modes, const Eigen::MatrixXcd& coeffs) {
  const Eigen::Index rows = modes.rows(), cols = coeffs.cols();
  Eigen::MatrixXd re(rows, cols), im(rows, cols);
  for (Eigen::Index t = 0; t < cols; ++t)
    for (Eigen::Index d = 0; d < rows; ++d) {
      const cplx v = recon_entry(modes, coeffs, d, t);
      re(d, t) = v.real();
      im(d, t) = v.imag();
    }
  return finish(std::move(re), im);
}

void stack_velocity(std::span<const double> ux, std::span<const double> uy,
                    std::span<const double> uz, std::span<const std::size_t> ocean_cells,
                    std::span<const int> kinds, std::span<const double> weights,
                    std::span<double> out) {
  const std::size_t m = ocean_cells.size();
  for (std::size_t c = 0; c < kinds.size(); ++c)
    for (std::size_t p = 0; p < m; ++p)
      out[c * m + p] = stack_entry(ux, uy, uz, ocean_cells[p], kinds[c], weights[c]);
}

}  // namespace serial

namespace parallel {

void kde_sum(std::span<const cplx> points, std::span<const double> weights, double h,
             std::span<const cplx> queries, std::span<double> out) {
  const double inv_h2 = 1.0 / (h * h);
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t q = 0; q < n; ++q) out[q] = kde_point(points, weights, inv_h2, queries[q]);
}

ReconstructionOut reconstruct(const Eigen::MatrixXcd& modes, const Eigen::MatrixXcd& coeffs) {
  const Eigen::Index rows = modes.rows(), cols = coeffs.cols();
  Eigen::MatrixXd re(rows, cols), im(rows, cols);
  const Eigen::Index total = rows * cols;
#pragma omp parallel for schedule(static)
  for (Eigen::Index e = 0; e < total; ++e) {
    const Eigen::Index t = e / rows, d = e % rows;
    const cplx v = recon_entry(modes, coeffs, d, t);
    re(d, t) = v.real();
    im(d, t) = v.imag();
  }
  return finish(std::move(re), im);
}

void stack_velocity(std::span<const double> ux, std::span<const double> uy,
                    std::span<const double> uz, std::span<const std::size_t> ocean_cells,
                    std::span<const int> kinds, std::span<const double> weights,
                    std::span<double> out) {
  const auto m = static_cast<std::ptrdiff_t>(ocean_cells.size());
  const auto total = m * static_cast<std::ptrdiff_t>(kinds.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t e = 0; e < total; ++e) {
    const std::ptrdiff_t c = e / m, p = e % m;
    out[e] = stack_entry(ux, uy, uz, ocean_cells[p], kinds[c], weights[c]);
  }
}

}  // namespace parallel
}  // namespace kdmd
