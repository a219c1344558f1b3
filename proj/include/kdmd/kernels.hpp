#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP implementation in
// kdmd::parallel and a plain serial reference in kdmd::serial. Both perform
// the same per-element arithmetic in the same order, so their outputs are
// bit-identical regardless of thread count.

#include <complex>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace kdmd {

using cplx = std::complex<double>;

struct ReconstructionOut {
  Eigen::MatrixXd real;          // D x T
  Eigen::VectorXd imag_norm;     // l2 norm of the discarded imaginary part per column
};

namespace serial {

/// out[q] = sum_k w_k exp(-|queries[q] - points[k]|^2 / h^2). Empty weights mean unit weights.
void kde_sum(std::span<const cplx> points, std::span<const double> weights, double h,
             std::span<const cplx> queries, std::span<double> out);

/// Columns sum_k modes(:, k) * coeffs(k, t), split into real part and imaginary residue.
ReconstructionOut reconstruct(const Eigen::MatrixXcd& modes, const Eigen::MatrixXcd& coeffs);

/// Weighted observable stacking over ocean cells: rows channel-outermost.
/// `kinds` selects per channel 0=Ux, 1=Uy, 2=Uz, 3=speed.
void stack_velocity(std::span<const double> ux, std::span<const double> uy,
                    std::span<const double> uz, std::span<const std::size_t> ocean_cells,
                    std::span<const int> kinds, std::span<const double> weights,
                    std::span<double> out);

}  // namespace serial

namespace parallel {

void kde_sum(std::span<const cplx> points, std::span<const double> weights, double h,
             std::span<const cplx> queries, std::span<double> out);

ReconstructionOut reconstruct(const Eigen::MatrixXcd& modes, const Eigen::MatrixXcd& coeffs);

void stack_velocity(std::span<const double> ux, std::span<const double> uy,
                    std::span<const double> uz, std::span<const std::size_t> ocean_cells,
                    std::span<const int> kinds, std::span<const double> weights,
                    std::span<double> out);

}  // namespace parallel

/// mu^n by repeated squaring; 0^0 = 1, negative n inverts.
cplx integer_power(cplx mu, long n);

}  // namespace kdmd
