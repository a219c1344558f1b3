#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kdmd {

using cplx = std::complex<double>;

/// Per-mode statistics as listed in a spectrum table.
struct ModeInfo {
  int index = 0;                         // 1-based rank in the DMD result
  cplx mu;
  cplx gamma;                            // sigma_r + i omega, per hour
  double period_hours = 0.0;             // +inf for omega == 0
  double half_double_hours = 0.0;        // <0 halving, >0 doubling, +inf for sigma_r == 0
  std::optional<int> conj_partner;       // 1-based index of the conjugate mode
  bool is_real = false;
  double b_mag = 0.0;
  double rms = 0.0;
  std::optional<double> rms_vertical;
  std::optional<double> robustness;
  bool clustering_ran = false;
  std::optional<int> cluster;            // unset = not in any cluster ("NaN")
};

/// gamma = ln(mu) / dt on the principal branch, omega in (-pi/dt, pi/dt].
cplx to_continuous(cplx mu, double dt);

/// 2 pi / |omega|, +inf when omega == 0.
double period(cplx gamma);

/// ln 2 / sigma_r, +inf when sigma_r == 0. Negative values are halving times.
double half_doubling_time(cplx gamma);

struct Pairing {
  std::vector<std::optional<std::size_t>> partner;  // 0-based
  std::vector<bool> is_real;
};

/// Greedy conjugate matching within an absolute tolerance. Throws
/// InvalidArgument when an eigenvalue has more than one candidate partner or
/// a non-real duplicate.
Pairing pair_conjugates(std::span<const cplx> mus, double tol = 1e-9);

/// True when every non-real eigenvalue has a conjugate partner within tol.
bool is_conjugate_closed(std::span<const cplx> mus, double tol = 1e-9);

struct PolarMode {
  std::vector<double> amplitude;  // |Phi| |b|
  std::vector<double> phase;      // arg Phi + arg b, wrapped to (-pi, pi]
};

PolarMode polar_mode(std::span<const cplx> mode, cplx b);

/// Wraps an angle to (-pi, pi].
double wrap_phase(double angle);

enum class RotationSense { ccw, cw, none };

struct TidalEllipse {
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;  // radians, wrapped to (-pi/2, pi/2]
  RotationSense rotation = RotationSense::none;
};

/// Ellipse traced by u(t) = Re(U e^{i w t}), v(t) = Re(V e^{i w t}) for w > 0,
/// via the rotary components w+ = (U + iV)/2 and w- = conj(U - iV)/2.
TidalEllipse tidal_ellipse(cplx u, cplx v);

std::string to_string(RotationSense s);

/// Speed of the long first-baroclinic gravity wave of a two-layer fluid.
double two_layer_wave_speed(double g_prime, double h1, double h2);

/// Table rows shown to readers: one member per conjugate pair (omega >= 0).
std::vector<ModeInfo> listed_modes(std::span<const ModeInfo> table);

/// Machine CSV `idx,Cluster,PT,HLT,L2RMS,L2wRMS,KSnarrow` with 17 significant digits.
std::string mode_table_csv(std::span<const ModeInfo> table);

/// Fixed-width table rounded to 2 decimals.
std::string mode_table_text(std::span<const ModeInfo> table);

}  // namespace kdmd
