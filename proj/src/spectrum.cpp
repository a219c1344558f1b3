#include "kdmd/spectrum.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"

namespace kdmd {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

cplx to_continuous(cplx mu, double dt) {
  if (mu == cplx(0.0, 0.0)) throw InvalidArgument("continuous eigenvalue undefined for mu = 0");
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  cplx g = std::log(mu);
  // log(-x - 0i) lands on -pi; the branch is (-pi, pi].
  if (g.imag() == -std::numbers::pi) g.imag(std::numbers::pi);
  return g / dt;
}

double period(cplx gamma) {
  const double w = std::abs(gamma.imag());
  return w == 0.0 ? kInf : 2.0 * std::numbers::pi / w;
}

double half_doubling_time(cplx gamma) {
  const double s = gamma.real();
  return s == 0.0 ? kInf : std::numbers::ln2 / s;
}

Pairing pair_conjugates(std::span<const cplx> mus, double tol) {
  const std::size_t n = mus.size();
  Pairing p{std::vector<std::optional<std::size_t>>(n), std::vector<bool>(n, false)};
  for (std::size_t j = 0; j < n; ++j) p.is_real[j] = std::abs(mus[j].imag()) <= tol;

  for (std::size_t j = 0; j < n; ++j) {
    if (p.is_real[j] || p.partner[j]) continue;
    std::vector<std::size_t> candidates, duplicates;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == j || p.is_real[k]) continue;
      if (std::abs(mus[k] - std::conj(mus[j])) <= tol && !p.partner[k]) candidates.push_back(k);
      if (std::abs(mus[k] - mus[j]) <= tol) duplicates.push_back(k);
    }
    if (candidates.size() > 1 || !duplicates.empty()) {
      std::string msg = "ambiguous conjugate pairing for eigenvalue " + std::to_string(j) + " (" +
                        format_g17(mus[j].real()) + (mus[j].imag() < 0 ? "" : "+") + format_g17(mus[j].imag()) +
                        "i); candidates:";
      for (auto k : candidates) msg += " " + std::to_string(k);
      for (auto k : duplicates) msg += " " + std::to_string(k) + "(duplicate)";
      throw InvalidArgument(msg);
    }
    if (candidates.size() == 1) {
      p.partner[j] = candidates.front();
      p.partner[candidates.front()] = j;
    }
  }
  return p;
}

bool is_conjugate_closed(std::span<const cplx> mus, double tol) {
  std::vector<bool> used(mus.size(), false);
  for (std::size_t j = 0; j < mus.size(); ++j) {
    if (used[j] || std::abs(mus[j].imag()) <= tol) continue;
    bool found = false;
    for (std::size_t k = 0; k < mus.size() && !found; ++k) {
      if (k == j || used[k]) continue;
      if (std::abs(mus[k] - std::conj(mus[j])) <= tol) {
        used[j] = used[k] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

double wrap_phase(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

PolarMode polar_mode(std::span<const cplx> mode, cplx b) {
  PolarMode out;
  out.amplitude.reserve(mode.size());
  out.phase.reserve(mode.size());
  const double bm = std::abs(b), bp = std::arg(b);
  for (const auto& v : mode) {
    out.amplitude.push_back(std::abs(v) * bm);
    out.phase.push_back(wrap_phase(std::arg(v) + bp));
  }
  return out;
}

TidalEllipse tidal_ellipse(cplx u, cplx v) {
  const cplx i(0.0, 1.0);
  const cplx wp = (u + i * v) / 2.0;
  const cplx wm = std::conj(u - i * v) / 2.0;
  const double ap = std::abs(wp), am = std::abs(wm);
  TidalEllipse e;
  e.semi_major = ap + am;
  e.semi_minor = std::abs(ap - am);
  double theta = 0.5 * (std::arg(wp) + std::arg(wm));
  // Orientation is defined modulo pi.
  while (theta > std::numbers::pi / 2) theta -= std::numbers::pi;
  while (theta <= -std::numbers::pi / 2) theta += std::numbers::pi;
  e.orientation = theta;
  if (std::abs(ap - am) <= 1e-12 * (ap + am)) e.rotation = RotationSense::none;
  else e.rotation = ap > am ? RotationSense::ccw : RotationSense::cw;
  return e;
}

std::string to_string(RotationSense s) {
  switch (s) {
    case RotationSense::ccw: return "CCW";
    case RotationSense::cw: return "CW";
    case RotationSense::none: return "none";
  }
  return "none";
}

double two_layer_wave_speed(double g_prime, double h1, double h2) {
  if (!(g_prime > 0.0) || !(h1 > 0.0) || !(h2 > 0.0))
    throw InvalidArgument("two-layer wave speed needs positive g', h1 and h2");
  return std::sqrt(g_prime * h1 * h2 / (h1 + h2));
}

std::vector<ModeInfo> listed_modes(std::span<const ModeInfo> table) {
  std::vector<ModeInfo> out;
  for (const auto& m : table)
    if (!(m.conj_partner && m.gamma.imag() < 0.0)) out.push_back(m);
  return out;
}

namespace {

std::string opt_field(double v) { return std::isfinite(v) ? format_g17(v) : std::string(); }

std::string cluster_field(const ModeInfo& m) {
  if (!m.clustering_ran) return {};
  return m.cluster ? std::to_string(*m.cluster) : std::string("NaN");
}

std::string fixed2(double v, bool plus = false) {
  if (!std::isfinite(v)) return "inf";
  char buf[64];
  if (std::abs(v) >= 1e7) std::snprintf(buf, sizeof buf, plus ? "%+.2e" : "%.2e", v);
  else std::snprintf(buf, sizeof buf, plus ? "%+.2f" : "%.2f", v);
  return buf;
}

}  // namespace

std::string mode_table_csv(std::span<const ModeInfo> table) {
  std::string s = "idx,Cluster,PT,HLT,L2RMS,L2wRMS,KSnarrow\n";
  for (const auto& m : listed_modes(table)) {
    s += std::to_string(m.index) + "," + cluster_field(m) + "," + opt_field(m.period_hours) + "," +
         opt_field(m.half_double_hours) + "," + format_g17(m.rms) + "," +
         (m.rms_vertical ? format_g17(*m.rms_vertical) : std::string()) + "," +
         (m.robustness ? format_g17(*m.robustness) : std::string()) + "\n";
  }
  return s;
}

std::string mode_table_text(std::span<const ModeInfo> table) {
  std::string s;
  char line[256];
  std::snprintf(line, sizeof line, "%5s %7s %10s %12s %10s %10s %12s\n", "Index", "Cluster", "Period", "T1/2", "RMS",
                "RMS_w", "Robustness");
  s += line;
  for (const auto& m : listed_modes(table)) {
    const std::string cl = m.clustering_ran ? (m.cluster ? std::to_string(*m.cluster) : "NaN") : "";
    std::snprintf(line, sizeof line, "%5d %7s %10s %12s %10s %10s %12s\n", m.index, cl.c_str(),
                  fixed2(m.period_hours).c_str(), fixed2(m.half_double_hours, true).c_str(), fixed2(m.rms).c_str(),
                  m.rms_vertical ? fixed2(*m.rms_vertical).c_str() : "",
                  m.robustness ? fixed2(*m.robustness).c_str() : "");
    s += line;
  }
  return s;
}

}  // namespace kdmd
