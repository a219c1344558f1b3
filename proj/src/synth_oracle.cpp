#include "kdmd/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include <json.hpp>

#include "kdmd/dmd_core.hpp"
#include "kdmd/errors.hpp"
#include "kdmd/spectrum.hpp"

namespace kdmd {

namespace {

bool oscillates(const OracleMode& m) { return m.gamma.imag() != 0.0; }

Eigen::VectorXd gaussian_vector(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = g(rng);
  return v;
}

Eigen::VectorXcd explicit_profile(const OracleMode& m, Eigen::Index d) {
  if (static_cast<Eigen::Index>(m.values.size()) != d)
    throw InvalidArgument("explicit profile of mode '" + m.label + "' has " + std::to_string(m.values.size()) +
                          " entries, expected " + std::to_string(d));
  Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(m.values.data(), d);
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("explicit profile of mode '" + m.label + "' is zero or non-finite");
  if (!oscillates(m) && v.imag().norm() != 0.0)
    throw InvalidArgument("non-oscillating mode '" + m.label + "' needs a real profile");
  return v / n;
}

void validate(const OracleSpec& spec) {
  if (spec.dim < 1) throw InvalidArgument("oracle dimension must be positive");
  if (spec.count < 2) throw InvalidArgument("oracle needs at least 2 snapshots");
  if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) throw InvalidArgument("oracle time step must be positive");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) throw InvalidArgument("noise_sigma must be >= 0");
  if (spec.modes.empty()) throw InvalidArgument("oracle spec has no modes");
  for (const auto& m : spec.modes) {
    if (!std::isfinite(m.gamma.real()) || !std::isfinite(m.gamma.imag()) || !std::isfinite(m.b.real()) ||
        !std::isfinite(m.b.imag()))
      throw InvalidArgument("oracle mode '" + m.label + "' has non-finite gamma or b");
    if (!oscillates(m) && m.b.imag() != 0.0) throw InvalidArgument("non-oscillating mode '" + m.label + "' needs a real b");
    if (!oscillates(m) && m.profile == ProfileKind::phase_ramp)
      throw InvalidArgument("phase-ramp profile of mode '" + m.label + "' needs oscillation");
    if (std::abs(m.gamma.imag()) * spec.dt >= std::numbers::pi)
      throw InvalidArgument("mode '" + m.label + "' oscillates at or above the Nyquist rate");
  }
}

}  // namespace

const std::vector<TidalConstituent>& tidal_constituents() {
  static const std::vector<TidalConstituent> table = {
      {"M2", 12.421}, {"S2", 12.000}, {"N2", 12.658}, {"K2", 11.967},
      {"K1", 23.935}, {"O1", 25.819}, {"P1", 24.066}, {"Q1", 26.868},
  };
  return table;
}

std::vector<cplx> tidal_preset() {
  std::vector<cplx> g{cplx(0.0, 0.0)};
  for (const auto& c : tidal_constituents()) g.emplace_back(0.0, 2.0 * std::numbers::pi / c.period_hours);
  return g;
}

std::vector<OracleMode> tidal_modes(std::uint64_t seed, ProfileKind profile) {
  static const double amplitude[] = {2.0, 1.0, 0.46, 0.19, 0.13, 0.58, 0.41, 0.19, 0.08};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  const auto gammas = tidal_preset();
  std::vector<OracleMode> modes;
  for (std::size_t k = 0; k < gammas.size(); ++k) {
    OracleMode m;
    m.gamma = gammas[k];
    m.profile = profile;
    if (k == 0) {
      m.b = amplitude[0];
      m.label = "Z0";
    } else {
      m.b = std::polar(amplitude[k], phase(rng));
      m.label = tidal_constituents()[k - 1].name;
    }
    modes.push_back(std::move(m));
  }
  return modes;
}

OracleData generate(const OracleSpec& spec) {
  validate(spec);
  const Eigen::Index d = spec.dim, n = spec.count;
  Eigen::Index closed = 0, ortho_columns = 0;
  for (const auto& m : spec.modes) {
    const Eigen::Index c = oscillates(m) ? 2 : 1;
    closed += c;
    if (m.profile == ProfileKind::orthogonalized) ortho_columns += c;
  }
  if (d < ortho_columns)
    throw InvalidArgument("oracle dimension " + std::to_string(d) + " cannot hold " + std::to_string(ortho_columns) +
                          " orthogonal profile columns");

  std::mt19937_64 rng(spec.seed);
  Eigen::MatrixXd basis;
  if (ortho_columns > 0) {
    Eigen::MatrixXd g(d, ortho_columns);
    for (Eigen::Index j = 0; j < ortho_columns; ++j) g.col(j) = gaussian_vector(d, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, ortho_columns);
  }

  // One profile per generator; pairs use the profile and its conjugate.
  Eigen::MatrixXcd profiles(d, static_cast<Eigen::Index>(spec.modes.size()));
  Eigen::Index next = 0;
  for (std::size_t k = 0; k < spec.modes.size(); ++k) {
    const auto& m = spec.modes[k];
    Eigen::VectorXcd v(d);
    switch (m.profile) {
      case ProfileKind::orthogonalized:
        if (oscillates(m)) {
          v = (basis.col(next).cast<cplx>() + cplx(0.0, 1.0) * basis.col(next + 1).cast<cplx>()) / std::sqrt(2.0);
          next += 2;
        } else {
          v = basis.col(next++).cast<cplx>();
        }
        break;
      case ProfileKind::random_unit:
        if (oscillates(m)) {
          const Eigen::VectorXd re = gaussian_vector(d, rng), im = gaussian_vector(d, rng);
          v = re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
        } else {
          v = gaussian_vector(d, rng).cast<cplx>();
        }
        v /= v.norm();
        break;
      case ProfileKind::phase_ramp:
        for (Eigen::Index i = 0; i < d; ++i)
          v[i] = std::polar(1.0 / std::sqrt(static_cast<double>(d)), m.phase_slope * static_cast<double>(i));
        break;
      case ProfileKind::explicit_vector:
        v = explicit_profile(m, d);
        break;
    }
    profiles.col(static_cast<Eigen::Index>(k)) = v;
  }

  Eigen::MatrixXd clean = Eigen::MatrixXd::Zero(d, n);
  for (std::size_t k = 0; k < spec.modes.size(); ++k) {
    const auto& m = spec.modes[k];
    const auto col = profiles.col(static_cast<Eigen::Index>(k));
    const double scale = oscillates(m) ? 2.0 : 1.0;
    for (Eigen::Index t = 0; t < n; ++t) {
      const cplx c = m.b * std::exp(m.gamma * (static_cast<double>(t) * spec.dt));
      clean.col(t) += scale * (col.real() * c.real() - col.imag() * c.imag());
    }
  }

  Eigen::MatrixXd data = clean;
  if (spec.noise_sigma > 0.0) {
    const double rms = std::sqrt(clean.squaredNorm() / static_cast<double>(clean.size()));
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index i = 0; i < d; ++i) data(i, t) += spec.noise_sigma * rms * g(rng);
  }

  GroundTruth truth;
  truth.modes.resize(d, closed);
  truth.mu.resize(closed);
  truth.gamma.resize(closed);
  truth.b.resize(closed);
  Eigen::Index j = 0;
  auto push = [&](Eigen::VectorXcd v, cplx gamma, cplx b, std::string label) {
    // Same phase convention as estimated modes; b absorbs the rotation.
    const Eigen::VectorXcd before = v;
    fix_phase(v);
    Eigen::Index imax = 0;
    before.cwiseAbs().maxCoeff(&imax);
    const cplx rot = before[imax] / v[imax];
    truth.modes.col(j) = v;
    truth.gamma[j] = gamma;
    truth.mu[j] = std::exp(gamma * spec.dt);
    truth.b[j] = b * rot;
    truth.labels.push_back(std::move(label));
    ++j;
  };
  for (std::size_t k = 0; k < spec.modes.size(); ++k) {
    const auto& m = spec.modes[k];
    const Eigen::VectorXcd v = profiles.col(static_cast<Eigen::Index>(k));
    if (oscillates(m)) {
      const bool up = m.gamma.imag() > 0.0;
      push(up ? v : v.conjugate().eval(), up ? m.gamma : std::conj(m.gamma), up ? m.b : std::conj(m.b), m.label + "+");
      push(up ? v.conjugate().eval() : v, up ? std::conj(m.gamma) : m.gamma, up ? std::conj(m.b) : m.b, m.label + "-");
    } else {
      push(v, m.gamma, m.b, m.label);
    }
  }
  return {SnapshotMatrix(std::move(data), spec.dt, spec.t0), std::move(truth)};
}

double subspace_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) return std::numbers::pi / 2.0;
  const Eigen::VectorXcd ua = a / na, ub = b / nb;
  const cplx c = ub.dot(ua);
  const double perp = (ua - ub * c).norm();
  return std::atan2(perp, std::abs(c));
}

SpectrumComparison compare_spectra(std::span<const cplx> estimated, std::span<const cplx> truth,
                                   const Eigen::MatrixXcd* estimated_modes, const Eigen::MatrixXcd* true_modes) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  cand.reserve(estimated.size() * truth.size());
  for (std::size_t i = 0; i < estimated.size(); ++i)
    for (std::size_t k = 0; k < truth.size(); ++k) cand.emplace_back(std::abs(estimated[i] - truth[k]), i, k);
  std::sort(cand.begin(), cand.end());

  SpectrumComparison out;
  std::vector<bool> used_est(estimated.size()), used_true(truth.size());
  const bool with_modes = estimated_modes && true_modes;
  for (const auto& [err, i, k] : cand) {
    if (used_est[i] || used_true[k]) continue;
    used_est[i] = used_true[k] = true;
    SpectrumMatch m{i, k, err, std::nullopt};
    if (with_modes) {
      m.angle = subspace_angle(estimated_modes->col(static_cast<Eigen::Index>(i)), true_modes->col(static_cast<Eigen::Index>(k)));
      out.max_angle = std::max(out.max_angle, *m.angle);
    }
    out.max_error = std::max(out.max_error, err);
    out.matches.push_back(m);
  }
  std::sort(out.matches.begin(), out.matches.end(), [](const auto& a, const auto& b) { return a.truth < b.truth; });
  for (std::size_t i = 0; i < estimated.size(); ++i)
    if (!used_est[i]) out.unmatched_estimated.push_back(i);
  for (std::size_t k = 0; k < truth.size(); ++k)
    if (!used_true[k]) out.unmatched_truth.push_back(k);
  return out;
}

std::string ground_truth_json(const GroundTruth& truth, const OracleSpec& spec, const std::string& modes_file) {
  using nlohmann::ordered_json;
  auto pair = [](cplx z) { return ordered_json::array({z.real(), z.imag()}); };
  ordered_json j;
  j["schema_version"] = 1;
  j["kind"] = "ground_truth";
  j["D"] = spec.dim;
  j["N"] = spec.count;
  j["dt"] = spec.dt;
  j["t0"] = spec.t0;
  j["noise_sigma"] = spec.noise_sigma;
  j["seed"] = spec.seed;
  j["modes_file"] = modes_file;
  ordered_json list = ordered_json::array();
  for (Eigen::Index k = 0; k < truth.mu.size(); ++k) {
    ordered_json e;
    e["label"] = truth.labels[static_cast<std::size_t>(k)];
    e["mu"] = pair(truth.mu[k]);
    e["gamma"] = pair(truth.gamma[k]);
    e["b"] = pair(truth.b[k]);
    const double p = period(truth.gamma[k]);
    e["period_hours"] = std::isfinite(p) ? ordered_json(p) : ordered_json(nullptr);
    list.push_back(std::move(e));
  }
  j["eigenvalues"] = std::move(list);
  return j.dump(2) + "\n";
}

}  // namespace kdmd
