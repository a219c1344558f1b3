#include "kdmd/rom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/modal_analysis.hpp"

namespace kdmd {

namespace {

double parse_number(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidArgument("selection field '" + key + "' has non-numeric value '" + v + "'");
  }
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

RomSelection parse_selection(const std::string& text, double horizon, double factor) {
  if (text == "all") return BoxCriteria{};
  if (text == "persistent") {
    BoxCriteria c;
    c.persistent_only = true;
    c.persistence_horizon = horizon;
    c.persistence_factor = factor;
    return c;
  }
  if (text.rfind("indices:", 0) == 0) {
    ExplicitModes e;
    for (const auto& tok : split_list(text.substr(8), ',')) {
      const double v = parse_number("indices", tok);
      if (v != std::floor(v)) throw InvalidArgument("mode index '" + tok + "' is not an integer");
      e.indices.push_back(static_cast<int>(v));
    }
    if (e.indices.empty()) throw InvalidArgument("explicit selection lists no modes");
    return e;
  }
  if (text.rfind("box:", 0) == 0) {
    BoxCriteria c;
    c.persistence_horizon = horizon;
    c.persistence_factor = factor;
    for (const auto& tok : split_list(text.substr(4), ',')) {
      if (tok == "persistent") {
        c.persistent_only = true;
        continue;
      }
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw InvalidArgument("box field '" + tok + "' is not key=value");
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      const double v = parse_number(key, val);
      if (key == "rms_min") c.rms_min = v;
      else if (key == "rms_max") c.rms_max = v;
      else if (key == "rob_min") c.robustness_min = v;
      else if (key == "rob_max") c.robustness_max = v;
      else throw InvalidArgument("unknown box field '" + key + "'");
    }
    return c;
  }
  throw InvalidArgument("cannot parse ROM selection '" + text + "'");
}

std::string describe(const RomSelection& sel) {
  if (const auto* e = std::get_if<ExplicitModes>(&sel)) {
    std::string s = "indices:";
    for (std::size_t i = 0; i < e->indices.size(); ++i) s += (i ? "," : "") + std::to_string(e->indices[i]);
    return s;
  }
  const auto& c = std::get<BoxCriteria>(sel);
  std::string s = "box:";
  std::vector<std::string> parts;
  if (c.rms_min) parts.push_back("rms_min=" + format_g17(*c.rms_min));
  if (c.rms_max) parts.push_back("rms_max=" + format_g17(*c.rms_max));
  if (c.robustness_min) parts.push_back("rob_min=" + format_g17(*c.robustness_min));
  if (c.robustness_max) parts.push_back("rob_max=" + format_g17(*c.robustness_max));
  if (c.persistent_only) parts.push_back("persistent");
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
  return s;
}

std::vector<int> select_modes(std::span<const ModeInfo> table, const RomSelection& sel) {
  std::set<int> chosen;
  const int n = static_cast<int>(table.size());
  if (const auto* e = std::get_if<ExplicitModes>(&sel)) {
    for (int idx : e->indices) {
      if (idx < 1 || idx > n) throw InvalidArgument("mode index " + std::to_string(idx) + " outside [1, " + std::to_string(n) + "]");
      chosen.insert(idx);
    }
  } else {
    const auto& c = std::get<BoxCriteria>(sel);
    if (c.rms_min && c.rms_max && *c.rms_min > *c.rms_max) throw InvalidArgument("box has rms_min > rms_max");
    if (c.robustness_min && c.robustness_max && *c.robustness_min > *c.robustness_max)
      throw InvalidArgument("box has rob_min > rob_max");
    for (const auto& m : table) {
      if (c.rms_min && m.rms < *c.rms_min) continue;
      if (c.rms_max && m.rms > *c.rms_max) continue;
      if (c.robustness_min || c.robustness_max) {
        if (!m.robustness) throw InvalidArgument("robustness bounds need leave-one-out scores in the mode table");
        if (c.robustness_min && *m.robustness < *c.robustness_min) continue;
        if (c.robustness_max && *m.robustness > *c.robustness_max) continue;
      }
      if (c.persistent_only && !persistence_filter(m.gamma, c.persistence_horizon, c.persistence_factor)) continue;
      chosen.insert(m.index);
    }
  }
  // Conjugate closure overrides the box.
  std::set<int> closed = chosen;
  for (int idx : chosen)
    if (const auto& p = table[static_cast<std::size_t>(idx - 1)].conj_partner) closed.insert(*p);
  if (closed.empty()) throw InvalidArgument("mode selection '" + describe(sel) + "' is empty");
  return {closed.begin(), closed.end()};
}

RomModel::RomModel(Eigen::MatrixXcd modes, Eigen::VectorXcd mu, Eigen::VectorXcd b, double dt,
                   std::optional<Eigen::VectorXd> mean_mode, std::vector<int> indices, std::string provenance)
    : modes_(std::move(modes)), mu_(std::move(mu)), b_(std::move(b)), dt_(dt), mean_(std::move(mean_mode)),
      indices_(std::move(indices)), provenance_(std::move(provenance)) {}

Eigen::MatrixXd RomModel::reconstruct(std::span<const long> steps) const {
  return reconstruct_modes(modes_, mu_, b_, steps, mean_);
}

DmdResult RomModel::as_result(const DmdResult& source) const {
  DmdResult r;
  r.modes = modes_;
  r.mu = mu_;
  r.b = b_;
  r.gamma.resize(mu_.size());
  r.residuals.resize(mu_.size());
  for (Eigen::Index k = 0; k < mu_.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(indices_[static_cast<std::size_t>(k)] - 1);
    r.gamma[k] = source.gamma[src];
    r.residuals[k] = source.residuals[src];
  }
  r.singular_values = source.singular_values;
  r.mean_mode = mean_;
  r.options = source.options;
  r.dt = source.dt;
  r.t0 = source.t0;
  return r;
}

RomModel build_rom(const DmdResult& result, std::span<const int> indices, std::string provenance) {
  const auto r = static_cast<int>(result.rank());
  if (indices.empty()) throw InvalidArgument("ROM needs at least one mode");
  std::set<int> set;
  for (int idx : indices) {
    if (idx < 1 || idx > r) throw InvalidArgument("mode index " + std::to_string(idx) + " outside [1, " + std::to_string(r) + "]");
    set.insert(idx);
  }
  std::vector<cplx> mus(result.mu.data(), result.mu.data() + result.mu.size());
  const Pairing pairing = pair_conjugates(mus);
  for (int idx : set) {
    const auto k = static_cast<std::size_t>(idx - 1);
    if (pairing.is_real[k]) continue;
    if (!pairing.partner[k] || !set.count(static_cast<int>(*pairing.partner[k]) + 1))
      throw InvalidArgument("mode set is not conjugate-closed: mode " + std::to_string(idx) + " lacks its partner");
  }
  const std::vector<int> sorted(set.begin(), set.end());
  const auto m = static_cast<Eigen::Index>(sorted.size());
  Eigen::MatrixXcd modes(result.modes.rows(), m);
  Eigen::VectorXcd mu(m), b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto src = static_cast<Eigen::Index>(sorted[static_cast<std::size_t>(i)] - 1);
    modes.col(i) = result.modes.col(src);
    mu[i] = result.mu[src];
    b[i] = result.b[src];
  }
  return RomModel(std::move(modes), std::move(mu), std::move(b), result.dt, result.mean_mode, sorted, std::move(provenance));
}

ErrorCurve error_curve(const SnapshotMatrix& x, const RomModel& rom) {
  if (x.dim() != rom.modes().rows())
    throw InvalidArgument("ROM dimension " + std::to_string(rom.modes().rows()) + " differs from data dimension " +
                          std::to_string(x.dim()));
  if (std::abs(x.dt - rom.dt()) > 1e-12 * std::abs(x.dt)) throw InvalidArgument("ROM time step differs from the data time step");
  std::vector<long> steps(static_cast<std::size_t>(x.count()));
  std::iota(steps.begin(), steps.end(), 0L);
  const Eigen::MatrixXd approx = rom.reconstruct(steps);
  ErrorCurve c;
  c.dt = x.dt;
  c.t0 = x.t0;
  for (Eigen::Index n = 0; n < x.count(); ++n) {
    const double xn = x.data.col(n).norm();
    const double err = (x.data.col(n) - approx.col(n)).norm();
    c.rom_norm.push_back(approx.col(n).norm());
    c.abs_error.push_back(err);
    c.rel_error.push_back(xn > 0.0 ? err / xn : (err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
  }
  return c;
}

std::string ErrorCurve::csv() const {
  std::string s = "n,t_hours,rom_norm,rel_error\n";
  for (std::size_t n = 0; n < rom_norm.size(); ++n)
    s += std::to_string(n) + "," + format_g17(t0 + dt * static_cast<double>(n)) + "," + format_g17(rom_norm[n]) + "," +
         format_g17(rel_error[n]) + "\n";
  return s;
}

}  // namespace kdmd
