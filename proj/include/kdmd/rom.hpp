#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "kdmd/dmd_core.hpp"
#include "kdmd/field_io.hpp"
#include "kdmd/spectrum.hpp"

namespace kdmd {

// Mode indices in this module are the 1-based ranks of ModeInfo::index.

struct ExplicitModes {
  std::vector<int> indices;
};

/// Inclusive box on (RMS, robustness), optionally restricted to persistent modes.
struct BoxCriteria {
  std::optional<double> rms_min, rms_max;
  std::optional<double> robustness_min, robustness_max;
  bool persistent_only = false;
  double persistence_horizon = 0.0;  // hours; must be set when persistent_only
  double persistence_factor = 0.1;
};

using RomSelection = std::variant<ExplicitModes, BoxCriteria>;

/// Parses "indices:1,2,5", "all", "persistent" or
/// "box:rms_min=..,rms_max=..,rob_min=..,rob_max=..,persistent".
/// `horizon` fills in the persistence horizon.
RomSelection parse_selection(const std::string& text, double horizon, double factor = 0.1);
std::string describe(const RomSelection& sel);

/// Sorted, conjugate-closed list of selected mode indices.
std::vector<int> select_modes(std::span<const ModeInfo> table, const RomSelection& sel);

class RomModel {
 public:
  RomModel(Eigen::MatrixXcd modes, Eigen::VectorXcd mu, Eigen::VectorXcd b, double dt,
           std::optional<Eigen::VectorXd> mean_mode, std::vector<int> indices, std::string provenance);

  const Eigen::MatrixXcd& modes() const { return modes_; }
  const Eigen::VectorXcd& mu() const { return mu_; }
  const Eigen::VectorXcd& b() const { return b_; }
  const std::optional<Eigen::VectorXd>& mean_mode() const { return mean_; }
  double dt() const { return dt_; }
  const std::vector<int>& indices() const { return indices_; }
  const std::string& provenance() const { return provenance_; }
  Eigen::Index dimension() const { return mu_.size(); }

  Eigen::MatrixXd reconstruct(std::span<const long> steps) const;

  /// The retained modes as a DmdResult (for export), options copied from `source`.
  DmdResult as_result(const DmdResult& source) const;

 private:
  Eigen::MatrixXcd modes_;
  Eigen::VectorXcd mu_, b_;
  double dt_;
  std::optional<Eigen::VectorXd> mean_;
  std::vector<int> indices_;
  std::string provenance_;
};

/// Throws InvalidArgument when the index set is empty, out of range or not conjugate-closed.
RomModel build_rom(const DmdResult& result, std::span<const int> indices, std::string provenance = {});

struct ErrorCurve {
  std::vector<double> rom_norm;   // |X^[n]|
  std::vector<double> rel_error;  // |X[n] - X^[n]| / |X[n]|
  std::vector<double> abs_error;  // |X[n] - X^[n]|
  double dt = 1.0, t0 = 0.0;

  /// CSV `n,t_hours,rom_norm,rel_error`.
  std::string csv() const;
};

ErrorCurve error_curve(const SnapshotMatrix& x, const RomModel& rom);

}  // namespace kdmd
