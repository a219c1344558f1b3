#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kdmd/field_io.hpp"

namespace kdmd {

enum class ProfileKind {
  orthogonalized,  // all closed modes mutually orthonormal in C^D
  random_unit,     // independent random unit vectors
  phase_ramp,      // |entry| = 1/sqrt(D), phase = slope * row
  explicit_vector, // caller-supplied profile (normalized on use)
};

struct OracleMode {
  cplx gamma;   // per hour
  cplx b;
  ProfileKind profile = ProfileKind::orthogonalized;
  double phase_slope = 0.0;            // radians per stacked row, phase_ramp only
  std::vector<cplx> values;            // explicit_vector only
  std::string label;
};

struct OracleSpec {
  Eigen::Index dim = 0;
  Eigen::Index count = 0;
  double dt = 1.0;
  double t0 = 0.0;
  std::vector<OracleMode> modes;  // generators; oscillating ones get a conjugate partner
  double noise_sigma = 0.0;       // relative to the RMS of the clean data
  std::uint64_t seed = 0;
};

struct GroundTruth {
  Eigen::MatrixXcd modes;  // D x M, unit columns
  Eigen::VectorXcd mu;     // exp(gamma dt)
  Eigen::VectorXcd gamma;
  Eigen::VectorXcd b;
  std::vector<std::string> labels;
};

struct OracleData {
  SnapshotMatrix snapshots;
  GroundTruth truth;
};

struct TidalConstituent {
  std::string name;
  double period_hours;
};

/// M2, S2, N2, K2, K1, O1, P1, Q1.
const std::vector<TidalConstituent>& tidal_constituents();

/// Constant mode (gamma = 0) followed by i 2 pi / P for each constituent.
std::vector<cplx> tidal_preset();

/// Tidal preset generators with representative amplitudes and seeded phases.
std::vector<OracleMode> tidal_modes(std::uint64_t seed, ProfileKind profile = ProfileKind::orthogonalized);

OracleData generate(const OracleSpec& spec);

struct SpectrumMatch {
  std::size_t estimated = 0;
  std::size_t truth = 0;
  double error = 0.0;
  std::optional<double> angle;  // radians between matched mode vectors
};

struct SpectrumComparison {
  std::vector<SpectrumMatch> matches;
  std::vector<std::size_t> unmatched_estimated;
  std::vector<std::size_t> unmatched_truth;
  double max_error = 0.0;
  double max_angle = 0.0;
};

/// Greedy nearest-neighbour matching on |mu_est - mu_true|. Mode matrices are optional.
SpectrumComparison compare_spectra(std::span<const cplx> estimated, std::span<const cplx> truth,
                                   const Eigen::MatrixXcd* estimated_modes = nullptr,
                                   const Eigen::MatrixXcd* true_modes = nullptr);

/// Angle between the complex lines spanned by a and b.
double subspace_angle(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

/// Ground truth as JSON (eigenvalues, gamma, b, labels, mode file reference).
std::string ground_truth_json(const GroundTruth& truth, const OracleSpec& spec, const std::string& modes_file);

}  // namespace kdmd
