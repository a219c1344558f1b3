#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kdmd/dmd_core.hpp"
#include "kdmd/field_io.hpp"
#include "kdmd/synth_oracle.hpp"

namespace kdmd {

struct RomSpec {
  std::string name;
  std::string selection;  // see parse_selection
};

struct SynthModeSpec {
  std::string label;
  cplx gamma;
  cplx b;
  ProfileKind profile = ProfileKind::orthogonalized;
  double phase_slope = 0.0;
};

/// Everything a command needs. Loaded from a flat `key = value` file
/// (`#` starts a comment) and then overridden from the command line.
struct RunConfig {
  // data
  std::filesystem::path input;
  std::string input_format = "auto";  // auto | dmds | csv
  std::filesystem::path grid;         // optional layout sidecar
  std::filesystem::path result;       // optional exported result reused by rom/slice
  std::filesystem::path out = "kdmd_out";

  // decomposition
  std::optional<int> rank;  // unset: min(data rank, N - 4)
  bool tlsq = true;
  std::optional<int> tlsq_rank;
  bool normalize = true;
  bool mean_removal = false;
  CoefficientFit b_fit = MultiSnapshotFit{10};
  SvdMode svd = SvdMode::high_accuracy;
  std::uint64_t seed = 0;

  // analysis
  int loo_trials = 30;
  double h_robust = 2e-3;
  double h_cluster = 2.5e-2;
  double cluster_level = 0.1;
  std::optional<double> horizon;  // hours; unset: (N - 1) dt
  double persistence_factor = 0.1;
  std::string vertical_channel = "Uz";
  std::vector<RomSpec> roms;  // empty: all + persistent

  // slice
  std::string slice = "layer:0";  // layer:<k> | section:i,j;i,j;...
  std::string slice_channel = "Ux";
  std::string slice_modes = "listed";  // listed | comma-separated indices

  // synth
  std::string synth_preset = "tidal";  // tidal | custom
  long synth_dim = 500;
  long synth_count = 144;
  double synth_dt = 1.0;
  double synth_t0 = 0.0;
  double synth_noise = 0.0;
  ProfileKind synth_profile = ProfileKind::orthogonalized;
  std::vector<SynthModeSpec> synth_modes;  // used when synth_preset = custom
};

/// Applies one `key = value` setting. Unknown keys and bad values throw InvalidArgument.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Parses config text; `source` names it in error messages.
RunConfig parse_config(const std::string& text, const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical `key = value` listing of every setting.
std::string echo_config(const RunConfig& cfg);

bool parse_switch(const std::string& value);
ProfileKind parse_profile(const std::string& value);
std::string to_string(ProfileKind p);

/// Decomposition options for data `x`, resolving the default rank.
DmdOptions resolve_options(const RunConfig& cfg, const SnapshotMatrix& x);

/// Persistence horizon T for data `x`.
double resolve_horizon(const RunConfig& cfg, const SnapshotMatrix& x);

/// Numerical rank of the first N-1 snapshots (after mean removal when enabled).
int data_rank(const SnapshotMatrix& x, bool mean_removal);

OracleSpec synth_spec(const RunConfig& cfg);

}  // namespace kdmd
