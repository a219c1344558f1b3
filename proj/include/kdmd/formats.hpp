#pragma once

// On-disk formats.
//
// DMDS snapshot file (all little-endian):
//   "DMDS" | u32 version=1 | u64 D | u64 N | f64 dt_hours | f64 t0_hours | D*N f64, column-major
// DMDM mode file: same header with magic "DMDM" and r in place of N, followed
//   by D*r complex entries stored as interleaved (re, im) f64 pairs, column-major.
// Grid sidecar: JSON object {nx, ny, nz, channels:[{name, weight}], mask:[0/1...],
//   stacking_order:"channel-k-j-i"}.
// CSV snapshots: header row "t=<hours>,..." then one row per stacked entry.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "kdmd/field_io.hpp"

namespace kdmd {

enum class SnapshotFormat { dmds, csv };

SnapshotFormat parse_snapshot_format(const std::string& name);
/// Chooses the format from the file extension (.csv -> csv, otherwise dmds).
SnapshotFormat guess_snapshot_format(const std::filesystem::path& path);

void write_dmds(const std::filesystem::path& path, const Eigen::MatrixXd& data, double dt, double t0);
inline void write_dmds(const std::filesystem::path& path, const SnapshotMatrix& x) {
  write_dmds(path, x.data, x.dt, x.t0);
}

struct RawSnapshots {
  Eigen::MatrixXd data;
  double dt = 0.0;
  double t0 = 0.0;
};

/// Reads a DMDS file without interpreting it (NaN allowed, any N).
RawSnapshots read_dmds_raw(const std::filesystem::path& path);
RawSnapshots read_csv_raw(const std::filesystem::path& path);

void write_csv_snapshots(const std::filesystem::path& path, const SnapshotMatrix& x);

/// Loads snapshots and validates them against an optional layout.
///
/// With a layout, the file may hold either stacked rows (D = layout.dim()) or
/// full gridded rows (D = channels x all cells, channel-outermost); in the
/// latter case land rows are dropped and may contain NaN. NaN anywhere else
/// is an error.
SnapshotMatrix ingest(const std::filesystem::path& path, SnapshotFormat format,
                      std::shared_ptr<const GridLayout> layout = nullptr);

void write_dmdm(const std::filesystem::path& path, const Eigen::MatrixXcd& modes, double dt, double t0);
struct RawModes {
  Eigen::MatrixXcd modes;
  double dt = 0.0;
  double t0 = 0.0;
};
RawModes read_dmdm(const std::filesystem::path& path);

void write_grid_sidecar(const std::filesystem::path& path, const GridLayout& layout);
GridLayout read_grid_sidecar(const std::filesystem::path& path);

/// %.17g-style text: 17 significant digits, trailing zeros dropped. Round-trips exactly.
std::string format_g17(double v);

/// Writes a text file, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace kdmd
