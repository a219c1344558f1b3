#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace kdmd {

using cplx = std::complex<double>;

struct Channel {
  std::string name;
  double weight = 1.0;
};

/// Masked 3-D grid and the mapping from (channel, k, j, i) to stacked rows.
///
/// Cells are addressed row-major as (k * ny + j) * nx + i, k being depth.
/// Only ocean cells (mask == true) are stacked; the stacked vector is laid
/// out channel-outermost, then k, then j, then i.
class GridLayout {
 public:
  static constexpr const char* kStackingOrder = "channel-k-j-i";

  GridLayout(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<std::uint8_t> mask,
             std::vector<Channel> channels);

  /// The four weighted velocity observables [Ux, Uy, Uz, Us] with weights
  /// sqrt(2)/2, sqrt(2)/2, 1, sqrt(2)/2. An empty mask means all-ocean.
  static GridLayout velocity(std::size_t nx, std::size_t ny, std::size_t nz,
                             std::vector<std::uint8_t> mask = {});

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t nz() const { return nz_; }
  std::size_t cell_count() const { return nx_ * ny_ * nz_; }
  std::size_t ocean_count() const { return ocean_cells_.size(); }
  std::size_t dim() const { return channels_.size() * ocean_cells_.size(); }

  const std::vector<Channel>& channels() const { return channels_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  const std::vector<std::size_t>& ocean_cells() const { return ocean_cells_; }

  std::size_t cell(std::size_t k, std::size_t j, std::size_t i) const { return (k * ny_ + j) * nx_ + i; }
  bool is_ocean(std::size_t k, std::size_t j, std::size_t i) const { return mask_[cell(k, j, i)] != 0; }

  /// Stacked row of (channel, k, j, i), or nullopt for land cells.
  std::optional<std::size_t> index(std::size_t channel, std::size_t k, std::size_t j, std::size_t i) const;

  /// Position of a named channel; throws InvalidArgument if absent.
  std::size_t channel_index(const std::string& name) const;

  /// All stacked rows belonging to the named channels.
  std::vector<std::size_t> channel_rows(std::span<const std::string> names) const;

  bool operator==(const GridLayout& other) const;

 private:
  std::size_t nx_, ny_, nz_;
  std::vector<std::uint8_t> mask_;
  std::vector<Channel> channels_;
  std::vector<std::size_t> ocean_cells_;     // cell ids in stacking order
  std::vector<std::ptrdiff_t> ocean_rank_;   // cell id -> ordinal, -1 on land
};

/// Raw velocity components over every grid cell (row-major, m/s).
struct VelocityField {
  std::vector<double> ux, uy, uz;
};

/// D x N stacked snapshot data. Columns are X[n], n = 0..N-1, sampled every dt hours.
struct SnapshotMatrix {
  Eigen::MatrixXd data;
  double dt = 1.0;
  double t0 = 0.0;
  std::shared_ptr<const GridLayout> layout;

  SnapshotMatrix() = default;
  /// Validates N >= 2, dt > 0 and finite entries.
  SnapshotMatrix(Eigen::MatrixXd data, double dt, double t0 = 0.0,
                 std::shared_ptr<const GridLayout> layout = nullptr);

  Eigen::Index dim() const { return data.rows(); }
  Eigen::Index count() const { return data.cols(); }
};

/// Weighted observable vector of one velocity field over the layout's ocean cells.
/// Channel values are Ux, Uy, Uz and the recomputed horizontal speed Us.
Eigen::VectorXd stack_observables(const VelocityField& field, const GridLayout& layout);

/// Stacks a time series of fields into a snapshot matrix. NaN is tolerated on land cells only.
SnapshotMatrix assemble_snapshots(std::span<const VelocityField> fields,
                                  std::shared_ptr<const GridLayout> layout, double dt,
                                  double t0 = 0.0);

struct CenteredSnapshots {
  Eigen::VectorXd mean_mode;
  SnapshotMatrix centered;
};

/// Subtracts the temporal mean from every column.
CenteredSnapshots remove_temporal_mean(const SnapshotMatrix& x);

// ---------------------------------------------------------------------------
// 2-D slices

struct HorizontalLayer {
  std::size_t k = 0;
};

/// Vertical section along a polyline of (i, j) vertices; consecutive
/// vertices are joined by the cells a grid line walk visits.
struct VerticalSection {
  std::vector<std::pair<std::size_t, std::size_t>> vertices;
};

/// Map taking, for each (i, j) column, the value at depth index depth[j * nx + i].
/// Negative depth entries mark columns with no surface (all-missing).
struct DepthMap {
  std::vector<long> depth;
};

using SliceSpec = std::variant<HorizontalLayer, VerticalSection, DepthMap>;

struct Slice2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> values;   // row-major rows x cols
  std::vector<std::uint8_t> present;
  // Grid coordinates of every row/column: horizontal slices use j for rows and
  // i for columns; sections use k for rows and the (i, j) path for columns.
  std::vector<std::size_t> row_index;
  std::vector<std::pair<std::size_t, std::size_t>> col_ij;

  bool has(std::size_t r, std::size_t c) const { return present[r * cols + c] != 0; }
  cplx at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Copies one channel of a stacked (complex) vector into a 2-D slice.
Slice2D extract_slice(std::span<const cplx> stacked, const GridLayout& layout, std::size_t channel,
                      const SliceSpec& spec);

}  // namespace kdmd
