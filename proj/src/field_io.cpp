#include "kdmd/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "kdmd/errors.hpp"
#include "kdmd/kernels.hpp"

namespace kdmd {

GridLayout::GridLayout(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<std::uint8_t> mask,
                       std::vector<Channel> channels)
    : nx_(nx), ny_(ny), nz_(nz), mask_(std::move(mask)), channels_(std::move(channels)) {
  if (nx_ == 0 || ny_ == 0 || nz_ == 0) throw InvalidArgument("grid dimensions must be positive");
  if (channels_.empty()) throw InvalidArgument("grid layout needs at least one channel");
  if (mask_.empty()) mask_.assign(cell_count(), 1);
  if (mask_.size() != cell_count())
    throw InvalidArgument("mask has " + std::to_string(mask_.size()) + " entries, grid has " +
                          std::to_string(cell_count()) + " cells");
  ocean_rank_.assign(cell_count(), -1);
  for (std::size_t c = 0; c < cell_count(); ++c) {
    if (mask_[c] != 0) {
      mask_[c] = 1;
      ocean_rank_[c] = static_cast<std::ptrdiff_t>(ocean_cells_.size());
      ocean_cells_.push_back(c);
    }
  }
}

GridLayout GridLayout::velocity(std::size_t nx, std::size_t ny, std::size_t nz, std::vector<std::uint8_t> mask) {
  const double half_root2 = std::numbers::sqrt2 / 2.0;
  return GridLayout(nx, ny, nz, std::move(mask),
                    {{"Ux", half_root2}, {"Uy", half_root2}, {"Uz", 1.0}, {"Us", half_root2}});
}

std::optional<std::size_t> GridLayout::index(std::size_t channel, std::size_t k, std::size_t j,
                                             std::size_t i) const {
  if (channel >= channels_.size() || k >= nz_ || j >= ny_ || i >= nx_) return std::nullopt;
  const auto rank = ocean_rank_[cell(k, j, i)];
  if (rank < 0) return std::nullopt;
  return channel * ocean_cells_.size() + static_cast<std::size_t>(rank);
}

std::size_t GridLayout::channel_index(const std::string& name) const {
  for (std::size_t c = 0; c < channels_.size(); ++c)
    if (channels_[c].name == name) return c;
  throw InvalidArgument("layout has no channel named '" + name + "'");
}

std::vector<std::size_t> GridLayout::channel_rows(std::span<const std::string> names) const {
  std::vector<std::size_t> chans;
  for (const auto& n : names) chans.push_back(channel_index(n));
  std::sort(chans.begin(), chans.end());
  chans.erase(std::unique(chans.begin(), chans.end()), chans.end());
  std::vector<std::size_t> rows;
  const std::size_t m = ocean_cells_.size();
  for (auto c : chans)
    for (std::size_t p = 0; p < m; ++p) rows.push_back(c * m + p);
  return rows;
}

bool GridLayout::operator==(const GridLayout& o) const {
  if (nx_ != o.nx_ || ny_ != o.ny_ || nz_ != o.nz_ || mask_ != o.mask_) return false;
  if (channels_.size() != o.channels_.size()) return false;
  for (std::size_t c = 0; c < channels_.size(); ++c)
    if (channels_[c].name != o.channels_[c].name || channels_[c].weight != o.channels_[c].weight) return false;
  return true;
}

SnapshotMatrix::SnapshotMatrix(Eigen::MatrixXd d, double step, double start,
                               std::shared_ptr<const GridLayout> lay)
    : data(std::move(d)), dt(step), t0(start), layout(std::move(lay)) {
  if (data.cols() < 2) throw InvalidArgument("snapshot matrix needs N >= 2 columns, got " + std::to_string(data.cols()));
  if (data.rows() < 1) throw InvalidArgument("snapshot matrix has no rows");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive and finite");
  if (!std::isfinite(t0)) throw InvalidArgument("start time must be finite");
  if (!data.allFinite()) throw InvalidArgument("snapshot matrix contains non-finite values");
  if (layout && static_cast<Eigen::Index>(layout->dim()) != data.rows())
    throw InvalidArgument("snapshot dimension " + std::to_string(data.rows()) +
                          " does not match layout dimension " + std::to_string(layout->dim()));
}

namespace {

std::vector<int> channel_kinds(const GridLayout& layout) {
  std::vector<int> kinds;
  for (const auto& ch : layout.channels()) {
    if (ch.name == "Ux") kinds.push_back(0);
    else if (ch.name == "Uy") kinds.push_back(1);
    else if (ch.name == "Uz") kinds.push_back(2);
    else if (ch.name == "Us") kinds.push_back(3);
    else throw InvalidArgument("velocity stacking does not know channel '" + ch.name + "'");
  }
  return kinds;
}

void check_field(const VelocityField& f, const GridLayout& layout) {
  const auto n = layout.cell_count();
  if (f.ux.size() != n || f.uy.size() != n || f.uz.size() != n)
    throw InvalidArgument("velocity field shape does not match the grid layout");
  for (auto c : layout.ocean_cells())
    if (!std::isfinite(f.ux[c]) || !std::isfinite(f.uy[c]) || !std::isfinite(f.uz[c]))
      throw InvalidArgument("non-finite velocity on ocean cell " + std::to_string(c));
}

}  // namespace

Eigen::VectorXd stack_observables(const VelocityField& field, const GridLayout& layout) {
  check_field(field, layout);
  const auto kinds = channel_kinds(layout);
  std::vector<double> weights;
  for (const auto& ch : layout.channels()) weights.push_back(ch.weight);
  Eigen::VectorXd out(static_cast<Eigen::Index>(layout.dim()));
  parallel::stack_velocity(field.ux, field.uy, field.uz, layout.ocean_cells(), kinds, weights,
                           std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

SnapshotMatrix assemble_snapshots(std::span<const VelocityField> fields,
                                  std::shared_ptr<const GridLayout> layout, double dt, double t0) {
  if (!layout) throw InvalidArgument("assemble_snapshots needs a layout");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(layout->dim()), static_cast<Eigen::Index>(fields.size()));
  for (std::size_t n = 0; n < fields.size(); ++n) data.col(static_cast<Eigen::Index>(n)) = stack_observables(fields[n], *layout);
  return SnapshotMatrix(std::move(data), dt, t0, std::move(layout));
}

CenteredSnapshots remove_temporal_mean(const SnapshotMatrix& x) {
  CenteredSnapshots out;
  out.mean_mode = x.data.rowwise().mean();
  Eigen::MatrixXd centered = x.data.colwise() - out.mean_mode;
  out.centered = SnapshotMatrix(std::move(centered), x.dt, x.t0, x.layout);
  return out;
}

namespace {

// Cells visited walking from a to b, both endpoints included.
void walk_segment(std::pair<long, long> a, std::pair<long, long> b,
                  std::vector<std::pair<std::size_t, std::size_t>>& path) {
  long i = a.first, j = a.second;
  const long di = std::abs(b.first - a.first), dj = std::abs(b.second - a.second);
  const long si = a.first < b.first ? 1 : -1, sj = a.second < b.second ? 1 : -1;
  long err = di - dj;
  while (true) {
    if (path.empty() || path.back() != std::pair<std::size_t, std::size_t>(i, j))
      path.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    if (i == b.first && j == b.second) break;
    const long e2 = 2 * err;
    if (e2 > -dj) { err -= dj; i += si; }
    if (e2 < di) { err += di; j += sj; }
  }
}

}  // namespace

Slice2D extract_slice(std::span<const cplx> stacked, const GridLayout& layout, std::size_t channel,
                      const SliceSpec& spec) {
  if (stacked.size() != layout.dim()) throw InvalidArgument("stacked vector length does not match layout");
  if (channel >= layout.channels().size()) throw InvalidArgument("slice channel out of range");

  Slice2D s;
  auto put = [&](std::size_t r, std::size_t c, std::size_t k, std::size_t j, std::size_t i) {
    const auto idx = layout.index(channel, k, j, i);
    if (idx) {
      s.values[r * s.cols + c] = stacked[*idx];
      s.present[r * s.cols + c] = 1;
    }
  };
  auto allocate = [&](std::size_t rows, std::size_t cols) {
    s.rows = rows;
    s.cols = cols;
    s.values.assign(rows * cols, cplx(0.0, 0.0));
    s.present.assign(rows * cols, 0);
  };

  if (const auto* layer = std::get_if<HorizontalLayer>(&spec)) {
    if (layer->k >= layout.nz()) throw InvalidArgument("slice layer k=" + std::to_string(layer->k) + " out of range");
    allocate(layout.ny(), layout.nx());
    for (std::size_t j = 0; j < layout.ny(); ++j) s.row_index.push_back(j);
    for (std::size_t i = 0; i < layout.nx(); ++i) s.col_ij.emplace_back(i, 0);
    for (std::size_t j = 0; j < layout.ny(); ++j)
      for (std::size_t i = 0; i < layout.nx(); ++i) put(j, i, layer->k, j, i);
  } else if (const auto* sec = std::get_if<VerticalSection>(&spec)) {
    if (sec->vertices.empty()) throw InvalidArgument("vertical section needs at least one vertex");
    for (const auto& [i, j] : sec->vertices)
      if (i >= layout.nx() || j >= layout.ny())
        throw InvalidArgument("section vertex (" + std::to_string(i) + "," + std::to_string(j) + ") out of range");
    std::vector<std::pair<std::size_t, std::size_t>> path;
    if (sec->vertices.size() == 1) path.push_back(sec->vertices.front());
    for (std::size_t v = 1; v < sec->vertices.size(); ++v)
      walk_segment({static_cast<long>(sec->vertices[v - 1].first), static_cast<long>(sec->vertices[v - 1].second)},
                   {static_cast<long>(sec->vertices[v].first), static_cast<long>(sec->vertices[v].second)}, path);
    allocate(layout.nz(), path.size());
    for (std::size_t k = 0; k < layout.nz(); ++k) s.row_index.push_back(k);
    s.col_ij = path;
    for (std::size_t k = 0; k < layout.nz(); ++k)
      for (std::size_t c = 0; c < path.size(); ++c) put(k, c, k, path[c].second, path[c].first);
  } else {
    const auto& dm = std::get<DepthMap>(spec);
    if (dm.depth.size() != layout.nx() * layout.ny())
      throw InvalidArgument("depth map needs nx*ny entries");
    for (long d : dm.depth)
      if (d >= static_cast<long>(layout.nz())) throw InvalidArgument("depth index " + std::to_string(d) + " out of range");
    allocate(layout.ny(), layout.nx());
    for (std::size_t j = 0; j < layout.ny(); ++j) s.row_index.push_back(j);
    for (std::size_t i = 0; i < layout.nx(); ++i) s.col_ij.emplace_back(i, 0);
    for (std::size_t j = 0; j < layout.ny(); ++j)
      for (std::size_t i = 0; i < layout.nx(); ++i) {
        const long k = dm.depth[j * layout.nx() + i];
        if (k >= 0) put(j, i, static_cast<std::size_t>(k), j, i);
      }
  }
  return s;
}

}  // namespace kdmd
