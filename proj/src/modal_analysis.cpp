#include "kdmd/modal_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <numbers>
#include <numeric>
#include <random>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/kernels.hpp"

namespace kdmd {

double rms_contribution(cplx b, cplx gamma, double horizon) {
  if (!(horizon > 0.0)) throw InvalidArgument("RMS horizon T must be positive");
  const double x = gamma.real() * horizon;
  const double bm = std::abs(b);
  if (std::abs(x) < 1e-8) return bm;
  return bm * std::sqrt(std::expm1(2.0 * x) / (2.0 * x));
}

double component_rms(std::span<const cplx> mode, std::span<const std::size_t> rows, cplx b, cplx gamma,
                     double horizon) {
  if (rows.empty()) throw InvalidArgument("component RMS needs a nonempty row selection");
  double sel = 0.0, all = 0.0;
  for (auto r : rows) {
    if (r >= mode.size()) throw InvalidArgument("component row " + std::to_string(r) + " out of range");
    sel += std::norm(mode[r]);
  }
  for (const auto& v : mode) all += std::norm(v);
  if (all == 0.0) return 0.0;
  // Selecting every row in order reproduces `all` bit for bit, so the share is exactly 1.
  return std::sqrt(sel / all) * rms_contribution(b, gamma, horizon);
}

bool persistence_filter(cplx gamma, double horizon, double factor) {
  if (!(horizon > 0.0)) throw InvalidArgument("persistence horizon T must be positive");
  if (!(factor > 0.0 && factor < 1.0)) throw InvalidArgument("persistence factor must lie in (0, 1)");
  return !(std::exp(gamma.real() * horizon) < factor);
}

double persistence_boundary_half_life(double horizon, double factor) {
  return -horizon * std::numbers::ln2 / std::log(1.0 / factor);
}

KdeDensity::KdeDensity(std::vector<cplx> points, std::vector<double> weights, double h)
    : points_(std::move(points)), weights_(std::move(weights)), h_(h) {
  if (!(h_ > 0.0)) throw InvalidArgument("KDE bandwidth must be positive");
  if (points_.empty()) throw InvalidArgument("KDE needs at least one point");
  if (!weights_.empty() && weights_.size() != points_.size()) throw InvalidArgument("KDE weight count differs from point count");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InvalidArgument("KDE weights must be nonnegative");
    total += w;
  }
  if (weights_.empty()) total = static_cast<double>(points_.size());
  if (!(total > 0.0)) throw InvalidArgument("KDE weights sum to zero");
  z_ = total * std::numbers::pi * h_ * h_;
}

double KdeDensity::unnormalized(cplx z) const {
  double out = 0.0;
  serial::kde_sum(points_, weights_, h_, std::span<const cplx>(&z, 1), std::span<double>(&out, 1));
  return out;
}

std::vector<double> KdeDensity::evaluate(std::span<const cplx> queries, Execution exec) const {
  std::vector<double> out(queries.size());
  if (exec == Execution::parallel) parallel::kde_sum(points_, weights_, h_, queries, out);
  else serial::kde_sum(points_, weights_, h_, queries, out);
  for (auto& v : out) v /= z_;
  return out;
}

double kde_eval(const KdeDensity& density, cplx z) { return density(z); }

KdeDensity energy_density(std::span<const cplx> mus, std::span<const double> rms_weights, double h) {
  for (double w : rms_weights)
    if (w < 0.0) throw InvalidArgument("energy density weights must be nonnegative");
  return KdeDensity(std::vector<cplx>(mus.begin(), mus.end()), std::vector<double>(rms_weights.begin(), rms_weights.end()), h);
}

std::string KdeGrid::csv() const {
  std::string s = "re,im,value\n";
  for (std::size_t iim = 0; iim < nim; ++iim)
    for (std::size_t ire = 0; ire < nre; ++ire) {
      const cplx z = node(ire, iim);
      s += format_g17(z.real()) + "," + format_g17(z.imag()) + "," + format_g17(at(ire, iim)) + "\n";
    }
  return s;
}

KdeGrid kde_raster(const KdeDensity& density, cplx lo, cplx hi, double step, Execution exec) {
  if (!(step > 0.0)) throw InvalidArgument("raster step must be positive");
  KdeGrid g;
  g.re0 = lo.real();
  g.im0 = lo.imag();
  g.step = step;
  g.nre = static_cast<std::size_t>(std::floor((hi.real() - lo.real()) / step)) + 1;
  g.nim = static_cast<std::size_t>(std::floor((hi.imag() - lo.imag()) / step)) + 1;
  if (g.nre * g.nim > 50'000'000) throw InvalidArgument("KDE raster would need " + std::to_string(g.nre * g.nim) + " nodes");
  std::vector<cplx> nodes;
  nodes.reserve(g.nre * g.nim);
  for (std::size_t iim = 0; iim < g.nim; ++iim)
    for (std::size_t ire = 0; ire < g.nre; ++ire) nodes.push_back(g.node(ire, iim));
  g.values = density.evaluate(nodes, exec);
  return g;
}

std::vector<cplx> LeaveOneOutResult::pooled() const {
  std::vector<cplx> out;
  for (const auto& t : trials) out.insert(out.end(), t.mus.begin(), t.mus.end());
  return out;
}

namespace {

// Uniform integer in [0, bound) by rejection; independent of the standard
// library's distribution implementation.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do v = rng();
  while (v >= limit);
  return v % bound;
}

void sort_spectrum(std::vector<cplx>& mus) {
  std::stable_sort(mus.begin(), mus.end(), [](cplx a, cplx b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    return std::arg(a) < std::arg(b);
  });
}

}  // namespace

std::vector<int> draw_omitted_columns(int columns, int trials, std::uint64_t seed) {
  if (columns < 1) throw InvalidArgument("no columns to omit");
  if (trials < 1) throw InvalidArgument("leave-one-out needs at least one trial");
  std::mt19937_64 rng(seed);
  std::vector<int> out;
  while (static_cast<int>(out.size()) < trials) {
    std::vector<int> perm(static_cast<std::size_t>(columns));
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[draw_below(rng, i + 1)]);
    for (int v : perm) {
      if (static_cast<int>(out.size()) == trials) break;
      out.push_back(v);
    }
  }
  return out;
}

LeaveOneOutResult leave_one_out(const SnapshotMatrix& x, const DmdOptions& opts, int trials, std::uint64_t seed,
                                Execution exec) {
  if (trials < 1) throw InvalidArgument("leave-one-out needs at least one trial, got " + std::to_string(trials));
  if (x.count() < 3) throw InvalidArgument("leave-one-out needs N >= 3 snapshots");

  LeaveOneOutResult out;
  out.seed = seed;
  out.rank = opts.rank;

  Eigen::MatrixXd data = opts.remove_mean ? remove_temporal_mean(x).centered.data : x.data;
  const SnapshotPair pair = split_snapshots(data);
  {
    auto base = decompose_pair(pair.x1, pair.x2, opts);
    out.base.assign(base.mu.data(), base.mu.data() + base.mu.size());
    sort_spectrum(out.base);
  }

  const int columns = static_cast<int>(pair.x1.cols());
  const auto omitted = draw_omitted_columns(columns, trials, seed);
  out.trials.resize(omitted.size());
  std::vector<std::exception_ptr> errors(omitted.size());

  DmdOptions trial_opts = opts;
  const int max_rank = static_cast<int>(std::min<Eigen::Index>(pair.x1.rows(), columns - 1));
  if (trial_opts.rank > max_rank) trial_opts.rank = max_rank;
  if (trial_opts.tlsq_rank) trial_opts.tlsq_rank = std::min(*trial_opts.tlsq_rank, std::min(2 * static_cast<int>(pair.x1.rows()), columns - 1));

  auto run_trial = [&](std::size_t t) {
    try {
      const int col = omitted[t];
      const Eigen::Index n = columns - 1;
      Eigen::MatrixXd x1(pair.x1.rows(), n), x2(pair.x2.rows(), n);
      x1 << pair.x1.leftCols(col), pair.x1.rightCols(columns - col - 1);
      x2 << pair.x2.leftCols(col), pair.x2.rightCols(columns - col - 1);
      auto dec = decompose_pair(x1, x2, trial_opts);
      LooTrial tr;
      tr.omitted = col;
      tr.mus.assign(dec.mu.data(), dec.mu.data() + dec.mu.size());
      sort_spectrum(tr.mus);
      out.trials[t] = std::move(tr);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(omitted.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  } else {
    for (std::ptrdiff_t t = 0; t < count; ++t) run_trial(static_cast<std::size_t>(t));
  }
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const Error& e) {
      throw NumericalError("leave-one-out trial " + std::to_string(t) + " (omitted column " +
                           std::to_string(omitted[t]) + ") infeasible: " + e.what());
    }
  }
  return out;
}

std::vector<double> robustness_scores(std::span<const cplx> base_mus, const LeaveOneOutResult& loo, double h) {
  auto pooled = loo.pooled();
  if (pooled.empty()) throw InvalidArgument("robustness scores need a nonempty leave-one-out result");
  const KdeDensity d(std::move(pooled), h);
  return d.evaluate(base_mus);
}

ClusterResult cluster_eigenvalues(std::span<const cplx> pooled_in, std::span<const cplx> base,
                                  std::span<const double> base_weights, double h, double level_fraction,
                                  Execution exec) {
  if (pooled_in.empty()) throw InvalidArgument("clustering needs a nonempty pooled eigenvalue set");
  if (!(level_fraction > 0.0 && level_fraction < 1.0)) throw InvalidArgument("level fraction must lie in (0, 1)");
  if (!base_weights.empty() && base_weights.size() != base.size()) throw InvalidArgument("one weight per base eigenvalue required");

  // Canonical order makes the raster independent of the sample order.
  std::vector<cplx> pooled(pooled_in.begin(), pooled_in.end());
  std::sort(pooled.begin(), pooled.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });

  double re_lo = pooled.front().real(), re_hi = re_lo, im_lo = pooled.front().imag(), im_hi = im_lo;
  auto extend = [&](cplx z) {
    re_lo = std::min(re_lo, z.real());
    re_hi = std::max(re_hi, z.real());
    im_lo = std::min(im_lo, z.imag());
    im_hi = std::max(im_hi, z.imag());
  };
  for (auto z : pooled) extend(z);
  for (auto z : base) extend(z);
  const double margin = 3.0 * h, step = h / 4.0;

  const KdeDensity density(pooled, h);
  ClusterResult out;
  out.grid = kde_raster(density, {re_lo - margin, im_lo - margin}, {re_hi + margin, im_hi + margin}, step, exec);
  const auto& g = out.grid;
  const double peak = *std::max_element(g.values.begin(), g.values.end());
  out.threshold = level_fraction * peak;

  // 4-connected components of the superlevel set, discovered in raster order.
  std::vector<int> comp(g.values.size(), -1);
  int ncomp = 0;
  for (std::size_t start = 0; start < g.values.size(); ++start) {
    if (comp[start] >= 0 || g.values[start] < out.threshold) continue;
    std::deque<std::size_t> queue{start};
    comp[start] = ncomp;
    while (!queue.empty()) {
      const std::size_t c = queue.front();
      queue.pop_front();
      const std::size_t ire = c % g.nre, iim = c / g.nre;
      auto visit = [&](std::size_t n) {
        if (comp[n] < 0 && g.values[n] >= out.threshold) {
          comp[n] = ncomp;
          queue.push_back(n);
        }
      };
      if (ire > 0) visit(c - 1);
      if (ire + 1 < g.nre) visit(c + 1);
      if (iim > 0) visit(c - g.nre);
      if (iim + 1 < g.nim) visit(c + g.nre);
    }
    ++ncomp;
  }

  std::vector<int> member_comp(base.size(), -1);
  std::vector<double> total(static_cast<std::size_t>(ncomp), 0.0);
  std::vector<bool> has_member(static_cast<std::size_t>(ncomp), false);
  for (std::size_t b = 0; b < base.size(); ++b) {
    const double fr = std::round((base[b].real() - g.re0) / step);
    const double fi = std::round((base[b].imag() - g.im0) / step);
    if (fr < 0 || fi < 0 || fr >= static_cast<double>(g.nre) || fi >= static_cast<double>(g.nim)) continue;
    const int c = comp[static_cast<std::size_t>(fi) * g.nre + static_cast<std::size_t>(fr)];
    if (c < 0) continue;
    member_comp[b] = c;
    total[static_cast<std::size_t>(c)] += base_weights.empty() ? 1.0 : base_weights[b];
    has_member[static_cast<std::size_t>(c)] = true;
  }
  std::vector<int> order;
  for (int c = 0; c < ncomp; ++c)
    if (has_member[static_cast<std::size_t>(c)]) order.push_back(c);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return total[static_cast<std::size_t>(a)] > total[static_cast<std::size_t>(b)]; });
  std::vector<int> label_of(static_cast<std::size_t>(ncomp), 0);
  for (std::size_t i = 0; i < order.size(); ++i) label_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i) + 1;

  out.cluster_count = static_cast<int>(order.size());
  out.labels.resize(base.size());
  for (std::size_t b = 0; b < base.size(); ++b)
    if (member_comp[b] >= 0) out.labels[b] = label_of[static_cast<std::size_t>(member_comp[b])];
  return out;
}

std::vector<ModeInfo> build_mode_table(const DmdResult& result, double horizon,
                                       std::optional<std::span<const std::size_t>> vertical_rows) {
  const auto r = static_cast<std::size_t>(result.rank());
  std::vector<cplx> mus(result.mu.data(), result.mu.data() + r);
  const Pairing pairing = pair_conjugates(mus);
  std::vector<ModeInfo> table(r);
  for (std::size_t k = 0; k < r; ++k) {
    ModeInfo& m = table[k];
    const auto kk = static_cast<Eigen::Index>(k);
    m.index = static_cast<int>(k) + 1;
    m.mu = result.mu[kk];
    m.gamma = result.gamma[kk];
    m.period_hours = period(m.gamma);
    m.half_double_hours = half_doubling_time(m.gamma);
    if (pairing.partner[k]) m.conj_partner = static_cast<int>(*pairing.partner[k]) + 1;
    m.is_real = pairing.is_real[k];
    m.b_mag = std::abs(result.b[kk]);
    m.rms = rms_contribution(result.b[kk], m.gamma, horizon);
    if (vertical_rows) {
      std::span<const cplx> mode(result.modes.col(kk).data(), static_cast<std::size_t>(result.modes.rows()));
      m.rms_vertical = component_rms(mode, *vertical_rows, result.b[kk], m.gamma, horizon);
    }
  }
  return table;
}

void apply_robustness(std::vector<ModeInfo>& table, std::span<const double> scores) {
  if (scores.size() != table.size()) throw InvalidArgument("one robustness score per mode required");
  for (std::size_t k = 0; k < table.size(); ++k) table[k].robustness = scores[k];
}

void apply_clusters(std::vector<ModeInfo>& table, const ClusterResult& clusters) {
  if (clusters.labels.size() != table.size()) throw InvalidArgument("one cluster label per mode required");
  for (std::size_t k = 0; k < table.size(); ++k) {
    table[k].clustering_ran = true;
    table[k].cluster = clusters.labels[k];
  }
}

}  // namespace kdmd
