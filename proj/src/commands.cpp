#include "kdmd/commands.hpp"

#include <cstdio>
#include <memory>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/modal_analysis.hpp"
#include "kdmd/result_io.hpp"
#include "kdmd/rom.hpp"
#include "kdmd/spectrum.hpp"
#include "kdmd/synth_oracle.hpp"

namespace kdmd {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::shared_ptr<const GridLayout> load_layout(const RunConfig& cfg) {
  if (cfg.grid.empty()) return nullptr;
  return std::make_shared<const GridLayout>(read_grid_sidecar(cfg.grid));
}

SnapshotMatrix load_input(const RunConfig& cfg, const std::shared_ptr<const GridLayout>& layout) {
  if (cfg.input.empty()) throw InvalidArgument("no input file configured (set input = <path>)");
  const SnapshotFormat fmt =
      cfg.input_format == "auto" ? guess_snapshot_format(cfg.input) : parse_snapshot_format(cfg.input_format);
  return ingest(cfg.input, fmt, layout);
}

std::optional<std::vector<std::size_t>> vertical_rows(const RunConfig& cfg, const GridLayout* layout) {
  if (!layout || cfg.vertical_channel.empty()) return std::nullopt;
  for (const auto& c : layout->channels())
    if (c.name == cfg.vertical_channel) {
      const std::string names[] = {cfg.vertical_channel};
      return layout->channel_rows(names);
    }
  return std::nullopt;
}

std::vector<ModeInfo> mode_table(const DmdResult& res, double horizon,
                                 const std::optional<std::vector<std::size_t>>& rows) {
  if (rows) return build_mode_table(res, horizon, std::span<const std::size_t>(*rows));
  return build_mode_table(res, horizon);
}

DmdResult obtain_result(const RunConfig& cfg, const SnapshotMatrix& x) {
  if (!cfg.result.empty()) return import_result(cfg.result);
  return exact_dmd(x, resolve_options(cfg, x));
}

void write_echo(const RunConfig& cfg, const std::string& command) {
  write_text_file(cfg.out / (command + "_config.txt"), "# command: " + command + "\n" + echo_config(cfg));
}

std::string singular_values_csv(const Eigen::VectorXd& s) {
  std::string out = "k,sigma\n";
  for (Eigen::Index k = 0; k < s.size(); ++k) out += std::to_string(k + 1) + "," + format_g17(s[k]) + "\n";
  return out;
}

struct LooOutputs {
  LeaveOneOutResult loo;
  std::vector<double> scores;
  ClusterResult clusters;
};

LooOutputs run_leave_one_out(const RunConfig& cfg, const SnapshotMatrix& x, const DmdResult& base,
                             std::vector<ModeInfo>& table) {
  LooOutputs o;
  o.loo = leave_one_out(x, base.options, cfg.loo_trials, cfg.seed);
  const std::vector<cplx> base_mu(base.mu.data(), base.mu.data() + base.mu.size());
  o.scores = robustness_scores(base_mu, o.loo, cfg.h_robust);
  std::vector<double> weights;
  for (const auto& m : table) weights.push_back(m.rms);
  const auto pooled = o.loo.pooled();
  o.clusters = cluster_eigenvalues(pooled, base_mu, weights, cfg.h_cluster, cfg.cluster_level);
  apply_robustness(table, o.scores);
  apply_clusters(table, o.clusters);
  return o;
}

SliceSpec parse_slice(const std::string& text) {
  auto number = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos || s.size() > 9)
      throw InvalidArgument("slice '" + text + "' has a bad index '" + s + "'");
    return static_cast<std::size_t>(std::stoul(s));
  };
  if (text.rfind("layer:", 0) == 0) return HorizontalLayer{number(text.substr(6))};
  if (text.rfind("section:", 0) == 0) {
    VerticalSection sec;
    std::stringstream ss(text.substr(8));
    for (std::string v; std::getline(ss, v, ';');) {
      const auto comma = v.find(',');
      if (comma == std::string::npos) throw InvalidArgument("section vertex '" + v + "' is not i,j");
      sec.vertices.emplace_back(number(v.substr(0, comma)), number(v.substr(comma + 1)));
    }
    if (sec.vertices.empty()) throw InvalidArgument("section needs at least one vertex");
    return sec;
  }
  throw InvalidArgument("slice must be layer:<k> or section:i,j;i,j;..., got '" + text + "'");
}

std::vector<int> slice_mode_indices(const RunConfig& cfg, std::span<const ModeInfo> table) {
  std::vector<int> idx;
  if (cfg.slice_modes == "listed") {
    for (const auto& m : listed_modes(table)) idx.push_back(m.index);
    return idx;
  }
  std::stringstream ss(cfg.slice_modes);
  for (std::string t; std::getline(ss, t, ',');) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos || t.size() > 9)
      throw InvalidArgument("slice_modes entry '" + t + "' is not a mode index");
    const int k = std::stoi(t);
    if (k < 1 || k > static_cast<int>(table.size()))
      throw InvalidArgument("slice mode " + t + " outside [1, " + std::to_string(table.size()) + "]");
    idx.push_back(k);
  }
  if (idx.empty()) throw InvalidArgument("slice_modes lists no modes");
  return idx;
}

// Grid coordinates of slice cell (r, c).
std::pair<std::size_t, std::size_t> slice_ij(const Slice2D& s, const SliceSpec& spec, std::size_t r, std::size_t c) {
  if (std::holds_alternative<VerticalSection>(spec)) return s.col_ij[c];
  return {s.col_ij[c].first, s.row_index[r]};
}

}  // namespace

void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const OracleSpec spec = synth_spec(cfg);
  const OracleData data = generate(spec);
  write_dmds(cfg.out / "synth.dmds", data.snapshots);
  write_dmdm(cfg.out / "ground_truth_modes.dmdm", data.truth.modes, spec.dt, spec.t0);
  write_text_file(cfg.out / "ground_truth.json", ground_truth_json(data.truth, spec, "ground_truth_modes.dmdm"));
  const bool gridded = spec.dim % 4 == 0;
  if (gridded)
    write_grid_sidecar(cfg.out / "grid.json", GridLayout::velocity(static_cast<std::size_t>(spec.dim / 4), 1, 1));
  write_echo(cfg, "synth");

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(data.snapshots.data);
  const int rank = numerical_rank(svd.singularValues(), spec.dim, spec.count);
  log << "synthetic data: D=" << spec.dim << " N=" << spec.count << " dt=" << format_g17(spec.dt)
      << " h, noise=" << format_g17(spec.noise_sigma) << ", seed=" << spec.seed << "\n";
  log << "closed eigenvalues: " << data.truth.mu.size() << ", numerical rank: " << rank << "\n";
  log << "label        period_h        |b|\n";
  for (Eigen::Index k = 0; k < data.truth.mu.size(); ++k) {
    if (data.truth.gamma[k].imag() < 0.0) continue;
    const double p = period(data.truth.gamma[k]);
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %12s %10s\n", data.truth.labels[static_cast<std::size_t>(k)].c_str(),
                  std::isfinite(p) ? fixed(p, 3).c_str() : "inf", fixed(std::abs(data.truth.b[k]), 3).c_str());
    log << line;
  }
  log << "wrote " << (cfg.out / "synth.dmds").string() << (gridded ? " (+ grid.json)" : "") << "\n";
}

void cmd_run(const RunConfig& cfg, std::ostream& log) {
  const auto layout = load_layout(cfg);
  const SnapshotMatrix x = load_input(cfg, layout);
  const DmdResult res = exact_dmd(x, resolve_options(cfg, x));
  const auto table = mode_table(res, resolve_horizon(cfg, x), vertical_rows(cfg, layout.get()));
  write_text_file(cfg.out / "spectrum.csv", mode_table_csv(table));
  export_result(res, cfg.out, "result");
  write_text_file(cfg.out / "singular_values.csv", singular_values_csv(res.singular_values));
  write_echo(cfg, "run");
  log << "D=" << x.dim() << " N=" << x.count() << " r=" << res.rank() << "\n";
  log << mode_table_text(listed_modes(table));
}

void cmd_loo(const RunConfig& cfg, std::ostream& log) {
  const auto layout = load_layout(cfg);
  const SnapshotMatrix x = load_input(cfg, layout);
  const DmdResult base = exact_dmd(x, resolve_options(cfg, x));
  auto table = mode_table(base, resolve_horizon(cfg, x), vertical_rows(cfg, layout.get()));
  const LooOutputs o = run_leave_one_out(cfg, x, base, table);

  std::string pooled = "trial,omitted,re,im\n";
  for (std::size_t t = 0; t < o.loo.trials.size(); ++t)
    for (const auto& mu : o.loo.trials[t].mus)
      pooled += std::to_string(t + 1) + "," + std::to_string(o.loo.trials[t].omitted) + "," + format_g17(mu.real()) +
                "," + format_g17(mu.imag()) + "\n";
  write_text_file(cfg.out / "loo_eigenvalues.csv", pooled);
  write_text_file(cfg.out / "kde_grid.csv", o.clusters.grid.csv());
  write_text_file(cfg.out / "spectrum.csv", mode_table_csv(table));

  ordered_json s;
  s["schema_version"] = 1;
  s["kind"] = "leave_one_out";
  s["trials"] = cfg.loo_trials;
  s["seed"] = cfg.seed;
  s["rank"] = o.loo.rank;
  s["h_robust"] = cfg.h_robust;
  s["h_cluster"] = cfg.h_cluster;
  s["cluster_level"] = cfg.cluster_level;
  s["cluster_threshold"] = o.clusters.threshold;
  s["cluster_count"] = o.clusters.cluster_count;
  ordered_json grid;
  grid["re0"] = o.clusters.grid.re0;
  grid["im0"] = o.clusters.grid.im0;
  grid["step"] = o.clusters.grid.step;
  grid["nre"] = o.clusters.grid.nre;
  grid["nim"] = o.clusters.grid.nim;
  s["grid"] = std::move(grid);
  ordered_json modes = ordered_json::array();
  for (const auto& m : table) {
    ordered_json e;
    e["idx"] = m.index;
    e["robustness"] = m.robustness ? ordered_json(*m.robustness) : ordered_json(nullptr);
    e["cluster"] = m.cluster ? ordered_json(*m.cluster) : ordered_json(nullptr);
    modes.push_back(std::move(e));
  }
  s["modes"] = std::move(modes);
  write_text_file(cfg.out / "loo_summary.json", s.dump(2) + "\n");
  write_echo(cfg, "loo");

  log << "leave-one-out: " << cfg.loo_trials << " trials, seed " << cfg.seed << ", r=" << o.loo.rank << ", "
      << o.clusters.cluster_count << " clusters\n";
  log << mode_table_text(listed_modes(table));
}

void cmd_rom(const RunConfig& cfg, std::ostream& log) {
  const auto layout = load_layout(cfg);
  const SnapshotMatrix x = load_input(cfg, layout);
  const DmdResult res = obtain_result(cfg, x);
  const double horizon = resolve_horizon(cfg, x);
  auto table = mode_table(res, horizon, vertical_rows(cfg, layout.get()));

  std::vector<RomSpec> roms = cfg.roms;
  if (roms.empty()) roms = {{"all", "all"}, {"persistent", "persistent"}};
  std::vector<RomSelection> selections;
  bool need_robustness = false;
  for (const auto& r : roms) {
    selections.push_back(parse_selection(r.selection, horizon, cfg.persistence_factor));
    if (const auto* box = std::get_if<BoxCriteria>(&selections.back()))
      need_robustness = need_robustness || box->robustness_min || box->robustness_max;
  }
  if (need_robustness) run_leave_one_out(cfg, x, res, table);

  const int rank = data_rank(x, res.mean_mode.has_value());
  std::string summary = "name,selection,dimension,percent_of_rank,max_rel_error,final_rel_error\n";
  log << "data rank " << rank << ", DMD rank " << res.rank() << "\n";
  log << "rom                 dim   %rank   max rel err\n";
  for (std::size_t k = 0; k < roms.size(); ++k) {
    const auto idx = select_modes(table, selections[k]);
    const RomModel rom = build_rom(res, idx, describe(selections[k]));
    const ErrorCurve curve = error_curve(x, rom);
    write_text_file(cfg.out / ("rom_" + roms[k].name + ".csv"), curve.csv());
    ordered_json extra;
    extra["rom_name"] = roms[k].name;
    extra["selection"] = describe(selections[k]);
    extra["source_indices"] = idx;
    export_result(rom.as_result(res), cfg.out, "rom_" + roms[k].name, extra);
    const double pct = 100.0 * static_cast<double>(rom.dimension()) / static_cast<double>(rank);
    const double max_err = *std::max_element(curve.rel_error.begin(), curve.rel_error.end());
    summary += roms[k].name + ",\"" + describe(selections[k]) + "\"," + std::to_string(rom.dimension()) + "," +
               format_g17(pct) + "," + format_g17(max_err) + "," + format_g17(curve.rel_error.back()) + "\n";
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %5ld %7s %13.3e\n", roms[k].name.c_str(), static_cast<long>(rom.dimension()),
                  fixed(pct, 0).c_str(), max_err);
    log << line;
  }
  write_text_file(cfg.out / "rom_summary.csv", summary);
  write_echo(cfg, "rom");
}

void cmd_slice(const RunConfig& cfg, std::ostream& log) {
  const auto layout = load_layout(cfg);
  if (!layout) throw InvalidArgument("slice needs a grid sidecar (set grid = <path>)");
  const SliceSpec spec = parse_slice(cfg.slice);
  const SnapshotMatrix x = load_input(cfg, layout);
  const DmdResult res = obtain_result(cfg, x);
  if (res.modes.rows() != static_cast<Eigen::Index>(layout->dim()))
    throw InvalidArgument("result dimension does not match the grid layout");
  const auto table = mode_table(res, resolve_horizon(cfg, x), std::nullopt);
  const std::size_t channel = layout->channel_index(cfg.slice_channel);
  const double weight = layout->channels()[channel].weight;

  std::optional<std::size_t> cu, cv;
  for (std::size_t c = 0; c < layout->channels().size(); ++c) {
    if (layout->channels()[c].name == "Ux") cu = c;
    if (layout->channels()[c].name == "Uy") cv = c;
  }

  std::size_t files = 0;
  for (int m : slice_mode_indices(cfg, table)) {
    const auto& info = table[static_cast<std::size_t>(m - 1)];
    const Eigen::VectorXcd mode = res.modes.col(m - 1);
    const std::span<const cplx> stacked(mode.data(), static_cast<std::size_t>(mode.size()));
    // Physical field of the mode (pair members sum to twice the real part).
    const double pair = info.conj_partner ? 2.0 : 1.0;
    const cplx b = res.b[m - 1];

    const Slice2D s = extract_slice(stacked, *layout, channel, spec);
    std::string csv = "row,col,i,j,amplitude,phase\n";
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c) {
        const auto [i, j] = slice_ij(s, spec, r, c);
        csv += std::to_string(s.row_index[r]) + "," + std::to_string(c) + "," + std::to_string(i) + "," + std::to_string(j);
        if (s.has(r, c)) {
          const cplx v = s.at(r, c);
          const auto pm = polar_mode(std::span<const cplx>(&v, 1), b);
          csv += "," + format_g17(pair * pm.amplitude[0] / weight) + "," + format_g17(pm.phase[0]) + "\n";
        } else {
          csv += ",,\n";
        }
      }
    write_text_file(cfg.out / ("slice_mode" + std::to_string(m) + "_" + cfg.slice_channel + ".csv"), csv);
    ++files;

    if (cu && cv) {
      const Slice2D su = extract_slice(stacked, *layout, *cu, spec);
      const Slice2D sv = extract_slice(stacked, *layout, *cv, spec);
      const double wu = layout->channels()[*cu].weight, wv = layout->channels()[*cv].weight;
      std::string e = "row,col,i,j,semi_major,semi_minor,orientation,rotation\n";
      for (std::size_t r = 0; r < su.rows; ++r)
        for (std::size_t c = 0; c < su.cols; ++c) {
          const auto [i, j] = slice_ij(su, spec, r, c);
          e += std::to_string(su.row_index[r]) + "," + std::to_string(c) + "," + std::to_string(i) + "," + std::to_string(j);
          if (su.has(r, c) && sv.has(r, c)) {
            const auto el = tidal_ellipse(pair * b * su.at(r, c) / wu, pair * b * sv.at(r, c) / wv);
            e += "," + format_g17(el.semi_major) + "," + format_g17(el.semi_minor) + "," + format_g17(el.orientation) +
                 "," + to_string(el.rotation) + "\n";
          } else {
            e += ",,,,\n";
          }
        }
      write_text_file(cfg.out / ("slice_mode" + std::to_string(m) + "_ellipse.csv"), e);
      ++files;
    }
  }
  write_echo(cfg, "slice");
  log << "wrote " << files << " slice files for " << cfg.slice << " (channel " << cfg.slice_channel << ")\n";
}

void run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
  if (name == "synth") cmd_synth(cfg, log);
  else if (name == "run") cmd_run(cfg, log);
  else if (name == "loo") cmd_loo(cfg, log);
  else if (name == "rom") cmd_rom(cfg, log);
  else if (name == "slice") cmd_slice(cfg, log);
  else throw InvalidArgument("unknown command '" + name + "'");
}

}  // namespace kdmd
