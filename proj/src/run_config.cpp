#include "kdmd/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/rom.hpp"

namespace kdmd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double d = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(d))
    throw InvalidArgument("setting '" + key + "' needs a finite number, got '" + v + "'");
  return d;
}

long to_long(const std::string& key, const std::string& v) {
  long n = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size())
    throw InvalidArgument("setting '" + key + "' needs an integer, got '" + v + "'");
  return n;
}

double positive(const std::string& key, double v) {
  if (!(v > 0.0)) throw InvalidArgument("setting '" + key + "' must be positive");
  return v;
}

SynthModeSpec parse_synth_mode(const std::string& label, const std::string& value) {
  // <sigma> <omega> <|b|> <arg b> [profile] [slope]
  std::istringstream in(value);
  std::vector<std::string> f;
  for (std::string t; in >> t;) f.push_back(t);
  const std::string key = "synth.mode." + label;
  if (f.size() < 4 || f.size() > 6)
    throw InvalidArgument("setting '" + key + "' needs '<sigma> <omega> <|b|> <arg b> [profile] [slope]'");
  SynthModeSpec m;
  m.label = label;
  m.gamma = {to_double(key, f[0]), to_double(key, f[1])};
  m.b = std::polar(to_double(key, f[2]), to_double(key, f[3]));
  if (f.size() >= 5) m.profile = parse_profile(f[4]);
  if (f.size() == 6) m.phase_slope = to_double(key, f[5]);
  return m;
}

std::string on_off(bool b) { return b ? "on" : "off"; }

}  // namespace

bool parse_switch(const std::string& value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  throw InvalidArgument("expected on|off, got '" + value + "'");
}

ProfileKind parse_profile(const std::string& value) {
  if (value == "orthogonalized") return ProfileKind::orthogonalized;
  if (value == "random_unit") return ProfileKind::random_unit;
  if (value == "phase_ramp") return ProfileKind::phase_ramp;
  throw InvalidArgument("profile must be orthogonalized, random_unit or phase_ramp, got '" + value + "'");
}

std::string to_string(ProfileKind p) {
  switch (p) {
    case ProfileKind::orthogonalized: return "orthogonalized";
    case ProfileKind::random_unit: return "random_unit";
    case ProfileKind::phase_ramp: return "phase_ramp";
    case ProfileKind::explicit_vector: return "explicit";
  }
  return "?";
}

void apply_setting(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "input") c.input = v;
  else if (key == "input_format") {
    if (v != "auto" && v != "dmds" && v != "csv") throw InvalidArgument("input_format must be auto, dmds or csv");
    c.input_format = v;
  } else if (key == "grid") c.grid = v;
  else if (key == "result") c.result = v;
  else if (key == "out") {
    if (v.empty()) throw InvalidArgument("out must not be empty");
    c.out = v;
  } else if (key == "rank") {
    if (v == "auto") c.rank.reset();
    else {
      const long r = to_long(key, v);
      if (r < 1) throw InvalidArgument("rank must be >= 1");
      c.rank = static_cast<int>(r);
    }
  } else if (key == "tlsq") c.tlsq = parse_switch(v);
  else if (key == "tlsq_rank") {
    if (v == "auto") c.tlsq_rank.reset();
    else {
      const long r = to_long(key, v);
      if (r < 1) throw InvalidArgument("tlsq_rank must be >= 1");
      c.tlsq_rank = static_cast<int>(r);
    }
  } else if (key == "normalize") c.normalize = parse_switch(v);
  else if (key == "mean_removal") c.mean_removal = parse_switch(v);
  else if (key == "bfit") c.b_fit = parse_fit(v);
  else if (key == "svd") c.svd = parse_svd_mode(v);
  else if (key == "seed") {
    std::uint64_t s = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || p != v.data() + v.size()) throw InvalidArgument("seed must be a non-negative integer");
    c.seed = s;
  } else if (key == "loo_trials") {
    const long t = to_long(key, v);
    if (t < 1) throw InvalidArgument("loo_trials must be >= 1");
    c.loo_trials = static_cast<int>(t);
  } else if (key == "h_robust") c.h_robust = positive(key, to_double(key, v));
  else if (key == "h_cluster") c.h_cluster = positive(key, to_double(key, v));
  else if (key == "cluster_level") {
    c.cluster_level = to_double(key, v);
    if (!(c.cluster_level > 0.0 && c.cluster_level < 1.0)) throw InvalidArgument("cluster_level must lie in (0, 1)");
  } else if (key == "horizon") {
    if (v == "auto") c.horizon.reset();
    else c.horizon = positive(key, to_double(key, v));
  } else if (key == "persistence_factor") {
    c.persistence_factor = to_double(key, v);
    if (!(c.persistence_factor > 0.0 && c.persistence_factor < 1.0))
      throw InvalidArgument("persistence_factor must lie in (0, 1)");
  } else if (key == "vertical_channel") c.vertical_channel = v;
  else if (key.rfind("rom.", 0) == 0) {
    const std::string name = key.substr(4);
    if (name.empty() || name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") != std::string::npos)
      throw InvalidArgument("ROM name '" + name + "' may only use letters, digits, '_' and '-'");
    parse_selection(v, 1.0);
    auto it = std::find_if(c.roms.begin(), c.roms.end(), [&](const RomSpec& r) { return r.name == name; });
    if (it != c.roms.end()) it->selection = v;
    else c.roms.push_back({name, v});
  } else if (key == "slice") c.slice = v;
  else if (key == "slice_channel") c.slice_channel = v;
  else if (key == "slice_modes") c.slice_modes = v;
  else if (key == "synth_preset") {
    if (v != "tidal" && v != "custom") throw InvalidArgument("synth_preset must be tidal or custom");
    c.synth_preset = v;
  } else if (key == "synth_dim") {
    c.synth_dim = to_long(key, v);
    if (c.synth_dim < 1) throw InvalidArgument("synth_dim must be >= 1");
  } else if (key == "synth_count") {
    c.synth_count = to_long(key, v);
    if (c.synth_count < 2) throw InvalidArgument("synth_count must be >= 2");
  } else if (key == "synth_dt") c.synth_dt = positive(key, to_double(key, v));
  else if (key == "synth_t0") c.synth_t0 = to_double(key, v);
  else if (key == "synth_noise") {
    c.synth_noise = to_double(key, v);
    if (c.synth_noise < 0.0) throw InvalidArgument("synth_noise must be >= 0");
  } else if (key == "synth_profile") c.synth_profile = parse_profile(v);
  else if (key.rfind("synth.mode.", 0) == 0) {
    const std::string label = key.substr(11);
    if (label.empty()) throw InvalidArgument("synth.mode needs a label");
    auto m = parse_synth_mode(label, v);
    auto it = std::find_if(c.synth_modes.begin(), c.synth_modes.end(), [&](const auto& s) { return s.label == label; });
    if (it != c.synth_modes.end()) *it = m;
    else c.synth_modes.push_back(m);
  } else {
    throw InvalidArgument("unknown setting '" + key + "'");
  }
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path), path.string()); }

std::string echo_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& v) { o << k << " = " << v << "\n"; };
  o << "# kdmd config, schema_version 1\n";
  kv("input", c.input.string());
  kv("input_format", c.input_format);
  kv("grid", c.grid.string());
  kv("result", c.result.string());
  kv("out", c.out.string());
  kv("rank", c.rank ? std::to_string(*c.rank) : "auto");
  kv("tlsq", on_off(c.tlsq));
  kv("tlsq_rank", c.tlsq_rank ? std::to_string(*c.tlsq_rank) : "auto");
  kv("normalize", on_off(c.normalize));
  kv("mean_removal", on_off(c.mean_removal));
  kv("bfit", describe(c.b_fit));
  kv("svd", describe(c.svd));
  kv("seed", std::to_string(c.seed));
  kv("loo_trials", std::to_string(c.loo_trials));
  kv("h_robust", format_g17(c.h_robust));
  kv("h_cluster", format_g17(c.h_cluster));
  kv("cluster_level", format_g17(c.cluster_level));
  kv("horizon", c.horizon ? format_g17(*c.horizon) : "auto");
  kv("persistence_factor", format_g17(c.persistence_factor));
  kv("vertical_channel", c.vertical_channel);
  for (const auto& r : c.roms) kv("rom." + r.name, r.selection);
  kv("slice", c.slice);
  kv("slice_channel", c.slice_channel);
  kv("slice_modes", c.slice_modes);
  kv("synth_preset", c.synth_preset);
  kv("synth_dim", std::to_string(c.synth_dim));
  kv("synth_count", std::to_string(c.synth_count));
  kv("synth_dt", format_g17(c.synth_dt));
  kv("synth_t0", format_g17(c.synth_t0));
  kv("synth_noise", format_g17(c.synth_noise));
  kv("synth_profile", to_string(c.synth_profile));
  for (const auto& m : c.synth_modes)
    kv("synth.mode." + m.label, format_g17(m.gamma.real()) + " " + format_g17(m.gamma.imag()) + " " +
                                    format_g17(std::abs(m.b)) + " " + format_g17(std::arg(m.b)) + " " +
                                    to_string(m.profile) + " " + format_g17(m.phase_slope));
  return o.str();
}

int data_rank(const SnapshotMatrix& x, bool mean_removal) {
  const Eigen::MatrixXd data = mean_removal ? remove_temporal_mean(x).centered.data : x.data;
  const Eigen::MatrixXd x1 = data.leftCols(data.cols() - 1);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(x1);
  return numerical_rank(svd.singularValues(), x1.rows(), x1.cols());
}

DmdOptions resolve_options(const RunConfig& c, const SnapshotMatrix& x) {
  DmdOptions o;
  const int cap = static_cast<int>(x.count()) - 4;
  if (c.rank) {
    o.rank = *c.rank;
  } else {
    if (cap < 1) throw InvalidArgument("default rank needs N >= 5 snapshots; set rank explicitly");
    o.rank = std::min(data_rank(x, c.mean_removal), cap);
    if (o.rank < 1) throw NumericalError("snapshot data has numerical rank 0");
  }
  o.use_tlsq = c.tlsq;
  o.tlsq_rank = c.tlsq_rank;
  o.normalize_columns = c.normalize;
  o.remove_mean = c.mean_removal;
  o.b_fit = c.b_fit;
  o.svd_mode = c.svd;
  return o;
}

double resolve_horizon(const RunConfig& c, const SnapshotMatrix& x) {
  return c.horizon ? *c.horizon : static_cast<double>(x.count() - 1) * x.dt;
}

OracleSpec synth_spec(const RunConfig& c) {
  OracleSpec s;
  s.dim = c.synth_dim;
  s.count = c.synth_count;
  s.dt = c.synth_dt;
  s.t0 = c.synth_t0;
  s.noise_sigma = c.synth_noise;
  s.seed = c.seed;
  if (c.synth_preset == "tidal") {
    s.modes = tidal_modes(c.seed, c.synth_profile);
  } else {
    if (c.synth_modes.empty()) throw InvalidArgument("synth_preset = custom needs at least one synth.mode.<label>");
    for (const auto& m : c.synth_modes) {
      OracleMode o;
      o.gamma = m.gamma;
      // polar(|b|, pi) leaves a rounding-level imaginary part on real generators
      o.b = m.gamma.imag() == 0.0 && std::abs(m.b.imag()) <= 1e-12 * std::abs(m.b) ? cplx(m.b.real(), 0.0) : m.b;
      o.profile = m.profile;
      o.phase_slope = m.phase_slope;
      o.label = m.label;
      s.modes.push_back(std::move(o));
    }
  }
  return s;
}

}  // namespace kdmd
