#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kdmd/commands.hpp"
#include "kdmd/errors.hpp"
#include "kdmd/run_config.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> seed, rank, tlsq, mean_removal, bfit, out, input, grid, result;
  std::vector<std::string> settings;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "key = value config file");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--rank", o.rank, "truncation rank r, or auto");
  sub->add_option("--tlsq", o.tlsq, "total least squares projection")->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--mean-removal", o.mean_removal, "subtract the temporal mean")->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--bfit", o.bfit, "amplitude fit: first | multi:<k>");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--input", o.input, "snapshot file (.dmds or .csv)");
  sub->add_option("--grid", o.grid, "grid sidecar JSON");
  sub->add_option("--result", o.result, "exported result header to reuse");
  sub->add_option("--set", o.settings, "extra key=value setting (repeatable)");
}

kdmd::RunConfig resolve(const Overrides& o) {
  kdmd::RunConfig cfg = o.config.empty() ? kdmd::RunConfig{} : kdmd::load_config(o.config);
  auto set = [&](const char* key, const std::optional<std::string>& v) {
    if (v) kdmd::apply_setting(cfg, key, *v);
  };
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw kdmd::InvalidArgument("--set expects key=value, got '" + s + "'");
    kdmd::apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  set("seed", o.seed);
  set("rank", o.rank);
  set("tlsq", o.tlsq);
  set("mean_removal", o.mean_removal);
  set("bfit", o.bfit);
  set("out", o.out);
  set("input", o.input);
  set("grid", o.grid);
  set("result", o.result);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kdmd: dynamic mode decomposition of gridded snapshot data"};
  app.require_subcommand(1);
  Overrides o;
  const std::pair<const char*, const char*> commands[] = {
      {"synth", "generate a synthetic dataset with a known spectrum"},
      {"run", "decompose snapshots and write the spectrum table"},
      {"loo", "leave-one-out robustness and eigenvalue clustering"},
      {"rom", "reduced-order reconstructions and their error curves"},
      {"slice", "amplitude, phase and ellipse slices of selected modes"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const kdmd::RunConfig cfg = resolve(o);
    kdmd::run_command(app.get_subcommands().front()->get_name(), cfg, std::cout);
  } catch (const kdmd::Error& e) {
    std::cerr << "kdmd: " << e.what() << "\n";
    return kdmd::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "kdmd: " << e.what() << "\n";
    return kdmd::exit_code(kdmd::ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "kdmd: " << e.what() << "\n";
    return kdmd::exit_code(kdmd::ErrorKind::numerical);
  }
  return 0;
}
