#pragma once

#include <ostream>
#include <string>

#include "kdmd/run_config.hpp"

namespace kdmd {

// Each command writes its files under cfg.out, echoes the resolved config
// next to them and prints a short human summary to `log`. Errors are thrown
// as kdmd::Error subclasses.

void cmd_synth(const RunConfig& cfg, std::ostream& log);
void cmd_run(const RunConfig& cfg, std::ostream& log);
void cmd_loo(const RunConfig& cfg, std::ostream& log);
void cmd_rom(const RunConfig& cfg, std::ostream& log);
void cmd_slice(const RunConfig& cfg, std::ostream& log);

/// Dispatches by name ("synth", "run", "loo", "rom", "slice").
void run_command(const std::string& name, const RunConfig& cfg, std::ostream& log);

}  // namespace kdmd
