#pragma once

// DmdResult export: a JSON header next to a DMDM mode file.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "kdmd/dmd_core.hpp"

namespace kdmd {

inline constexpr int kResultSchemaVersion = 1;

/// Header JSON for `result`; `modes_file` is stored relative to the header.
/// Keys from `extra` are appended after the standard ones.
nlohmann::ordered_json result_header(const DmdResult& result, const std::string& modes_file,
                                     const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>_modes.dmdm`.
void export_result(const DmdResult& result, const std::filesystem::path& dir, const std::string& stem,
                   const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());

/// Reads a header written by export_result together with its mode file.
DmdResult import_result(const std::filesystem::path& header_path);

}  // namespace kdmd
