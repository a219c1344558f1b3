#include "kdmd/result_io.hpp"

#include <limits>

#include "kdmd/errors.hpp"
#include "kdmd/formats.hpp"
#include "kdmd/spectrum.hpp"

namespace kdmd {

using nlohmann::ordered_json;

namespace {

ordered_json complex_list(const Eigen::VectorXcd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back({v[k].real(), v[k].imag()});
  return a;
}

ordered_json real_list(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Eigen::VectorXcd read_complex_list(const ordered_json& a, const std::string& key) {
  if (!a.is_array()) throw FormatError("result header field '" + key + "' is not an array");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_array() || a[k].size() != 2) throw FormatError("result header field '" + key + "' needs [re, im] pairs");
    v[static_cast<Eigen::Index>(k)] = {a[k][0].get<double>(), a[k][1].get<double>()};
  }
  return v;
}

Eigen::VectorXd read_real_list(const ordered_json& a, const std::string& key) {
  if (!a.is_array()) throw FormatError("result header field '" + key + "' is not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) v[static_cast<Eigen::Index>(k)] = a[k].get<double>();
  return v;
}

}  // namespace

ordered_json result_header(const DmdResult& result, const std::string& modes_file, const ordered_json& extra) {
  ordered_json j;
  j["schema_version"] = kResultSchemaVersion;
  j["kind"] = "dmd_result";
  j["r"] = result.rank();
  j["D"] = result.modes.rows();
  j["dt"] = result.dt;
  j["t0"] = result.t0;
  const auto& o = result.options;
  ordered_json opts;
  opts["rank"] = o.rank;
  opts["tlsq"] = o.use_tlsq;
  opts["tlsq_rank"] = o.tlsq_rank ? ordered_json(*o.tlsq_rank) : ordered_json(nullptr);
  opts["normalize_columns"] = o.normalize_columns;
  opts["mean_removal"] = o.remove_mean;
  opts["b_fit"] = describe(o.b_fit);
  opts["svd_mode"] = describe(o.svd_mode);
  j["options"] = std::move(opts);
  j["eigenvalues"] = complex_list(result.mu);
  j["b"] = complex_list(result.b);
  j["residuals"] = real_list(result.residuals);
  j["singular_values"] = real_list(result.singular_values);
  j["modes_file"] = modes_file;
  j["mean_mode"] = result.mean_mode ? real_list(*result.mean_mode) : ordered_json(nullptr);
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

void export_result(const DmdResult& result, const std::filesystem::path& dir, const std::string& stem,
                   const ordered_json& extra) {
  const std::string modes_file = stem + "_modes.dmdm";
  write_dmdm(dir / modes_file, result.modes, result.dt, result.t0);
  write_text_file(dir / (stem + ".json"), result_header(result, modes_file, extra).dump(2) + "\n");
}

DmdResult import_result(const std::filesystem::path& header_path) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_text_file(header_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_path.string() + ": " + e.what());
  }
  try {
    if (j.value("kind", "") != "dmd_result") throw FormatError(header_path.string() + " is not a DMD result header");
    if (j.at("schema_version").get<int>() != kResultSchemaVersion)
      throw FormatError(header_path.string() + ": unsupported schema version");
    DmdResult r;
    r.dt = j.at("dt").get<double>();
    r.t0 = j.at("t0").get<double>();
    const auto& o = j.at("options");
    r.options.rank = o.at("rank").get<int>();
    r.options.use_tlsq = o.at("tlsq").get<bool>();
    if (!o.at("tlsq_rank").is_null()) r.options.tlsq_rank = o.at("tlsq_rank").get<int>();
    r.options.normalize_columns = o.at("normalize_columns").get<bool>();
    r.options.remove_mean = o.at("mean_removal").get<bool>();
    r.options.b_fit = parse_fit(o.at("b_fit").get<std::string>());
    r.options.svd_mode = parse_svd_mode(o.at("svd_mode").get<std::string>());
    r.mu = read_complex_list(j.at("eigenvalues"), "eigenvalues");
    r.b = read_complex_list(j.at("b"), "b");
    r.residuals = read_real_list(j.at("residuals"), "residuals");
    r.singular_values = read_real_list(j.at("singular_values"), "singular_values");
    if (!j.at("mean_mode").is_null()) r.mean_mode = read_real_list(j.at("mean_mode"), "mean_mode");
    const auto modes = read_dmdm(header_path.parent_path() / j.at("modes_file").get<std::string>());
    r.modes = modes.modes;
    const Eigen::Index rank = r.mu.size();
    if (r.modes.cols() != rank || r.b.size() != rank || r.residuals.size() != rank)
      throw FormatError(header_path.string() + ": mode count disagrees with the eigenvalue count");
    if (r.mean_mode && r.mean_mode->size() != r.modes.rows())
      throw FormatError(header_path.string() + ": mean mode length disagrees with the mode dimension");
    r.gamma.resize(rank);
    for (Eigen::Index k = 0; k < rank; ++k)
      r.gamma[k] = r.mu[k] == cplx(0.0) ? cplx(-std::numeric_limits<double>::infinity(), 0.0) : to_continuous(r.mu[k], r.dt);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_path.string() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(header_path.string() + ": " + e.what());
  }
}

}  // namespace kdmd
