#include "kdmd/formats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kdmd/errors.hpp"

namespace kdmd {

namespace fs = std::filesystem;

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8 + 8 + 8;

template <typename T>
void put_le(std::string& buf, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.append(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(const fs::path& path, const std::string& bytes, std::ios::openmode mode) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::string header(const char magic[4], std::uint64_t rows, std::uint64_t cols, double dt, double t0) {
  std::string buf;
  buf.append(magic, 4);
  put_le<std::uint32_t>(buf, kVersion);
  put_le<std::uint64_t>(buf, rows);
  put_le<std::uint64_t>(buf, cols);
  put_le<double>(buf, dt);
  put_le<double>(buf, t0);
  return buf;
}

struct Header {
  std::uint64_t rows, cols;
  double dt, t0;
};

Header parse_header(const std::string& bytes, const char magic[4], std::size_t entry_bytes, const fs::path& path) {
  if (bytes.size() < kHeaderBytes) throw FormatError("'" + path.string() + "': truncated header");
  if (std::memcmp(bytes.data(), magic, 4) != 0)
    throw FormatError("'" + path.string() + "': bad magic, expected " + std::string(magic, 4));
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kVersion) throw FormatError("'" + path.string() + "': unsupported version " + std::to_string(version));
  Header h{get_le<std::uint64_t>(bytes.data() + 8), get_le<std::uint64_t>(bytes.data() + 16),
           get_le<double>(bytes.data() + 24), get_le<double>(bytes.data() + 32)};
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (h.rows != 0 && h.cols > payload / h.rows / entry_bytes + 1)
    throw FormatError("'" + path.string() + "': header dimensions inconsistent with payload length");
  if (h.rows * h.cols * entry_bytes != payload)
    throw FormatError("'" + path.string() + "': header declares " + std::to_string(h.rows) + "x" +
                      std::to_string(h.cols) + " values but payload holds " + std::to_string(payload) + " bytes");
  return h;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (t == "nan" || t == "NaN" || t == "NAN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || t.empty()) throw FormatError(where + ": cannot parse number '" + t + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string format_g17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf.data(), ptr);
}

void write_text_file(const fs::path& path, const std::string& contents) { write_all(path, contents, std::ios::out); }
std::string read_text_file(const fs::path& path) { return read_all(path); }

SnapshotFormat parse_snapshot_format(const std::string& name) {
  if (name == "dmds") return SnapshotFormat::dmds;
  if (name == "csv") return SnapshotFormat::csv;
  throw InvalidArgument("unknown snapshot format '" + name + "'");
}

SnapshotFormat guess_snapshot_format(const fs::path& path) {
  return path.extension() == ".csv" ? SnapshotFormat::csv : SnapshotFormat::dmds;
}

void write_dmds(const fs::path& path, const Eigen::MatrixXd& data, double dt, double t0) {
  std::string buf = header("DMDS", static_cast<std::uint64_t>(data.rows()), static_cast<std::uint64_t>(data.cols()), dt, t0);
  buf.reserve(buf.size() + static_cast<std::size_t>(data.size()) * 8);
  for (Eigen::Index c = 0; c < data.cols(); ++c)
    for (Eigen::Index r = 0; r < data.rows(); ++r) put_le<double>(buf, data(r, c));
  write_all(path, buf, std::ios::binary);
}

RawSnapshots read_dmds_raw(const fs::path& path) {
  const std::string bytes = read_all(path);
  const Header h = parse_header(bytes, "DMDS", 8, path);
  RawSnapshots out;
  out.dt = h.dt;
  out.t0 = h.t0;
  out.data.resize(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  const char* p = bytes.data() + kHeaderBytes;
  for (Eigen::Index c = 0; c < out.data.cols(); ++c)
    for (Eigen::Index r = 0; r < out.data.rows(); ++r, p += 8) out.data(r, c) = get_le<double>(p);
  return out;
}

RawSnapshots read_csv_raw(const fs::path& path) {
  std::istringstream in(read_all(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "': empty CSV");
  std::vector<double> times;
  for (const auto& cell : split(trim(line), ',')) {
    const std::string c = trim(cell);
    if (c.rfind("t=", 0) != 0) throw FormatError("'" + path.string() + "': header cell '" + c + "' is not t=<hours>");
    times.push_back(parse_double(c.substr(2), path.string()));
  }
  if (times.empty()) throw FormatError("'" + path.string() + "': CSV header has no columns");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (cells.size() != times.size())
      throw FormatError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                        std::to_string(times.size()) + " values, got " + std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c, path.string() + " line " + std::to_string(lineno)));
    rows.push_back(std::move(row));
  }
  RawSnapshots out;
  out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(times.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < times.size(); ++c) out.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  out.t0 = times.front();
  out.dt = times.size() > 1 ? times[1] - times[0] : 1.0;
  for (std::size_t c = 1; c < times.size(); ++c)
    if (std::abs((times[c] - times[c - 1]) - out.dt) > 1e-9 * std::max(1.0, std::abs(out.dt)))
      throw FormatError("'" + path.string() + "': CSV time stamps are not uniformly spaced");
  return out;
}

void write_csv_snapshots(const fs::path& path, const SnapshotMatrix& x) {
  std::string s;
  for (Eigen::Index c = 0; c < x.count(); ++c) {
    if (c) s += ',';
    s += "t=" + format_g17(x.t0 + x.dt * static_cast<double>(c));
  }
  s += '\n';
  for (Eigen::Index r = 0; r < x.dim(); ++r) {
    for (Eigen::Index c = 0; c < x.count(); ++c) {
      if (c) s += ',';
      s += format_g17(x.data(r, c));
    }
    s += '\n';
  }
  write_text_file(path, s);
}

SnapshotMatrix ingest(const fs::path& path, SnapshotFormat format, std::shared_ptr<const GridLayout> layout) {
  RawSnapshots raw = format == SnapshotFormat::dmds ? read_dmds_raw(path) : read_csv_raw(path);
  if (raw.data.cols() < 2)
    throw FormatError("'" + path.string() + "': need at least 2 snapshots, file has " + std::to_string(raw.data.cols()));
  Eigen::MatrixXd data;
  if (layout && raw.data.rows() != static_cast<Eigen::Index>(layout->dim())) {
    const auto nchan = layout->channels().size();
    const auto cells = layout->cell_count();
    if (raw.data.rows() != static_cast<Eigen::Index>(nchan * cells))
      throw FormatError("'" + path.string() + "': D=" + std::to_string(raw.data.rows()) +
                        " matches neither the stacked (" + std::to_string(layout->dim()) + ") nor the gridded (" +
                        std::to_string(nchan * cells) + ") layout dimension");
    data.resize(static_cast<Eigen::Index>(layout->dim()), raw.data.cols());
    const auto& ocean = layout->ocean_cells();
    for (std::size_t ch = 0; ch < nchan; ++ch)
      for (std::size_t p = 0; p < ocean.size(); ++p)
        data.row(static_cast<Eigen::Index>(ch * ocean.size() + p)) = raw.data.row(static_cast<Eigen::Index>(ch * cells + ocean[p]));
  } else {
    data = std::move(raw.data);
  }
  for (Eigen::Index c = 0; c < data.cols(); ++c)
    for (Eigen::Index r = 0; r < data.rows(); ++r)
      if (!std::isfinite(data(r, c)))
        throw FormatError("'" + path.string() + "': non-finite value on unmasked row " + std::to_string(r) +
                          ", snapshot " + std::to_string(c));
  if (!(raw.dt > 0.0) || !std::isfinite(raw.dt)) throw FormatError("'" + path.string() + "': time step must be positive");
  return SnapshotMatrix(std::move(data), raw.dt, raw.t0, std::move(layout));
}

void write_dmdm(const fs::path& path, const Eigen::MatrixXcd& modes, double dt, double t0) {
  std::string buf = header("DMDM", static_cast<std::uint64_t>(modes.rows()), static_cast<std::uint64_t>(modes.cols()), dt, t0);
  buf.reserve(buf.size() + static_cast<std::size_t>(modes.size()) * 16);
  for (Eigen::Index c = 0; c < modes.cols(); ++c)
    for (Eigen::Index r = 0; r < modes.rows(); ++r) {
      put_le<double>(buf, modes(r, c).real());
      put_le<double>(buf, modes(r, c).imag());
    }
  write_all(path, buf, std::ios::binary);
}

RawModes read_dmdm(const fs::path& path) {
  const std::string bytes = read_all(path);
  const Header h = parse_header(bytes, "DMDM", 16, path);
  RawModes out;
  out.dt = h.dt;
  out.t0 = h.t0;
  out.modes.resize(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  const char* p = bytes.data() + kHeaderBytes;
  for (Eigen::Index c = 0; c < out.modes.cols(); ++c)
    for (Eigen::Index r = 0; r < out.modes.rows(); ++r, p += 16)
      out.modes(r, c) = cplx(get_le<double>(p), get_le<double>(p + 8));
  return out;
}

void write_grid_sidecar(const fs::path& path, const GridLayout& layout) {
  nlohmann::ordered_json j;
  j["nx"] = layout.nx();
  j["ny"] = layout.ny();
  j["nz"] = layout.nz();
  j["channels"] = nlohmann::ordered_json::array();
  for (const auto& ch : layout.channels()) j["channels"].push_back({{"name", ch.name}, {"weight", ch.weight}});
  std::vector<int> mask(layout.mask().begin(), layout.mask().end());
  j["mask"] = mask;
  j["stacking_order"] = GridLayout::kStackingOrder;
  write_text_file(path, j.dump(2) + "\n");
}

GridLayout read_grid_sidecar(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_all(path));
    if (j.value("stacking_order", std::string(GridLayout::kStackingOrder)) != GridLayout::kStackingOrder)
      throw FormatError("'" + path.string() + "': unsupported stacking order");
    std::vector<Channel> channels;
    for (const auto& c : j.at("channels")) channels.push_back({c.at("name").get<std::string>(), c.at("weight").get<double>()});
    std::vector<std::uint8_t> mask;
    if (j.contains("mask"))
      for (const auto& m : j.at("mask")) mask.push_back(m.get<int>() != 0 ? 1 : 0);
    return GridLayout(j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>(), j.at("nz").get<std::size_t>(),
                      std::move(mask), std::move(channels));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': malformed grid sidecar: " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

}  // namespace kdmd
