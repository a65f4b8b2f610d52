#include "tearfilm/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <memory>
#include <sstream>

namespace tearfilm::io {

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char ch : cell) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : path_(path), columns_(header.size()), out_(path, std::ios::binary) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  write(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw DimensionError(path_.string() + ": row has " + std::to_string(cells.size()) +
                         " cells, header has " + std::to_string(columns_));
  }
  write(cells);
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

void CsvWriter::write(const std::vector<std::string>& cells) {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out_ << ',';
    out_ << quote(cells[k]);
  }
  out_ << "\r\n";
}

// ---------------------------------------------------------------------------
// Binary fields

namespace {

std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

fs::path with_suffix(fs::path p, const char* ext) { return p.replace_extension(ext); }

}  // namespace

std::vector<fs::path> write_field(const fs::path& base, const Eigen::VectorXd& values,
                                  const FieldMeta& meta) {
  if (static_cast<Eigen::Index>(meta.nx) * meta.ny != values.size()) {
    throw DimensionError("field size does not match " + std::to_string(meta.nx) + "x" +
                         std::to_string(meta.ny));
  }
  const fs::path bin = with_suffix(base, ".bin");
  const fs::path side = with_suffix(base, ".json");
  std::string bytes(static_cast<std::size_t>(values.size()) * 8, '\0');
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
    std::memcpy(bytes.data() + 8 * i, &bits, 8);
  }
  write_atomic(bin, bytes);
  const json j = {{"file", bin.filename().string()},
                  {"variable", meta.variable},
                  {"time", meta.time},
                  {"nx", meta.nx},
                  {"ny", meta.ny},
                  {"dtype", "float64"},
                  {"byte_order", "little"},
                  {"layout", "row-major, x fastest"}};
  write_atomic(side, j.dump(2) + "\n");
  return {bin, side};
}

Eigen::VectorXd read_field(const fs::path& path, FieldMeta* meta) {
  const fs::path bin = with_suffix(path, ".bin");
  const fs::path side = with_suffix(path, ".json");
  std::ifstream js(side);
  if (!js) throw std::runtime_error("cannot read " + side.string());
  const json j = json::parse(js);
  if (j.at("dtype") != "float64" || j.at("byte_order") != "little") {
    throw std::runtime_error(side.string() + ": unsupported element type or byte order");
  }
  FieldMeta m{j.at("variable").get<std::string>(), j.at("time").get<double>(), j.at("nx").get<int>(),
              j.at("ny").get<int>()};
  const auto n = static_cast<Eigen::Index>(m.nx) * m.ny;
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + bin.string());
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), 8);
    if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
    out[i] = std::bit_cast<double>(bits);
  }
  if (!in) throw std::runtime_error(bin.string() + " is shorter than its sidecar states");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error(bin.string() + " is longer than its sidecar states");
  }
  if (meta) *meta = m;
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// ---------------------------------------------------------------------------
// Solution products

std::vector<fs::path> write_traces(const fs::path& dir, const dae::SolutionRecord& rec) {
  fs::create_directories(dir);
  std::vector<fs::path> files;
  for (std::size_t k = 0; k < rec.probes.size(); ++k) {
    const auto& pr = rec.probes[k];
    const fs::path path = dir / ("probe_" + std::to_string(k) + ".csv");
    CsvWriter csv(path, {"t", "x", "y", "h", "p", "c", "f", "I", "advection", "diffusion",
                         "evaporation", "osmosis"});
    for (std::size_t i = 0; i < pr.samples.size(); ++i) {
      const auto& s = pr.samples[i];
      csv.row(std::vector<double>{rec.trace_times[i], pr.x, pr.y, s.h, s.p, s.c, s.f, s.I, s.advection,
                                  s.diffusion, s.evaporation, s.osmosis});
    }
    csv.close();
    files.push_back(path);
  }
  const fs::path diag = dir / "diagnostics.csv";
  CsvWriter csv(diag, {"t", "solute_c", "solute_f", "water", "water_rate", "wall_seconds"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < rec.trace_times.size(); ++i) {
    csv.row(std::vector<double>{rec.trace_times[i], rec.solute_c[i],
                                i < rec.solute_f.size() ? rec.solute_f[i] : nan, rec.water[i],
                                rec.water_rate[i], rec.trace_wall[i]});
  }
  csv.close();
  files.push_back(diag);
  return files;
}

std::vector<fs::path> write_snapshots(const fs::path& dir, const dae::SolutionRecord& rec,
                                      const model::ModelParams& params) {
  const fs::path sub = dir / "snapshots";
  fs::create_directories(sub);
  std::vector<fs::path> files;
  const int nx = rec.grid.nx();
  const int ny = rec.grid.ny();
  auto emit = [&](const std::string& var, std::size_t k, const Field& v, double t) {
    std::ostringstream name;
    name << var << "_" << std::setw(4) << std::setfill('0') << k;
    for (auto& p : write_field(sub / name.str(), v.matrix(), {var, t, nx, ny})) files.push_back(p);
  };
  for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
    const auto& s = rec.snapshots[k];
    emit("h", k, s.h, rec.times[k]);
    emit("p", k, s.p, rec.times[k]);
    emit("c", k, s.c, rec.times[k]);
    if (s.f.size() != 0) {
      emit("f", k, s.f, rec.times[k]);
      emit("I", k, model::fl_intensity(s.h, s.f, params), rec.times[k]);
    }
  }
  return files;
}

fs::path write_manifest(const fs::path& dir, const Manifest& m) {
  json files = json::array();
  for (const auto& rel : m.files) {
    const fs::path abs = dir / rel;
    if (!fs::exists(abs)) throw std::runtime_error("manifest lists missing file " + abs.string());
    files.push_back({{"path", rel.generic_string()},
                     {"bytes", fs::file_size(abs)},
                     {"sha256", sha256_file(abs)}});
  }
  const json j = {{"code_version", TEARFILM_VERSION},
                  {"started", m.started},
                  {"finished", m.finished},
                  {"config", m.config},
                  {"results", m.results},
                  {"files", files}};
  const fs::path path = dir / "manifest.json";
  write_atomic(path, j.dump(2) + "\n");
  return path;
}

}  // namespace tearfilm::io
