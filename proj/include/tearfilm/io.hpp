#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tearfilm/solver.hpp"

namespace tearfilm::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Shortest text that parses back to the same double.
std::string format_number(double v);

/// RFC 4180 CSV: header row, cells quoted when they contain separators,
/// quotes or line breaks.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& values);
  void close();

 private:
  void write(const std::vector<std::string>& cells);
  fs::path path_;
  std::size_t columns_;
  std::ofstream out_;
};

struct FieldMeta {
  std::string variable;
  double time = 0.0;
  int nx = 0;
  int ny = 0;
};

/// Writes <base>.bin (little-endian float64, x fastest) and <base>.json.
/// Returns both paths.
std::vector<fs::path> write_field(const fs::path& base, const Eigen::VectorXd& values,
                                  const FieldMeta& meta);
/// Reads a field written by write_field, given either path.
Eigen::VectorXd read_field(const fs::path& path, FieldMeta* meta = nullptr);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const fs::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const fs::path& path, const std::string& contents);

/// Per-probe trace CSVs (probe_<k>.csv) and diagnostics.csv. Returns the
/// files written.
std::vector<fs::path> write_traces(const fs::path& dir, const dae::SolutionRecord& rec);

/// Snapshot fields (h, p, c and, when present, f and I) under dir/snapshots.
std::vector<fs::path> write_snapshots(const fs::path& dir, const dae::SolutionRecord& rec,
                                      const model::ModelParams& params);

/// Current UTC time, ISO 8601.
std::string utc_now();

struct Manifest {
  json config;
  std::string started;
  std::string finished;
  json results = json::object();
  std::vector<fs::path> files;  // relative to the run directory
};

/// Writes dir/manifest.json atomically with checksums of every listed file.
fs::path write_manifest(const fs::path& dir, const Manifest& m);

}  // namespace tearfilm::io
