#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tearfilm/pod.hpp"

namespace tearfilm::config {

using nlohmann::json;

/// Invalid configuration. The message names the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { full, pod, radial1d, streak1d, grid_study, pod_error_study };
std::string to_string(Mode m);

struct PodSettings {
  double tau = 0.5;
  int snapshots = 0;  // 0: default for tau
  std::optional<pod::PodRanks> ranks;
  std::string source = "full2d";  // full2d | radial
  /// Restart the reduced solve at t = 0; otherwise continue from the full state at tau.
  bool restart = true;
  bool reduce_f = true;
  double radial_horizon = 3.0;
  std::string basis_file;  // load instead of computing when set
  bool save_basis = true;

  pod::PodRanks effective_ranks() const;
  int effective_snapshots() const;
};

struct RadialSettings {
  double R0 = 3.141592653589793;
  int n = 81;
};

struct StreakSettings {
  int nx = 128;
};

struct GridStudySettings {
  std::vector<int> sizes{20, 30, 40, 50, 60, 80};
  int reference = 100;
  double time = 2.4;
};

struct OutputSettings {
  std::string directory = "out";
  double snapshot_every = 0.1;
  std::vector<double> snapshot_times;
  /// Empty: every peak centre plus the origin.
  std::vector<std::pair<double, double>> probes;
  bool write_snapshots = true;
};

struct RunConfig {
  Mode mode = Mode::full;
  model::ModelParams model;
  int nx = 60;
  int ny = 60;
  model::EvaporationMap evaporation{0.1, {model::EvaporationPeak{}}, false};
  dae::IntegratorConfig integrator;
  PodSettings pod;
  RadialSettings radial;
  StreakSettings streak;
  GridStudySettings grid_study;
  OutputSettings outputs;

  /// Probe points after defaults are applied, origin first.
  std::vector<std::pair<double, double>> probe_points() const;
  /// Integrator settings with the output cadence and probes folded in.
  dae::IntegratorConfig effective_integrator() const;
  void validate() const;
};

/// Strict parse: unknown keys and wrongly typed values throw ConfigError.
RunConfig parse_config(const json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Fully populated echo of a configuration (round-trips through parse_config).
json to_json(const RunConfig& c);

struct SweepAxis {
  /// x_w, y_w, x_w_fixed_product, x_k or a.
  std::string name;
  std::vector<double> values;
  double product = 0.25;  // x_w * y_w for x_w_fixed_product
};

struct SweepConfig {
  RunConfig base;
  SweepAxis axis;
};

SweepConfig parse_sweep(const json& j);
SweepConfig load_sweep(const std::filesystem::path& path);
RunConfig apply_axis(const RunConfig& base, const SweepAxis& axis, double value);

json read_json(const std::filesystem::path& path);

}  // namespace tearfilm::config
