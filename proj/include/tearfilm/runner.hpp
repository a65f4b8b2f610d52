#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tearfilm/config.hpp"

namespace tearfilm::runner {

namespace fs = std::filesystem;
using config::json;
using config::RunConfig;

struct RunSummary {
  bool ok = true;
  std::optional<double> tbut;
  std::string halted_reason;
  std::string message;
  fs::path manifest;
  json results = json::object();
};

/// Executes cfg.mode, writing traces, snapshots and manifest.json into out_dir.
/// `threads` bounds the worker pool of the grid study.
RunSummary run(const RunConfig& cfg, const fs::path& out_dir, int threads = 1);

struct SweepCase {
  double value = 0.0;
  RunSummary summary;
  double c_max = 0.0;     // max c over the grid at the final state
  double c_center = 0.0;  // c at the origin at the final state
  double c_probe_max = 0.0;  // max c over the probe points at the final state
  double f_max = 0.0;
  double I_min = 0.0;
  std::string error;
};

/// Runs every case in a pool of `threads` workers, each case in
/// out_dir/case_<k>, and writes out_dir/summary.csv. A failing case is
/// recorded and the sweep continues.
std::vector<SweepCase> run_sweep(const config::SweepConfig& sweep, const fs::path& out_dir, int threads);

struct PodComparison {
  std::vector<double> times;
  std::vector<double> err_h, err_p, err_c, err_f, err_I;
  std::optional<double> tbut_full, tbut_reduced;
  double wall_full = 0.0;
  double wall_reduced = 0.0;
  double wall_basis = 0.0;
  /// Wall-clock of the (h, p, c) stage over [tau, TBUT] for each run.
  double wall_full_tail = 0.0;
  double wall_reduced_tail = 0.0;
};

/// Full reference solve and reduced solve with the configured basis;
/// relative errors at the common snapshot times. Outputs go to out_dir
/// when it is non-empty.
PodComparison pod_compare(const RunConfig& cfg, const fs::path& out_dir);

struct GridStudyRow {
  int n = 0;
  double err_h = 0.0, err_p = 0.0, err_c = 0.0;
  double wall_seconds = 0.0;
};

/// Relative errors of h, p, c at grid_study.time against the reference size.
std::vector<GridStudyRow> grid_study(const RunConfig& cfg, int threads);

/// Wall-clock between the trace sample nearest below t and the last sample.
double tail_wall(const dae::SolutionRecord& rec, double t);

}  // namespace tearfilm::runner
