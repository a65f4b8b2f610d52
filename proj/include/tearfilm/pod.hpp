#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tearfilm/axisym.hpp"
#include "tearfilm/solver.hpp"

namespace tearfilm::pod {

using dae::IntegratorConfig;
using dae::SolutionRecord;
using model::FieldState;
using model::ModelParams;
using spectral::PeriodicGrid;

/// Columns are grid fields at increasing times.
struct SnapshotMatrix {
  std::string variable;
  Eigen::MatrixXd columns;
  std::vector<double> times;
};

struct Snapshots {
  SnapshotMatrix h, p, c, f;
  int nx = 0;
  int ny = 0;
};

struct PodRanks {
  int h = 20;
  int p = 30;
  int c = 20;
  int f = 20;
};

/// Ranks used with each snapshot window: 0.25 -> (15, 25, 15), 0.5 -> (20, 30, 20),
/// 1 -> (40, 50, 40); other windows take the nearest of these. f mirrors c.
PodRanks default_ranks(double tau);
/// Snapshot counts for the same windows: 40, 50, 100.
int default_snapshot_count(double tau);

struct PodBasis {
  Eigen::MatrixXd B_h, B_p, B_c, B_f;  // B_f may be empty
  Eigen::VectorXd sigma_h, sigma_p, sigma_c, sigma_f;
  int nx = 0;
  int ny = 0;
  std::string source = "full2d";
  double tau = 0.0;
  int snapshot_count = 0;
};

/// Full solve on [0, tau] (both stages), sampled at `count` uniform times.
Snapshots capture_snapshots(const Field& J, const ModelParams& params,
                            const IntegratorConfig& config, const PeriodicGrid& grid, double tau,
                            int count);

/// First k left singular vectors of S. Optionally returns all singular values.
Eigen::MatrixXd compute_basis(const Eigen::MatrixXd& S, int k,
                              Eigen::VectorXd* singular_values = nullptr);

PodBasis build_basis(const Snapshots& snaps, const PodRanks& ranks, bool with_f);

/// Solves the Galerkin-projected system from `initial` (restart from t = 0 by
/// passing the initial state, or continue from a later state). The returned
/// record holds lifted fields; f is computed with B_f if present, otherwise
/// on the full grid along the lifted history.
SolutionRecord integrate_reduced(const PodBasis& basis, const FieldState& initial, const Field& J,
                                 const ModelParams& params, const IntegratorConfig& config,
                                 const PeriodicGrid& grid);

/// The Galerkin-projected (h, p, c) system in basis coordinates. The basis
/// must outlive the returned object.
std::unique_ptr<dae::DaeSystem> reduced_system(const PodBasis& basis, const PeriodicGrid& grid,
                                               const Field& J, const ModelParams& params);

/// Basis from axisymmetric solves of each distinct circular peak on
/// [0, horizon], mapped onto the grid around every peak centre.
PodBasis radial_snapshot_basis(const std::vector<model::EvaporationPeak>& peaks, double v_b,
                               const ModelParams& params, const IntegratorConfig& config,
                               const PeriodicGrid& grid, double horizon, int count,
                               const PodRanks& ranks, const axisym::RadialGrid& radial,
                               bool with_f);

void save_basis(const std::filesystem::path& path, const PodBasis& basis);
PodBasis load_basis(const std::filesystem::path& path);

}  // namespace tearfilm::pod
