#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tearfilm/solver.hpp"

namespace tearfilm::axisym {

using dae::HaltReason;
using dae::IntegratorConfig;
using dae::ProbeSample;
using model::ModelParams;

/// Chebyshev-Gauss-Lobatto nodes on [0, R0], increasing, r_0 = 0.
class RadialGrid {
 public:
  RadialGrid(double R0, int n);

  double R0() const { return R0_; }
  int size() const { return n_; }
  const Eigen::VectorXd& r() const { return r_; }
  /// First-derivative collocation matrix.
  const Eigen::MatrixXd& D() const { return D_; }
  /// Integral of g(r) over [0, R0] (Clenshaw-Curtis).
  double integrate(const Eigen::VectorXd& g) const { return weights_.dot(g); }
  /// Value of the polynomial interpolant of nodal data at r in [0, R0].
  double interpolate(const Eigen::VectorXd& values, double r) const;

 private:
  double R0_;
  int n_;
  Eigen::VectorXd r_;
  Eigen::MatrixXd D_;
  Eigen::VectorXd weights_;
  Eigen::VectorXd bary_;
};

struct RadialPeak {
  double a = 1.0;
  double r_w = 0.5;
};

Eigen::VectorXd radial_evaporation(const RadialPeak& peak, double v_b, const RadialGrid& grid);

struct RadialProfile {
  double t = 0.0;
  Eigen::VectorXd h, p, c, f;
};

struct RadialRecord {
  std::vector<double> times;
  std::vector<RadialProfile> snapshots;
  std::vector<double> trace_times;
  std::vector<ProbeSample> center;
  std::vector<double> solute_c;  // integral of h c r dr
  std::vector<double> solute_f;
  std::optional<double> tbut;
  HaltReason halted_reason = HaltReason::t_end;
  std::string message;
  RadialProfile final_state;
  dae::IntegratorStats stats;
  double wall_seconds = 0.0;
};

/// Solves the axisymmetric model from the uniform state (h = c = 1, f = f0)
/// with h_r = p_r = c_r = f_r = 0 at r = 0 and r = R0.
RadialRecord integrate_radial(const RadialPeak& peak, double v_b, const ModelParams& params,
                              const IntegratorConfig& config, const RadialGrid& grid);

/// Samples a radial profile on the Cartesian grid around (xc, yc). Points
/// farther than R0 take the value at R0.
Field radial_to_cartesian(const RadialGrid& radial, const Eigen::VectorXd& profile, double xc,
                          double yc, const spectral::PeriodicGrid& grid);

}  // namespace tearfilm::axisym
