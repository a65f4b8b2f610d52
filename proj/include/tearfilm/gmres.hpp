#pragma once

#include <functional>

#include <Eigen/Core>

namespace tearfilm::dae {

using Vector = Eigen::VectorXd;
using LinearMap = std::function<void(const Vector& in, Vector& out)>;

struct GmresResult {
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = false;
};

/// Restarted GMRES with right preconditioning; x is overwritten (initial
/// guess zero). Stops when ||b - A x|| <= max(rel_tol * ||b||, abs_tol).
GmresResult gmres(const LinearMap& apply_a, const LinearMap& apply_precond, const Vector& b,
                  Vector& x, double rel_tol, double abs_tol, int restart, int max_iter);

}  // namespace tearfilm::dae
