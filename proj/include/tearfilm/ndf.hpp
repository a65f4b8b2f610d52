#pragma once

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "tearfilm/errors.hpp"
#include "tearfilm/gmres.hpp"

namespace tearfilm::dae {

/// Semi-explicit index-1 DAE  M y' = F(t, y)  with diagonal M: rows flagged
/// differential have M_ii = 1, algebraic rows M_ii = 0.
class DaeSystem {
 public:
  virtual ~DaeSystem() = default;

  virtual Eigen::Index size() const = 0;
  virtual const std::vector<bool>& differential() const = 0;
  /// May throw InvalidStateError for trial states outside the physical region.
  virtual void rhs(double t, const Vector& y, Vector& f) = 0;

  /// Sets the point at which jvp() linearizes F. f = F(t, y).
  virtual void linearize(double t, const Vector& y, const Vector& f);
  /// out = dF/dy(linearization point) * v. Defaults to a one-sided difference.
  virtual void jvp(const Vector& v, Vector& out);
  /// Fills dF/dy at the linearization point. Returns false when the system
  /// has no assembled Jacobian (jvp() is then applied to unit vectors).
  virtual bool jacobian(Eigen::MatrixXd& out);

  /// Prepares an approximate inverse of the row-scaled iteration matrix
  ///   A = S (M - gamma J),  S = diag(1 on differential rows, 1/gamma on algebraic rows),
  /// at the current linearization point. Used by the Krylov solver only.
  virtual void prepare_preconditioner(double gamma);
  virtual void precondition(const Vector& r, Vector& z);

  /// Error weights w_i used by the local error test and Newton convergence
  /// (default atol + rtol * max(|a_i|, |b_i|)).
  virtual void error_weights(const Vector& a, const Vector& b, double rtol, double atol,
                             Vector& w) const;

  /// Replaces the algebraic components of y so that the algebraic rows of F
  /// vanish. The default runs Newton on a finite-difference Jacobian block.
  virtual void make_consistent(double t, Vector& y);

 protected:
  double lin_t_ = 0.0;
  Vector lin_y_;
  Vector lin_f_;
};

enum class LinearSolverKind { dense, krylov };
enum class ErrorNorm { rms, max };

struct NdfOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  int max_order = 5;
  double initial_step = 0.0;  // 0 selects automatically
  double max_step = std::numeric_limits<double>::infinity();
  /// Numerical differentiation formulas (kappa != 0); false gives plain BDF.
  bool ndf = true;
  ErrorNorm norm = ErrorNorm::rms;
  LinearSolverKind linear_solver = LinearSolverKind::krylov;
  double krylov_rel_tol = 1e-4;
  int krylov_restart = 40;
  int krylov_max_iter = 400;
  int newton_max_iter = 4;
  long max_steps = 200000;
};

struct IntegratorStats {
  long steps = 0;
  long error_test_failures = 0;
  long newton_failures = 0;
  long rhs_evals = 0;
  long jacobians = 0;
  long factorizations = 0;
  long krylov_iterations = 0;
  long krylov_failures = 0;
};

class StepFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Variable-order (1..5), quasi-constant step size NDF/BDF integrator in
/// backward-difference form. The iteration matrix is either factored densely
/// (Jacobian from jvp on unit vectors, reused across steps) or inverted
/// matrix-free with preconditioned GMRES, relinearized every step.
class NdfIntegrator {
 public:
  NdfIntegrator(DaeSystem& system, NdfOptions options);

  /// y0 must already be consistent.
  void initialize(double t0, const Vector& y0);

  /// Takes one accepted step. Steps are stretched to land on t_stop when
  /// within 10% of it and never pass it.
  void step(double t_stop);
  /// Steps to t_new with the given order and no error test (used to replay
  /// another integration's step sequence with bit-identical step times).
  void step_prescribed(double t_new, int order);

  double t() const { return t_; }
  const Vector& y() const { return y_; }
  double t_previous() const { return t_prev_; }
  double last_step() const { return h_last_; }
  int last_order() const { return k_last_step_; }
  /// Dense output on [t_previous(), t()].
  Vector interpolate(double t) const;
  /// y'(t()) from the backward differences of the last step.
  Vector derivative() const;
  const IntegratorStats& stats() const { return stats_; }
  const NdfOptions& options() const { return opts_; }

 private:
  double weighted_norm(const Vector& v, const Vector& w, bool differential_only) const;
  Vector weights(const Vector& a, const Vector& b) const;
  void rescale_differences(double ratio);
  void ensure_iteration_matrix(double hinv_gak, double t, bool force_jacobian);
  Vector solve_linear(const Vector& rhs);
  void eval_rhs(double t, const Vector& y, Vector& f);
  /// Newton solve for the corrector at (t + h). Returns false when too slow.
  bool newton(double tnew, double h, Vector& ynew, Vector& difkp1);
  void accept(double tnew, double h, const Vector& ynew, const Vector& difkp1);

  DaeSystem& sys_;
  NdfOptions opts_;
  Eigen::Index n_;
  std::vector<bool> diff_;

  double t_ = 0.0;
  double t_prev_ = 0.0;
  Vector y_;
  Eigen::MatrixXd dif_;
  int k_ = 1;
  int klast_ = 1;
  double absh_ = 0.0;
  double abshlast_ = 0.0;
  int nconhk_ = 0;
  double rate_ = 0.0;
  bool have_rate_ = false;

  double h_last_ = 0.0;
  int k_last_step_ = 1;

  // Dense path.
  Eigen::MatrixXd jac_;
  bool have_jac_ = false;
  bool jac_current_ = false;
  double lu_gamma_ = -1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  // Krylov path.
  double krylov_gamma_ = 0.0;

  IntegratorStats stats_;
};

}  // namespace tearfilm::dae
