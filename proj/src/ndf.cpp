#include "tearfilm/ndf.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace tearfilm::dae {

namespace {

constexpr int kMaxOrder = 5;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Accuracy-optimal NDF coefficients for orders 1..5.
constexpr std::array<double, kMaxOrder> kKappa = {-0.1850, -1.0 / 9.0, -0.0823, -0.0415, 0.0};
// G_k = sum_{j<=k} 1/j.
constexpr std::array<double, kMaxOrder> kG = {1.0, 3.0 / 2.0, 11.0 / 6.0, 25.0 / 12.0,
                                              137.0 / 60.0};

Eigen::Matrix<double, kMaxOrder, kMaxOrder> difference_u() {
  Eigen::Matrix<double, kMaxOrder, kMaxOrder> u;
  u << -1, -2, -3, -4, -5,  //
      0, 1, 3, 6, 10,       //
      0, 0, -1, -4, -10,    //
      0, 0, 0, 1, 5,        //
      0, 0, 0, 0, -1;
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// DaeSystem defaults

void DaeSystem::linearize(double t, const Vector& y, const Vector& f) {
  lin_t_ = t;
  lin_y_ = y;
  lin_f_ = f;
}

void DaeSystem::jvp(const Vector& v, Vector& out) {
  const double vnorm = v.norm();
  if (vnorm == 0.0) {
    out = Vector::Zero(v.size());
    return;
  }
  const double eps = std::sqrt(kEps) * (1.0 + lin_y_.norm()) / vnorm;
  Vector yp = lin_y_ + eps * v;
  Vector fp(v.size());
  rhs(lin_t_, yp, fp);
  out = (fp - lin_f_) / eps;
}

bool DaeSystem::jacobian(Eigen::MatrixXd& /*out*/) { return false; }

void DaeSystem::prepare_preconditioner(double /*gamma*/) {}

void DaeSystem::precondition(const Vector& r, Vector& z) { z = r; }

void DaeSystem::error_weights(const Vector& a, const Vector& b, double rtol, double atol,
                              Vector& w) const {
  w = (atol + rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
}

void DaeSystem::make_consistent(double t, Vector& y) {
  const auto& mask = differential();
  std::vector<Eigen::Index> alg;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (!mask[i]) alg.push_back(i);
  if (alg.empty()) return;
  const auto na = static_cast<Eigen::Index>(alg.size());
  Vector f(size()), f2(size());
  for (int iter = 0; iter < 20; ++iter) {
    rhs(t, y, f);
    Eigen::MatrixXd jzz(na, na);
    Vector r(na);
    for (Eigen::Index a = 0; a < na; ++a) r[a] = f[alg[a]];
    if (r.lpNorm<Eigen::Infinity>() <= 1e-12) return;
    for (Eigen::Index b = 0; b < na; ++b) {
      const Eigen::Index j = alg[b];
      const double eps = std::sqrt(kEps) * std::max(1.0, std::abs(y[j]));
      Vector y2 = y;
      y2[j] += eps;
      rhs(t, y2, f2);
      for (Eigen::Index a = 0; a < na; ++a) jzz(a, b) = (f2[alg[a]] - f[alg[a]]) / eps;
    }
    const Vector dz = jzz.partialPivLu().solve(r);
    double znorm = 0.0;
    for (Eigen::Index a = 0; a < na; ++a) {
      y[alg[a]] -= dz[a];
      znorm = std::max(znorm, std::abs(y[alg[a]]));
    }
    if (dz.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + znorm)) return;
  }
  rhs(t, y, f);
  double rmax = 0.0;
  for (auto i : alg) rmax = std::max(rmax, std::abs(f[i]));
  if (rmax <= 1e-8) return;
  throw StepFailure("could not find consistent algebraic initial values");
}

// ---------------------------------------------------------------------------
// NdfIntegrator

NdfIntegrator::NdfIntegrator(DaeSystem& system, NdfOptions options)
    : sys_(system), opts_(options), n_(system.size()), diff_(system.differential()) {
  if (opts_.rtol <= 0 || opts_.atol <= 0) throw std::invalid_argument("tolerances must be positive");
  if (opts_.max_order < 1 || opts_.max_order > kMaxOrder) {
    throw std::invalid_argument("max_order must lie in 1..5");
  }
  if (static_cast<Eigen::Index>(diff_.size()) != n_) {
    throw DimensionError("differential mask does not match the system size");
  }
}

Vector NdfIntegrator::weights(const Vector& a, const Vector& b) const {
  Vector w;
  sys_.error_weights(a, b, opts_.rtol, opts_.atol, w);
  return w;
}

double NdfIntegrator::weighted_norm(const Vector& v, const Vector& w, bool differential_only) const {
  double acc = 0.0;
  long count = 0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    if (differential_only && !diff_[i]) continue;
    const double e = v[i] / w[i];
    if (opts_.norm == ErrorNorm::max) {
      acc = std::max(acc, std::abs(e));
    } else {
      acc += e * e;
    }
    ++count;
  }
  if (opts_.norm == ErrorNorm::max) return acc;
  return count > 0 ? std::sqrt(acc / count) : 0.0;
}

void NdfIntegrator::eval_rhs(double t, const Vector& y, Vector& f) {
  ++stats_.rhs_evals;
  sys_.rhs(t, y, f);
}

void NdfIntegrator::initialize(double t0, const Vector& y0) {
  if (y0.size() != n_) throw DimensionError("initial state does not match the system size");
  t_ = t0;
  t_prev_ = t0;
  y_ = y0;
  Vector f(n_);
  eval_rhs(t0, y0, f);
  Vector yp = Vector::Zero(n_);
  for (Eigen::Index i = 0; i < n_; ++i)
    if (diff_[i]) yp[i] = f[i];

  double absh = opts_.initial_step;
  if (absh <= 0.0) {
    const Vector w = weights(y0, y0);
    const double rh = 1.25 * std::sqrt(opts_.rtol) * weighted_norm(yp, w, true);
    absh = std::min(opts_.max_step, rh > 0.0 ? 1.0 / rh : 1.0);
    if (!std::isfinite(absh)) absh = 1.0;
  }
  absh = std::min(absh, opts_.max_step);
  dif_ = Eigen::MatrixXd::Zero(n_, kMaxOrder + 2);
  dif_.col(0) = absh * yp;
  k_ = 1;
  klast_ = 1;
  absh_ = absh;
  abshlast_ = absh;
  nconhk_ = 0;
  have_rate_ = false;
  rate_ = 0.0;
  h_last_ = 0.0;
  k_last_step_ = 1;
  have_jac_ = false;
  jac_current_ = false;
  lu_gamma_ = -1.0;
}

void NdfIntegrator::rescale_differences(double ratio) {
  static const auto U = difference_u();
  Eigen::Matrix<double, kMaxOrder, kMaxOrder> R;
  for (int j = 0; j < kMaxOrder; ++j) {
    double prod = 1.0;
    for (int i = 0; i < kMaxOrder; ++i) {
      const double m = i + 1;
      prod *= (m - 1.0 - (j + 1) * ratio) / m;
      R(i, j) = prod;
    }
  }
  const Eigen::Matrix<double, kMaxOrder, kMaxOrder> RU = R * U;
  const Eigen::MatrixXd block = RU.topLeftCorner(k_, k_);
  dif_.leftCols(k_) = (dif_.leftCols(k_) * block).eval();
}

void NdfIntegrator::ensure_iteration_matrix(double hinv_gak, double t, bool force_jacobian) {
  if (opts_.linear_solver != LinearSolverKind::dense) return;
  if (!have_jac_ || force_jacobian) {
    Vector f(n_);
    eval_rhs(t_, y_, f);
    sys_.linearize(t_, y_, f);
    jac_.resize(n_, n_);
    if (!sys_.jacobian(jac_)) {
      Vector e = Vector::Zero(n_), col(n_);
      for (Eigen::Index j = 0; j < n_; ++j) {
        e[j] = 1.0;
        sys_.jvp(e, col);
        jac_.col(j) = col;
        e[j] = 0.0;
      }
    }
    ++stats_.jacobians;
    have_jac_ = true;
    jac_current_ = true;
    lu_gamma_ = -1.0;
  }
  (void)t;
  if (lu_gamma_ != hinv_gak) {
    Eigen::MatrixXd A(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      if (diff_[i]) {
        A.row(i) = -hinv_gak * jac_.row(i);
        A(i, i) += 1.0;
      } else {
        A.row(i) = -jac_.row(i);
      }
    }
    lu_.compute(A);
    lu_gamma_ = hinv_gak;
    have_rate_ = false;
    ++stats_.factorizations;
  }
}

Vector NdfIntegrator::solve_linear(const Vector& rhs) {
  if (opts_.linear_solver == LinearSolverKind::dense) return lu_.solve(rhs);
  const double gamma = krylov_gamma_;
  Vector jv(n_);
  LinearMap apply_a = [&](const Vector& v, Vector& out) {
    sys_.jvp(v, jv);
    out.resize(n_);
    for (Eigen::Index i = 0; i < n_; ++i) out[i] = diff_[i] ? v[i] - gamma * jv[i] : -jv[i];
  };
  LinearMap apply_p = [&](const Vector& r, Vector& z) { sys_.precondition(r, z); };
  Vector x;
  const Vector w = weights(y_, y_);
  const double abs_tol = 1e-3 * w.norm();
  const auto res = gmres(apply_a, apply_p, rhs, x, opts_.krylov_rel_tol, abs_tol,
                         opts_.krylov_restart, opts_.krylov_max_iter);
  stats_.krylov_iterations += res.iterations;
  if (!res.converged) ++stats_.krylov_failures;
  return x;
}

bool NdfIntegrator::newton(double tnew, double h, Vector& ynew, Vector& difkp1) {
  const double hinv_gak = h / (kG[k_ - 1] * (1.0 - (opts_.ndf ? kKappa[k_ - 1] : 0.0)));
  const double inv_ga = hinv_gak / h;

  ynew = y_ + dif_.leftCols(k_).rowwise().sum();
  Vector psi = Vector::Zero(n_);
  for (int j = 0; j < k_; ++j) psi += (kG[j] * inv_ga) * dif_.col(j);
  difkp1 = Vector::Zero(n_);
  const Vector w = weights(y_, ynew);
  const double minnrm = 100.0 * kEps * weighted_norm(ynew, w, false);

  Vector f(n_), rhs(n_);
  try {
    ensure_iteration_matrix(hinv_gak, tnew, false);
    if (opts_.linear_solver == LinearSolverKind::krylov) {
      eval_rhs(tnew, ynew, f);
      sys_.linearize(tnew, ynew, f);
      if (krylov_gamma_ != hinv_gak) have_rate_ = false;
      sys_.prepare_preconditioner(hinv_gak);
      krylov_gamma_ = hinv_gak;
    }
    double oldnrm = 0.0;
    for (int iter = 0; iter < opts_.newton_max_iter; ++iter) {
      if (!(opts_.linear_solver == LinearSolverKind::krylov && iter == 0)) eval_rhs(tnew, ynew, f);
      for (Eigen::Index i = 0; i < n_; ++i) {
        rhs[i] = diff_[i] ? hinv_gak * f[i] - (psi[i] + difkp1[i]) : f[i];
      }
      const Vector del = solve_linear(rhs);
      if (!del.allFinite()) return false;
      const double newnrm = weighted_norm(del, w, false);
      difkp1 += del;
      ynew += del;
      if (newnrm <= minnrm) return true;
      if (iter == 0) {
        if (have_rate_) {
          const double errit = newnrm * rate_ / (1.0 - rate_);
          if (errit <= 0.05) return true;
        } else {
          rate_ = 0.0;
        }
      } else if (newnrm > 0.9 * oldnrm) {
        return false;
      } else {
        rate_ = std::max(0.9 * rate_, newnrm / oldnrm);
        have_rate_ = true;
        const double errit = newnrm * rate_ / (1.0 - rate_);
        if (errit <= 0.5) return true;
        if (iter == opts_.newton_max_iter - 1) return false;
        if (0.5 < errit * std::pow(rate_, opts_.newton_max_iter - 1 - iter)) return false;
      }
      oldnrm = newnrm;
    }
  } catch (const InvalidStateError&) {
    return false;
  }
  return false;
}

void NdfIntegrator::accept(double tnew, double h, const Vector& ynew, const Vector& difkp1) {
  ++stats_.steps;
  k_last_step_ = k_;
  h_last_ = h;
  dif_.col(k_ + 1) = difkp1 - dif_.col(k_);
  dif_.col(k_) = difkp1;
  for (int j = k_ - 1; j >= 0; --j) dif_.col(j) += dif_.col(j + 1);
  const Vector w = weights(y_, ynew);
  t_prev_ = t_;
  t_ = tnew;
  y_ = ynew;
  jac_current_ = false;
}

void NdfIntegrator::step(double t_stop) {
  if (stats_.steps >= opts_.max_steps) throw StepFailure("maximum number of steps exceeded");
  if (!(t_stop > t_)) throw std::invalid_argument("step: t_stop must lie ahead of t");
  const double hmin = 16.0 * kEps * std::max(std::abs(t_), 1.0);
  double absh = std::min(opts_.max_step, std::max(hmin, absh_));
  bool done = false;
  if (1.1 * absh >= t_stop - t_) {
    absh = t_stop - t_;
    done = true;
  }
  if (absh != abshlast_ || k_ != klast_) {
    rescale_differences(absh / abshlast_);
    nconhk_ = 0;
  }
  int nfailed = 0;
  Vector ynew, difkp1;
  double tnew = 0.0, h = 0.0, err = 0.0;
  while (true) {
    tnew = done ? t_stop : t_ + absh;
    h = tnew - t_;
    absh_ = absh;
    if (!newton(tnew, h, ynew, difkp1)) {
      ++stats_.newton_failures;
      if (opts_.linear_solver == LinearSolverKind::dense && !jac_current_) {
        const double g = h / (kG[k_ - 1] * (1.0 - (opts_.ndf ? kKappa[k_ - 1] : 0.0)));
        try {
          ensure_iteration_matrix(g, tnew, true);
        } catch (const InvalidStateError&) {
          throw StepFailure("invalid state while forming the Jacobian");
        }
        continue;
      }
      if (absh <= hmin) throw StepFailure("step size underflow after Newton failures");
      const double last = absh;
      absh = std::max(0.3 * absh, hmin);
      done = false;
      rescale_differences(absh / last);
      abshlast_ = absh;
      nconhk_ = 0;
      continue;
    }
    const Vector w = weights(y_, ynew);
    err = weighted_norm(difkp1, w, true) *
          ((opts_.ndf ? kKappa[k_ - 1] : 0.0) * kG[k_ - 1] + 1.0 / (k_ + 1));
    if (err <= 1.0) break;

    ++nfailed;
    ++stats_.error_test_failures;
    if (absh <= hmin) throw StepFailure("step size underflow after error test failures");
    const double last = absh;
    if (nfailed == 1) {
      double hopt = absh * std::max(0.1, 0.833 * std::pow(1.0 / err, 1.0 / (k_ + 1)));
      if (k_ > 1) {
        const double errkm1 =
            weighted_norm(dif_.col(k_ - 1) + difkp1, w, true) *
            ((opts_.ndf ? kKappa[k_ - 2] : 0.0) * kG[k_ - 2] + 1.0 / k_);
        const double hkm1 = absh * std::max(0.1, 0.769 * std::pow(1.0 / errkm1, 1.0 / k_));
        if (hkm1 > hopt) {
          hopt = std::min(absh, hkm1);
          --k_;
        }
      }
      absh = std::max(hmin, hopt);
    } else {
      absh = std::max(hmin, 0.5 * absh);
    }
    if (absh < last) done = false;
    rescale_differences(absh / last);
    abshlast_ = absh;
    nconhk_ = 0;
  }

  accept(tnew, h, ynew, difkp1);
  klast_ = k_;
  abshlast_ = h;
  absh = h;
  nconhk_ = std::min(nconhk_ + 1, kMaxOrder + 2);
  if (nconhk_ >= k_ + 2) {
    const Vector w = weights(y_, y_);
    auto erconst = [&](int k) { return (opts_.ndf ? kKappa[k - 1] : 0.0) * kG[k - 1] + 1.0 / (k + 1); };
    double temp = 1.2 * std::pow(err, 1.0 / (k_ + 1));
    double hopt = temp > 0.1 ? absh / temp : 10.0 * absh;
    int kopt = k_;
    if (k_ > 1) {
      const double errkm1 = weighted_norm(dif_.col(k_ - 1), w, true) * erconst(k_ - 1);
      temp = 1.3 * std::pow(errkm1, 1.0 / k_);
      const double hkm1 = temp > 0.1 ? absh / temp : 10.0 * absh;
      if (hkm1 > hopt) {
        hopt = hkm1;
        kopt = k_ - 1;
      }
    }
    if (k_ < opts_.max_order) {
      const double errkp1 = weighted_norm(dif_.col(k_ + 1), w, true) * erconst(k_ + 1);
      temp = 1.4 * std::pow(errkp1, 1.0 / (k_ + 2));
      const double hkp1 = temp > 0.1 ? absh / temp : 10.0 * absh;
      if (hkp1 > hopt) {
        hopt = hkp1;
        kopt = k_ + 1;
      }
    }
    if (hopt > absh) {
      absh = std::min(hopt, opts_.max_step);
      k_ = kopt;
    }
  }
  absh_ = absh;
}

void NdfIntegrator::step_prescribed(double t_new, int order) {
  const double h = t_new - t_;
  if (!(h > 0.0)) throw std::invalid_argument("step_prescribed: t_new must lie ahead of t");
  if (order < 1 || order > opts_.max_order) throw std::invalid_argument("step_prescribed: bad order");
  k_ = order;
  if (h != abshlast_ || k_ != klast_) rescale_differences(h / abshlast_);
  const double tnew = t_new;
  Vector ynew, difkp1;
  bool ok = newton(tnew, h, ynew, difkp1);
  if (!ok && opts_.linear_solver == LinearSolverKind::dense && !jac_current_) {
    const double g = h / (kG[k_ - 1] * (1.0 - (opts_.ndf ? kKappa[k_ - 1] : 0.0)));
    ensure_iteration_matrix(g, tnew, true);
    ok = newton(tnew, h, ynew, difkp1);
  }
  if (!ok) throw StepFailure("Newton iteration failed on a prescribed step");
  accept(tnew, h, ynew, difkp1);
  klast_ = k_;
  abshlast_ = h;
  absh_ = h;
}

Vector NdfIntegrator::interpolate(double t) const {
  if (h_last_ == 0.0) return y_;
  const double s = (t - t_) / h_last_;
  Vector out = y_;
  double coeff = 1.0;
  for (int j = 1; j <= k_last_step_; ++j) {
    coeff *= (s + j - 1.0) / j;
    out += coeff * dif_.col(j - 1);
  }
  return out;
}

Vector NdfIntegrator::derivative() const {
  Vector out = Vector::Zero(n_);
  if (h_last_ == 0.0) return out;
  for (int j = 1; j <= k_last_step_; ++j) out += dif_.col(j - 1) / static_cast<double>(j);
  return out / h_last_;
}

}  // namespace tearfilm::dae
