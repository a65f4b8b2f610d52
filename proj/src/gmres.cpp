#include "tearfilm/gmres.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace tearfilm::dae {

GmresResult gmres(const LinearMap& apply_a, const LinearMap& apply_precond, const Vector& b,
                  Vector& x, double rel_tol, double abs_tol, int restart, int max_iter) {
  const Eigen::Index n = b.size();
  x = Vector::Zero(n);
  GmresResult result;
  const double bnorm = b.norm();
  const double target = std::max(rel_tol * bnorm, abs_tol);
  if (bnorm <= target) {
    result.residual_norm = bnorm;
    result.converged = true;
    return result;
  }
  const int m = std::max(1, std::min<int>(restart, static_cast<int>(n)));
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  Vector cs(m), sn(m), g(m + 1);
  Vector r = b;
  double beta = bnorm;
  Vector w(n), z(n);

  while (result.iterations < max_iter) {
    V.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    H.setZero();
    int k = 0;
    for (; k < m && result.iterations < max_iter; ++k) {
      apply_precond(V.col(k), z);
      apply_a(z, w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = w.dot(V.col(i));
        w.noalias() -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      const bool breakdown = H(k + 1, k) <= 1e-14 * std::abs(H(k, k));
      if (!breakdown) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++result.iterations;
      if (std::abs(g[k + 1]) <= target || breakdown) {
        ++k;
        break;
      }
    }
    Vector y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Vector update = V.leftCols(k) * y;
    apply_precond(update, z);
    x += z;
    apply_a(x, w);
    r = b - w;
    beta = r.norm();
    result.residual_norm = beta;
    if (beta <= target) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace tearfilm::dae
