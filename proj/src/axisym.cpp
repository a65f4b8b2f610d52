#include "tearfilm/axisym.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace tearfilm::axisym {

using dae::Vector;

RadialGrid::RadialGrid(double R0, int n) : R0_(R0), n_(n) {
  if (!(R0 > 0)) throw std::invalid_argument("R0 must be positive");
  if (n < 32) throw std::invalid_argument("radial grid needs at least 32 nodes");
  const int N = n - 1;
  const double pi = std::numbers::pi;
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j) x[j] = std::cos(pi * j / N);
  // Chebyshev differentiation matrix on x in [-1, 1], x_0 = 1.
  Eigen::VectorXd cw(n);
  for (int j = 0; j < n; ++j) cw[j] = ((j == 0 || j == N) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
  Eigen::MatrixXd Dx(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      Dx(i, j) = i == j ? 0.0 : (cw[i] / cw[j]) / (x[i] - x[j]);
  for (int i = 0; i < n; ++i) Dx(i, i) = -Dx.row(i).sum();
  // r = R0 (1 - x) / 2.
  r_ = R0 * (1.0 - x.array()) / 2.0;
  r_[0] = 0.0;
  D_ = -(2.0 / R0) * Dx;

  // Clenshaw-Curtis weights on [-1, 1], scaled to [0, R0].
  weights_ = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n - 2);
  const bool even = N % 2 == 0;
  const double w_end = even ? 1.0 / (double(N) * N - 1.0) : 1.0 / (double(N) * N);
  for (int k = 1; k < N / 2 + (even ? 0 : 1); ++k) {
    for (int j = 1; j < N; ++j) v[j - 1] -= 2.0 * std::cos(2.0 * k * pi * j / N) / (4.0 * k * k - 1.0);
  }
  if (even) {
    for (int j = 1; j < N; ++j) v[j - 1] -= std::cos(N * pi * j / N) / (double(N) * N - 1.0);
  }
  weights_[0] = w_end;
  weights_[N] = w_end;
  for (int j = 1; j < N; ++j) weights_[j] = 2.0 * v[j - 1] / N;
  weights_ *= R0 / 2.0;

  bary_.resize(n);
  for (int j = 0; j < n; ++j) bary_[j] = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
}

double RadialGrid::interpolate(const Eigen::VectorXd& values, double r) const {
  double num = 0.0, den = 0.0;
  for (int j = 0; j < n_; ++j) {
    const double d = r - r_[j];
    if (d == 0.0) return values[j];
    const double w = bary_[j] / d;
    num += w * values[j];
    den += w;
  }
  return num / den;
}

Eigen::VectorXd radial_evaporation(const RadialPeak& peak, double v_b, const RadialGrid& grid) {
  if (!(peak.r_w > 0)) throw std::invalid_argument("r_w must be positive");
  if (!(peak.a > v_b)) throw std::invalid_argument("peak height must exceed v_b");
  const auto s = grid.r().array() / peak.r_w;
  return (v_b + (peak.a - v_b) * (-0.5 * s.square()).exp()).matrix();
}

namespace {

// State y = [h; p; c; f] on the radial nodes.
class RadialSystem : public dae::DaeSystem {
 public:
  RadialSystem(const RadialGrid& grid, Eigen::VectorXd J, const ModelParams& params)
      : grid_(grid), J_(std::move(J)), params_(params), n_(grid.size()), mask_(4 * n_, true) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      mask_[k * n_] = false;
      mask_[k * n_ + n_ - 1] = false;
    }
    for (Eigen::Index i = n_; i < 2 * n_; ++i) mask_[i] = false;
  }

  Eigen::Index size() const override { return 4 * n_; }
  const std::vector<bool>& differential() const override { return mask_; }

  void rhs(double /*t*/, const Vector& y, Vector& out) override {
    const Eigen::ArrayXd h = y.segment(0, n_).array();
    const Eigen::ArrayXd p = y.segment(n_, n_).array();
    const Eigen::ArrayXd c = y.segment(2 * n_, n_).array();
    const Eigen::ArrayXd f = y.segment(3 * n_, n_).array();
    if (!(h.minCoeff() > model::kThicknessFloor) || !y.allFinite()) {
      throw InvalidStateError("film thickness fell below the positivity floor");
    }
    const auto& D = grid_.D();
    const Eigen::ArrayXd r = grid_.r().array();
    const Eigen::ArrayXd J = J_.array();
    const Eigen::ArrayXd hr = (D * h.matrix()).array();
    const Eigen::ArrayXd hrr = (D * hr.matrix()).array();
    const Eigen::ArrayXd pr = (D * p.matrix()).array();
    const Eigen::ArrayXd cr = (D * c.matrix()).array();
    const Eigen::ArrayXd fr = (D * f.matrix()).array();
    const Eigen::ArrayXd ubar = -h.square() / 12.0 * pr;
    const Eigen::ArrayXd q = r * h.cube() / 12.0 * pr;
    const Eigen::ArrayXd dq = (D * q.matrix()).array();
    const Eigen::ArrayXd dc = (D * (r * h * cr).matrix()).array();
    const Eigen::ArrayXd df = (D * (r * h * fr).matrix()).array();
    const double Pc = params_.Pc;

    out.resize(4 * n_);
    for (Eigen::Index i = 1; i < n_ - 1; ++i) {
      const double ri = r[i];
      const double osm = Pc * (c[i] - 1.0);
      out[i] = dq[i] / ri - J[i] + osm;
      out[n_ + i] = p[i] + hrr[i] + hr[i] / ri;
      out[2 * n_ + i] = -ubar[i] * cr[i] + dc[i] / (ri * h[i] * params_.Pe_c) + J[i] * c[i] / h[i] -
                        osm * c[i] / h[i];
      out[3 * n_ + i] = -ubar[i] * fr[i] + df[i] / (ri * h[i] * params_.Pe_f) + J[i] * f[i] / h[i] -
                        osm * f[i] / h[i];
    }
    for (Eigen::Index i : {Eigen::Index{0}, n_ - 1}) {
      out[i] = hr[i];
      out[n_ + i] = pr[i];
      out[2 * n_ + i] = cr[i];
      out[3 * n_ + i] = fr[i];
    }
  }

 private:
  const RadialGrid& grid_;
  Eigen::VectorXd J_;
  ModelParams params_;
  Eigen::Index n_;
  std::vector<bool> mask_;
};

RadialProfile unpack(const Vector& y, Eigen::Index n, double t) {
  return {t, y.segment(0, n), y.segment(n, n), y.segment(2 * n, n), y.segment(3 * n, n)};
}

ProbeSample center_sample(const RadialProfile& s, const RadialGrid& grid, const Eigen::VectorXd& J,
                          const ModelParams& params) {
  const auto& D = grid.D();
  const Eigen::VectorXd cr = D * s.c;
  const Eigen::VectorXd pr = D * s.p;
  const Eigen::VectorXd hcr = s.h.cwiseProduct(cr);
  // (1/r) d/dr (r g) -> 2 g'(0) at the axis since g(0) = 0.
  const double dhcr0 = D.row(0).dot(hcr);
  ProbeSample ps;
  ps.h = s.h[0];
  ps.p = s.p[0];
  ps.c = s.c[0];
  ps.f = s.f[0];
  ps.I = model::fl_intensity(ps.h, ps.f, params);
  ps.advection = -ps.h * ps.h / 12.0 * pr[0] * cr[0];
  ps.diffusion = 2.0 * dhcr0 / (ps.h * params.Pe_c);
  ps.evaporation = J[0] * ps.c / ps.h;
  ps.osmosis = params.Pc * (ps.c - 1.0) * ps.c / ps.h;
  return ps;
}

}  // namespace

RadialRecord integrate_radial(const RadialPeak& peak, double v_b, const ModelParams& params,
                              const IntegratorConfig& config, const RadialGrid& grid) {
  config.validate();
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const Eigen::VectorXd J = radial_evaporation(peak, v_b, grid);
  RadialSystem sys(grid, J, params);
  const Eigen::Index n = grid.size();
  Vector y0(4 * n);
  y0 << Vector::Ones(n), Vector::Zero(n), Vector::Ones(n), Vector::Constant(n, params.f0);
  sys.make_consistent(0.0, y0);

  dae::NdfOptions opts = config.ndf_options();
  opts.linear_solver = dae::LinearSolverKind::dense;
  dae::NdfIntegrator integ(sys, opts);
  integ.initialize(0.0, y0);

  RadialRecord rec;
  const Eigen::VectorXd r = grid.r();
  dae::DriveHooks hooks;
  hooks.min_thickness = [n](const Vector& y) { return y.head(n).minCoeff(); };
  hooks.snapshot = [&](double t, const Vector& y) {
    rec.times.push_back(t);
    rec.snapshots.push_back(unpack(y, n, t));
  };
  hooks.sample = [&](double t, const Vector& y) {
    const RadialProfile s = unpack(y, n, t);
    rec.trace_times.push_back(t);
    rec.center.push_back(center_sample(s, grid, J, params));
    rec.solute_c.push_back(grid.integrate(s.h.cwiseProduct(s.c).cwiseProduct(r)));
    rec.solute_f.push_back(grid.integrate(s.h.cwiseProduct(s.f).cwiseProduct(r)));
  };
  const auto outcome = dae::drive(integ, config, hooks);
  rec.halted_reason = outcome.reason;
  rec.tbut = outcome.tbut;
  rec.message = outcome.message;
  rec.final_state = unpack(outcome.y_final, n, outcome.t_final);
  rec.stats = integ.stats();
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

Field radial_to_cartesian(const RadialGrid& radial, const Eigen::VectorXd& profile, double xc,
                          double yc, const spectral::PeriodicGrid& grid) {
  if (profile.size() != radial.size()) throw DimensionError("profile does not match the radial grid");
  Field out(static_cast<Eigen::Index>(grid.size()));
  const double edge = profile[radial.size() - 1];
  for (int j = 0; j < grid.ny(); ++j) {
    const double dy = grid.is_line() ? 0.0 : grid.y(j) - yc;
    for (int i = 0; i < grid.nx(); ++i) {
      const double dx = grid.x(i) - xc;
      const double rr = std::sqrt(dx * dx + dy * dy);
      out[grid.index(i, j)] = rr >= radial.R0() ? edge : radial.interpolate(profile, rr);
    }
  }
  return out;
}

}  // namespace tearfilm::axisym
