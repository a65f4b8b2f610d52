#include "tearfilm/film_system.hpp"

#include <cmath>

namespace tearfilm::dae {

namespace {

Eigen::Map<const Field> segment(const Vector& y, Eigen::Index k, Eigen::Index n) {
  return Eigen::Map<const Field>(y.data() + k * n, n);
}

}  // namespace

// ---------------------------------------------------------------------------
// FilmSystem

FilmSystem::FilmSystem(const PeriodicGrid& grid, Field J, const ModelParams& params)
    : grid_(grid),
      ops_(spectral::ops_for(grid)),
      J_(std::move(J)),
      params_(params),
      n_(static_cast<Eigen::Index>(grid.size())),
      mask_(3 * grid.size(), true) {
  if (J_.size() != n_) throw DimensionError("evaporation field does not match the grid");
  for (Eigen::Index i = n_; i < 2 * n_; ++i) mask_[i] = false;
}

Vector FilmSystem::pack(const FieldState& s) const {
  if (s.h.size() != n_ || s.p.size() != n_ || s.c.size() != n_) {
    throw DimensionError("state does not match the grid");
  }
  Vector y(3 * n_);
  y.segment(0, n_) = s.h.matrix();
  y.segment(n_, n_) = s.p.matrix();
  y.segment(2 * n_, n_) = s.c.matrix();
  return y;
}

FieldState FilmSystem::unpack(const Vector& y, double t) const {
  FieldState s;
  s.h = segment(y, 0, n_);
  s.p = segment(y, 1, n_);
  s.c = segment(y, 2, n_);
  s.t = t;
  return s;
}

void FilmSystem::rhs(double t, const Vector& y, Vector& f) {
  const auto r = model::residual(unpack(y, t), J_, params_, grid_);
  f.resize(3 * n_);
  f.segment(0, n_) = r.r_h.matrix();
  f.segment(n_, n_) = r.r_p.matrix();
  f.segment(2 * n_, n_) = r.r_c.matrix();
}

void FilmSystem::make_consistent(double /*t*/, Vector& y) {
  const Field h = segment(y, 0, n_);
  y.segment(n_, n_) = (-ops_.laplacian(h)).matrix();
}

void FilmSystem::linearize(double t, const Vector& y, const Vector& f) {
  DaeSystem::linearize(t, y, f);
  h_ = segment(y, 0, n_);
  const Field p = segment(y, 1, n_);
  c_ = segment(y, 2, n_);
  ops_.gradient(p, px_, py_);
  ops_.gradient(c_, cx_, cy_);
  a_ = h_.cube() / 12.0;
  u_ = -h_.square() / 12.0 * px_;
  v_ = -h_.square() / 12.0 * py_;
  D_ = ops_.divergence(h_ * cx_, h_ * cy_);
}

void FilmSystem::jvp(const Vector& v, Vector& out) {
  const Field dh = segment(v, 0, n_);
  const Field dp = segment(v, 1, n_);
  const Field dc = segment(v, 2, n_);
  const double Pc = params_.Pc;
  const double Pe = params_.Pe_c;

  Field dpx, dpy, dcx, dcy;
  ops_.gradient(dp, dpx, dpy);
  ops_.gradient(dc, dcx, dcy);
  const Field b = h_.square() / 4.0 * dh;
  const Field dFh = ops_.divergence(a_ * dpx + b * px_, a_ * dpy + b * py_) + Pc * dc;
  const Field dFp = dp + ops_.laplacian(dh);

  const Field hs = h_.square();
  const Field du = -(h_ * dh / 6.0) * px_ - hs / 12.0 * dpx;
  const Field dv = -(h_ * dh / 6.0) * py_ - hs / 12.0 * dpy;
  const Field ddiv = ops_.divergence(dh * cx_ + h_ * dcx, dh * cy_ + h_ * dcy);
  const Field dFc = -(du * cx_ + dv * cy_) - (u_ * dcx + v_ * dcy) + ddiv / (h_ * Pe) -
                    D_ * dh / (hs * Pe) + J_ * dc / h_ - J_ * c_ * dh / hs -
                    Pc * (2.0 * c_ - 1.0) * dc / h_ + Pc * (c_ - 1.0) * c_ * dh / hs;

  out.resize(3 * n_);
  out.segment(0, n_) = dFh.matrix();
  out.segment(n_, n_) = dFp.matrix();
  out.segment(2 * n_, n_) = dFc.matrix();
}

void FilmSystem::prepare_preconditioner(double gamma) {
  const double Pc = params_.Pc;
  const double a_ref = h_.cube().mean() / 12.0;
  const double s = (J_ / h_ - Pc * (2.0 * c_ - 1.0) / h_).mean();
  const double g = (-J_ * c_ / h_.square() + Pc * (c_ - 1.0) * c_ / h_.square()).mean();
  const auto& k2 = ops_.k_squared();
  ga_ = gamma * a_ref;
  m11_ = 1.0 + ga_ * k2.square();
  m12_ = Eigen::ArrayXd::Constant(k2.size(), -gamma * Pc);
  m21_ = Eigen::ArrayXd::Constant(k2.size(), -gamma * g);
  m22_ = 1.0 + gamma * k2 / params_.Pe_c - gamma * s;
  det_ = m11_ * m22_ - m12_ * m21_;
  // Guard against near-singular modes; any nonzero scaling keeps GMRES exact.
  for (Eigen::Index i = 0; i < det_.size(); ++i) {
    if (std::abs(det_[i]) < 1e-12) det_[i] = det_[i] < 0 ? -1e-12 : 1e-12;
  }
}

void FilmSystem::precondition(const Vector& r, Vector& z) {
  const auto& k2 = ops_.k_squared();
  const spectral::Spectrum rh = ops_.forward(segment(r, 0, n_));
  const spectral::Spectrum rp = ops_.forward(segment(r, 1, n_));
  const spectral::Spectrum rc = ops_.forward(segment(r, 2, n_));
  // Eliminating dp through the pressure row adds gamma a k^2 r_p to the h-row.
  const spectral::Spectrum bh = rh + ga_ * k2 * rp;
  const spectral::Spectrum dh = (m22_ * bh - m12_ * rc) / det_;
  const spectral::Spectrum dc = (m11_ * rc - m21_ * bh) / det_;
  const spectral::Spectrum dp = -rp + k2 * dh;
  z.resize(3 * n_);
  z.segment(0, n_) = ops_.inverse(dh).matrix();
  z.segment(n_, n_) = ops_.inverse(dp).matrix();
  z.segment(2 * n_, n_) = ops_.inverse(dc).matrix();
}

// ---------------------------------------------------------------------------
// FluoresceinSystem

FluoresceinSystem::FluoresceinSystem(const PeriodicGrid& grid, Field J, const ModelParams& params,
                                     FlowProvider flow)
    : grid_(grid),
      ops_(spectral::ops_for(grid)),
      J_(std::move(J)),
      params_(params),
      flow_(std::move(flow)),
      n_(static_cast<Eigen::Index>(grid.size())),
      mask_(grid.size(), true) {
  if (J_.size() != n_) throw DimensionError("evaporation field does not match the grid");
}

void FluoresceinSystem::load(double t) {
  if (loaded_ && t == loaded_t_) return;
  Field h, p, c;
  flow_(t, h, p, c);
  if (h.size() != n_ || p.size() != n_ || c.size() != n_) {
    throw DimensionError("flow provider returned fields of the wrong size");
  }
  if (!(h.minCoeff() > model::kThicknessFloor)) {
    throw InvalidStateError("film thickness fell below the positivity floor");
  }
  Field px, py;
  ops_.gradient(p, px, py);
  u_ = -h.square() / 12.0 * px;
  v_ = -h.square() / 12.0 * py;
  react_ = (J_ - params_.Pc * (c - 1.0)) / h;
  h_ = std::move(h);
  loaded_t_ = t;
  loaded_ = true;
}

Field FluoresceinSystem::apply(const Field& f) const {
  Field fx, fy;
  ops_.gradient(f, fx, fy);
  return -(u_ * fx + v_ * fy) + ops_.divergence(h_ * fx, h_ * fy) / (h_ * params_.Pe_f) +
         react_ * f;
}

void FluoresceinSystem::rhs(double t, const Vector& y, Vector& f) {
  load(t);
  f = apply(Eigen::Map<const Field>(y.data(), n_)).matrix();
}

void FluoresceinSystem::linearize(double t, const Vector& y, const Vector& f) {
  DaeSystem::linearize(t, y, f);
  load(t);
}

void FluoresceinSystem::jvp(const Vector& v, Vector& out) {
  load(lin_t_);
  out = apply(Eigen::Map<const Field>(v.data(), n_)).matrix();
}

void FluoresceinSystem::prepare_preconditioner(double gamma) {
  diag_ = 1.0 + gamma * ops_.k_squared() / params_.Pe_f - gamma * react_.mean();
}

void FluoresceinSystem::precondition(const Vector& r, Vector& z) {
  const spectral::Spectrum s = ops_.forward(Eigen::Map<const Field>(r.data(), n_));
  z = ops_.inverse(s / diag_).matrix();
}

}  // namespace tearfilm::dae
