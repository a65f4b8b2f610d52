#include "tearfilm/pod.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/SVD>

namespace tearfilm::pod {

using dae::Vector;

PodRanks default_ranks(double tau) {
  if (tau < 0.375) return {15, 25, 15, 15};
  if (tau < 0.75) return {20, 30, 20, 20};
  return {40, 50, 40, 40};
}

int default_snapshot_count(double tau) {
  if (tau < 0.375) return 40;
  if (tau < 0.75) return 50;
  return 100;
}

namespace {

std::vector<double> uniform_times(double t_end, int count) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) t[k] = t_end * k / (count - 1);
  t.back() = t_end;
  return t;
}

SnapshotMatrix stack(const std::string& name, const std::vector<FieldState>& states,
                     const std::vector<double>& times, Field FieldState::*member) {
  SnapshotMatrix m;
  m.variable = name;
  m.times = times;
  const auto rows = (states.front().*member).size();
  m.columns.resize(rows, static_cast<Eigen::Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    m.columns.col(static_cast<Eigen::Index>(k)) = (states[k].*member).matrix();
  }
  return m;
}

// Galerkin projection of the (h, p, c) system onto span(B_h) x span(B_p) x span(B_c).
// Gradients of the basis vectors are precomputed so that lifted derivatives
// are matrix products. Divergence terms of the h equation are projected by
// parts (the spectral derivative is skew-symmetric), which is exact.
class ReducedFilm : public dae::DaeSystem {
 public:
  ReducedFilm(const PodBasis& b, const PeriodicGrid& grid, Field J, const ModelParams& params)
      : b_(b),
        ops_(spectral::ops_for(grid)),
        J_(std::move(J)),
        params_(params),
        kh_(b.B_h.cols()),
        kp_(b.B_p.cols()),
        kc_(b.B_c.cols()) {
    mask_.assign(static_cast<std::size_t>(kh_ + kp_ + kc_), true);
    for (Eigen::Index i = kh_; i < kh_ + kp_; ++i) mask_[i] = false;
    gradients(b.B_h, Ghx_, Ghy_);
    gradients(b.B_p, Gpx_, Gpy_);
    gradients(b.B_c, Gcx_, Gcy_);
    Eigen::MatrixXd lap_h(b.B_h.rows(), kh_);
    for (Eigen::Index j = 0; j < kh_; ++j) lap_h.col(j) = ops_.laplacian(b.B_h.col(j).array()).matrix();
    M_ph_ = b.B_p.transpose() * lap_h;
    M_hc_ = b.B_h.transpose() * b.B_c;
    const Eigen::VectorXd base = (-J_ - params_.Pc).matrix();
    q_h_ = b.B_h.transpose() * base;
  }

  Eigen::Index size() const override { return kh_ + kp_ + kc_; }
  const std::vector<bool>& differential() const override { return mask_; }

  void rhs(double /*t*/, const Vector& y, Vector& f) override {
    const Lifted s = lift_state(y);
    const Eigen::ArrayXd a = s.h.cube() / 12.0;
    const Eigen::ArrayXd hh = s.h.square() / 12.0;
    f.resize(size());
    f.segment(0, kh_) = -Ghx_.transpose() * (a * s.px).matrix() -
                        Ghy_.transpose() * (a * s.py).matrix() + q_h_ +
                        params_.Pc * (M_hc_ * y.segment(kh_ + kp_, kc_));
    f.segment(kh_, kp_) = y.segment(kh_, kp_) + M_ph_ * y.segment(0, kh_);
    const Field div = ops_.divergence(s.h * s.cx, s.h * s.cy);
    const Eigen::ArrayXd g = hh * (s.px * s.cx + s.py * s.cy) + div / (s.h * params_.Pe_c) +
                             (J_ - params_.Pc * (s.c - 1.0)) * s.c / s.h;
    f.segment(kh_ + kp_, kc_) = b_.B_c.transpose() * g.matrix();
  }

  bool jacobian(Eigen::MatrixXd& out) override {
    const Lifted s = lift_state(lin_y_);
    const Eigen::ArrayXd& h = s.h;
    const Eigen::ArrayXd a = h.cube() / 12.0;
    const Eigen::ArrayXd hh = h.square() / 12.0;
    const double Pe = params_.Pe_c;
    const Eigen::Index ih = 0, ip = kh_, ic = kh_ + kp_;
    out.setZero(size(), size());

    // h rows.
    const Eigen::ArrayXd da = h.square() / 4.0;
    out.block(ih, ih, kh_, kh_) = -Ghx_.transpose() * ((da * s.px).matrix().asDiagonal() * b_.B_h) -
                                  Ghy_.transpose() * ((da * s.py).matrix().asDiagonal() * b_.B_h);
    out.block(ih, ip, kh_, kp_) = -Ghx_.transpose() * (a.matrix().asDiagonal() * Gpx_) -
                                  Ghy_.transpose() * (a.matrix().asDiagonal() * Gpy_);
    out.block(ih, ic, kh_, kc_) = params_.Pc * M_hc_;

    // p rows.
    out.block(ip, ih, kp_, kh_) = M_ph_;
    out.block(ip, ip, kp_, kp_).setIdentity();

    // c rows. The diffusion term is projected by parts against
    // E = grad(B_c / (h Pe)).
    const Field div = ops_.divergence(h * s.cx, h * s.cy);
    Eigen::MatrixXd Ex(h.size(), kc_), Ey(h.size(), kc_);
    const Eigen::ArrayXd w = 1.0 / (h * Pe);
    for (Eigen::Index j = 0; j < kc_; ++j) {
      Field gx, gy;
      ops_.gradient(b_.B_c.col(j).array() * w, gx, gy);
      Ex.col(j) = gx.matrix();
      Ey.col(j) = gy.matrix();
    }
    const Eigen::ArrayXd react = J_ - params_.Pc * (s.c - 1.0);
    const Eigen::ArrayXd dg_dh = h / 6.0 * (s.px * s.cx + s.py * s.cy) -
                                 div / (h.square() * Pe) - react * s.c / h.square();
    out.block(ic, ih, kc_, kh_) = b_.B_c.transpose() * (dg_dh.matrix().asDiagonal() * b_.B_h) -
                                  Ex.transpose() * (s.cx.matrix().asDiagonal() * b_.B_h) -
                                  Ey.transpose() * (s.cy.matrix().asDiagonal() * b_.B_h);
    out.block(ic, ip, kc_, kp_) = b_.B_c.transpose() * ((hh * s.cx).matrix().asDiagonal() * Gpx_ +
                                                        (hh * s.cy).matrix().asDiagonal() * Gpy_);
    const Eigen::ArrayXd dg_dc = (J_ - params_.Pc * (2.0 * s.c - 1.0)) / h;
    out.block(ic, ic, kc_, kc_) =
        b_.B_c.transpose() * ((hh * s.px).matrix().asDiagonal() * Gcx_ +
                              (hh * s.py).matrix().asDiagonal() * Gcy_ +
                              dg_dc.matrix().asDiagonal() * b_.B_c) -
        Ex.transpose() * (h.matrix().asDiagonal() * Gcx_) -
        Ey.transpose() * (h.matrix().asDiagonal() * Gcy_);
    return true;
  }

  // Weights equivalent to the full-grid test: coefficient errors are node
  // errors in the 2-norm, spread over fewer components.
  void error_weights(const Vector& a, const Vector& b, double rtol, double atol,
                     Vector& w) const override {
    const double n = static_cast<double>(b_.B_h.rows());
    const double scale = std::sqrt(2.0 * n / static_cast<double>(kh_ + kc_));
    w.resize(size());
    const std::array<std::pair<Eigen::Index, Eigen::Index>, 3> blocks = {
        {{0, kh_}, {kh_, kp_}, {kh_ + kp_, kc_}}};
    for (const auto& [start, len] : blocks) {
      const double rms =
          std::max(a.segment(start, len).norm(), b.segment(start, len).norm()) / std::sqrt(n);
      w.segment(start, len).setConstant(scale * (atol + rtol * rms));
    }
  }

  FieldState lift(const Vector& y, double t) const {
    FieldState s;
    s.h = (b_.B_h * y.segment(0, kh_)).array();
    s.p = (b_.B_p * y.segment(kh_, kp_)).array();
    s.c = (b_.B_c * y.segment(kh_ + kp_, kc_)).array();
    s.t = t;
    return s;
  }

  Vector project(const FieldState& s) const {
    Vector y(size());
    y.segment(0, kh_) = b_.B_h.transpose() * s.h.matrix();
    y.segment(kh_, kp_) = b_.B_p.transpose() * s.p.matrix();
    y.segment(kh_ + kp_, kc_) = b_.B_c.transpose() * s.c.matrix();
    return y;
  }

 private:
  struct Lifted {
    Eigen::ArrayXd h, c, px, py, cx, cy;
  };

  Lifted lift_state(const Vector& y) const {
    Lifted s;
    const auto yh = y.segment(0, kh_);
    const auto yp = y.segment(kh_, kp_);
    const auto yc = y.segment(kh_ + kp_, kc_);
    s.h = (b_.B_h * yh).array();
    const double hmin = s.h.minCoeff();
    if (!(hmin > model::kThicknessFloor) || !y.allFinite()) {
      throw InvalidStateError("film thickness fell below the positivity floor (min h = " +
                              std::to_string(hmin) + ")");
    }
    s.c = (b_.B_c * yc).array();
    s.px = (Gpx_ * yp).array();
    s.py = (Gpy_ * yp).array();
    s.cx = (Gcx_ * yc).array();
    s.cy = (Gcy_ * yc).array();
    return s;
  }

  void gradients(const Eigen::MatrixXd& B, Eigen::MatrixXd& gx, Eigen::MatrixXd& gy) const {
    gx.resize(B.rows(), B.cols());
    gy.resize(B.rows(), B.cols());
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      Field x, y;
      ops_.gradient(B.col(j).array(), x, y);
      gx.col(j) = x.matrix();
      gy.col(j) = y.matrix();
    }
  }

  const PodBasis& b_;
  const spectral::SpectralOps& ops_;
  Field J_;
  ModelParams params_;
  Eigen::Index kh_, kp_, kc_;
  std::vector<bool> mask_;
  Eigen::MatrixXd Ghx_, Ghy_, Gpx_, Gpy_, Gcx_, Gcy_;
  Eigen::MatrixXd M_ph_;  // B_p^T lap B_h
  Eigen::MatrixXd M_hc_;  // B_h^T B_c
  Eigen::VectorXd q_h_;   // B_h^T (-J - Pc)
};

void check_basis(const PodBasis& b, const PeriodicGrid& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (b.B_h.rows() != n || b.B_p.rows() != n || b.B_c.rows() != n ||
      (b.B_f.size() != 0 && b.B_f.rows() != n)) {
    throw DimensionError("POD basis does not match the grid");
  }
  if (b.B_h.cols() < 1 || b.B_p.cols() < 1 || b.B_c.cols() < 1) {
    throw std::invalid_argument("POD basis has an empty block");
  }
}

}  // namespace

Snapshots capture_snapshots(const Field& J, const ModelParams& params,
                            const IntegratorConfig& config, const PeriodicGrid& grid, double tau,
                            int count) {
  if (!(tau > 0)) throw std::invalid_argument("snapshot window must be positive");
  if (count < 2) throw std::invalid_argument("at least two snapshots are required");
  IntegratorConfig cfg = config;
  cfg.t_end = tau;
  cfg.snapshot_times = uniform_times(tau, count);
  cfg.snapshot_every = 0.0;
  const auto rec = dae::simulate(FieldState::uniform(grid.size(), params.f0), J, params, cfg, grid);
  if (rec.snapshots.size() != static_cast<std::size_t>(count)) {
    throw std::runtime_error("full solve ended before the snapshot window closed (" +
                             dae::to_string(rec.halted_reason) + ")");
  }
  Snapshots s;
  s.h = stack("h", rec.snapshots, rec.times, &FieldState::h);
  s.p = stack("p", rec.snapshots, rec.times, &FieldState::p);
  s.c = stack("c", rec.snapshots, rec.times, &FieldState::c);
  s.f = stack("f", rec.snapshots, rec.times, &FieldState::f);
  s.nx = grid.nx();
  s.ny = grid.ny();
  return s;
}

Eigen::MatrixXd compute_basis(const Eigen::MatrixXd& S, int k, Eigen::VectorXd* singular_values) {
  if (k < 1 || k > std::min(S.rows(), S.cols())) {
    throw std::invalid_argument("POD rank " + std::to_string(k) + " out of range 1.." +
                                std::to_string(std::min(S.rows(), S.cols())));
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU);
  if (singular_values) *singular_values = svd.singularValues();
  return svd.matrixU().leftCols(k);
}

PodBasis build_basis(const Snapshots& snaps, const PodRanks& ranks, bool with_f) {
  PodBasis b;
  b.B_h = compute_basis(snaps.h.columns, ranks.h, &b.sigma_h);
  b.B_p = compute_basis(snaps.p.columns, ranks.p, &b.sigma_p);
  b.B_c = compute_basis(snaps.c.columns, ranks.c, &b.sigma_c);
  if (with_f && snaps.f.columns.size() != 0) b.B_f = compute_basis(snaps.f.columns, ranks.f, &b.sigma_f);
  b.nx = snaps.nx;
  b.ny = snaps.ny;
  b.snapshot_count = static_cast<int>(snaps.h.columns.cols());
  b.tau = snaps.h.times.empty() ? 0.0 : snaps.h.times.back();
  return b;
}

std::unique_ptr<dae::DaeSystem> reduced_system(const PodBasis& basis, const PeriodicGrid& grid,
                                               const Field& J, const ModelParams& params) {
  check_basis(basis, grid);
  return std::make_unique<ReducedFilm>(basis, grid, J, params);
}

SolutionRecord integrate_reduced(const PodBasis& basis, const FieldState& initial, const Field& J,
                                 const ModelParams& params, const IntegratorConfig& config,
                                 const PeriodicGrid& grid) {
  config.validate();
  params.validate();
  check_basis(basis, grid);
  ReducedFilm sys(basis, grid, J, params);
  Vector y0 = sys.project(initial);
  sys.make_consistent(initial.t, y0);
  dae::NdfOptions opts = config.ndf_options();
  opts.linear_solver = dae::LinearSolverKind::dense;
  IntegratorConfig cfg = config;
  cfg.record_history = true;
  const dae::Lift lift = [&sys](const Vector& y, double t) { return sys.lift(y, t); };
  SolutionRecord rec = dae::record_run(sys, y0, initial.t, lift, opts, J, params, cfg, grid);
  if (rec.history.size() >= 2) {
    dae::solve_f_stage(rec, J, params, cfg, grid, initial.f.size() != 0 ? &initial.f : nullptr,
                       basis.B_f.size() != 0 ? &basis.B_f : nullptr);
  }
  if (!config.record_history) rec.history.clear();
  return rec;
}

PodBasis radial_snapshot_basis(const std::vector<model::EvaporationPeak>& peaks, double v_b,
                               const ModelParams& params, const IntegratorConfig& config,
                               const PeriodicGrid& grid, double horizon, int count,
                               const PodRanks& ranks, const axisym::RadialGrid& radial,
                               bool with_f) {
  if (peaks.empty()) throw std::invalid_argument("radial basis needs at least one peak");
  for (const auto& pk : peaks) {
    if (pk.x_w != pk.y_w) throw std::invalid_argument("radial basis requires circular peaks (x_w == y_w)");
  }
  if (count < 2) throw std::invalid_argument("at least two snapshots are required");
  IntegratorConfig cfg = config;
  cfg.t_end = horizon;
  cfg.snapshot_times = uniform_times(horizon, count);
  cfg.snapshot_every = 0.0;

  std::map<std::pair<double, double>, axisym::RadialRecord> solves;
  for (const auto& pk : peaks) {
    const auto key = std::make_pair(pk.a, pk.x_w);
    if (!solves.count(key)) {
      solves.emplace(key, axisym::integrate_radial({pk.a, pk.x_w}, v_b, params, cfg, radial));
    }
  }
  std::size_t total = 0;
  for (const auto& pk : peaks) total += solves.at({pk.a, pk.x_w}).snapshots.size();
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd H(n, total), P(n, total), C(n, total), F(n, total);
  Eigen::Index col = 0;
  for (const auto& pk : peaks) {
    for (const auto& prof : solves.at({pk.a, pk.x_w}).snapshots) {
      H.col(col) = axisym::radial_to_cartesian(radial, prof.h, pk.x, pk.y, grid).matrix();
      P.col(col) = axisym::radial_to_cartesian(radial, prof.p, pk.x, pk.y, grid).matrix();
      C.col(col) = axisym::radial_to_cartesian(radial, prof.c, pk.x, pk.y, grid).matrix();
      F.col(col) = axisym::radial_to_cartesian(radial, prof.f, pk.x, pk.y, grid).matrix();
      ++col;
    }
  }
  const auto cap = [&](int k) { return std::min<int>(k, static_cast<int>(total)); };
  PodBasis b;
  b.B_h = compute_basis(H, cap(ranks.h), &b.sigma_h);
  b.B_p = compute_basis(P, cap(ranks.p), &b.sigma_p);
  b.B_c = compute_basis(C, cap(ranks.c), &b.sigma_c);
  if (with_f) b.B_f = compute_basis(F, cap(ranks.f), &b.sigma_f);
  b.nx = grid.nx();
  b.ny = grid.ny();
  b.source = "radial";
  b.tau = horizon;
  b.snapshot_count = static_cast<int>(total);
  return b;
}

// ---------------------------------------------------------------------------
// Basis files: a plain-text header terminated by "end\n", then each basis as
// little-endian float64 in column-major order.

namespace {

std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

void write_le(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(m.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
}

void read_le(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = swap_bytes(bits);
    m.data()[i] = std::bit_cast<double>(bits);
  }
  if (!in) throw std::runtime_error("basis file is truncated");
}

}  // namespace

void save_basis(const std::filesystem::path& path, const PodBasis& basis) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> blocks = {
      {"h", &basis.B_h}, {"p", &basis.B_p}, {"c", &basis.B_c}};
  if (basis.B_f.size() != 0) blocks.push_back({"f", &basis.B_f});
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "TFPOD 1\n"
      << "grid " << basis.nx << " " << basis.ny << "\n"
      << "source " << basis.source << "\n"
      << "tau " << basis.tau << "\n"
      << "snapshots " << basis.snapshot_count << "\n";
  for (const auto& [name, m] : blocks) hdr << "basis " << name << " " << m->rows() << " " << m->cols() << "\n";
  hdr << "end\n";
  out << hdr.str();
  for (const auto& [name, m] : blocks) write_le(out, *m);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PodBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "TFPOD 1") throw std::runtime_error(path.string() + " is not a POD basis file");
  PodBasis b;
  std::vector<std::pair<std::string, std::pair<long, long>>> blocks;
  while (std::getline(in, line) && line != "end") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "grid") {
      ls >> b.nx >> b.ny;
    } else if (key == "source") {
      ls >> b.source;
    } else if (key == "tau") {
      ls >> b.tau;
    } else if (key == "snapshots") {
      ls >> b.snapshot_count;
    } else if (key == "basis") {
      std::string name;
      long rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      blocks.push_back({name, {rows, cols}});
    } else {
      throw std::runtime_error("unknown basis header key '" + key + "'");
    }
    if (ls.fail()) throw std::runtime_error("malformed basis header line '" + line + "'");
  }
  if (line != "end") throw std::runtime_error("basis header is not terminated");
  for (const auto& [name, dims] : blocks) {
    Eigen::MatrixXd* m = name == "h"   ? &b.B_h
                         : name == "p" ? &b.B_p
                         : name == "c" ? &b.B_c
                         : name == "f" ? &b.B_f
                                       : nullptr;
    if (!m) throw std::runtime_error("unknown basis variable '" + name + "'");
    m->resize(dims.first, dims.second);
    read_le(in, *m);
  }
  return b;
}

}  // namespace tearfilm::pod
