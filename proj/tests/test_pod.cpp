#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "tearfilm/pod.hpp"

using namespace tearfilm;
using model::FieldState;
using model::ModelParams;
using spectral::PeriodicGrid;

namespace {

struct Fixture {
  PeriodicGrid grid{20, 20};
  ModelParams params;
  Field J = model::eval_J({{1.0, 0.0, 0.0, 0.5, 0.5}}, 0.1, grid);
  dae::IntegratorConfig cfg;
  pod::Snapshots snaps;
  Fixture() { snaps = pod::capture_snapshots(J, params, cfg, grid, 0.5, 12); }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_SUITE("pod") {

TEST_CASE("default ranks and snapshot counts follow the window") {
  const auto r = pod::default_ranks(0.5);
  CHECK(r.h == 20);
  CHECK(r.p == 30);
  CHECK(r.c == 20);
  CHECK(pod::default_ranks(0.25).p == 25);
  CHECK(pod::default_ranks(1.0).h == 40);
  CHECK(pod::default_snapshot_count(0.25) == 40);
  CHECK(pod::default_snapshot_count(1.0) == 100);
}

TEST_CASE("basis is orthonormal and its projector idempotent") {
  const auto& fx = fixture();
  Eigen::VectorXd sigma;
  const Eigen::MatrixXd B = pod::compute_basis(fx.snaps.c.columns, 6, &sigma);
  CHECK((B.transpose() * B - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-12);
  const Eigen::MatrixXd P = B * B.transpose();
  CHECK((P * P - P).norm() < 1e-12);
  for (Eigen::Index k = 1; k < sigma.size(); ++k) CHECK(sigma[k] <= sigma[k - 1]);
  CHECK_THROWS_AS(pod::compute_basis(fx.snaps.c.columns, 13), std::invalid_argument);
}

TEST_CASE("projection error falls with rank and matches the singular-value tail") {
  const auto& S = fixture().snaps.h.columns;
  Eigen::VectorXd sigma;
  double last = 1e300;
  for (int k = 1; k <= 8; ++k) {
    const Eigen::MatrixXd B = pod::compute_basis(S, k, &sigma);
    const double err = (S - B * (B.transpose() * S)).norm();
    CHECK(err <= last);
    CHECK(err == doctest::Approx(sigma.tail(sigma.size() - k).norm()).epsilon(1e-6).scale(sigma[0]));
    last = err;
  }
}

TEST_CASE("full-rank and rank-one snapshot sets are reconstructed exactly") {
  Eigen::MatrixXd S(50, 6);
  const Eigen::VectorXd col = Eigen::VectorXd::LinSpaced(50, -1.0, 2.0);
  for (int k = 0; k < 6; ++k) S.col(k) = col;
  Eigen::MatrixXd B = pod::compute_basis(S, 1);
  CHECK((S - B * (B.transpose() * S)).norm() < 1e-12 * S.norm());
  const Eigen::MatrixXd R = Eigen::MatrixXd::Random(50, 8);
  B = pod::compute_basis(R, 8);
  CHECK((R - B * (B.transpose() * R)).norm() < 1e-12 * R.norm());
  const Eigen::VectorXd v = Eigen::VectorXd::Random(50);
  const Eigen::VectorXd Pv = B * (B.transpose() * v);
  CHECK((B * (B.transpose() * Pv) - Pv).norm() < 1e-12);
}

TEST_CASE("radial snapshots reproduce a single circular spot") {
  const PeriodicGrid grid(60, 60);
  const ModelParams params;
  const std::vector<model::EvaporationPeak> peaks{model::EvaporationPeak{}};
  const Field J = model::eval_J(peaks, 0.1, grid);
  dae::IntegratorConfig cfg;
  cfg.snapshot_every = 0.1;
  const auto basis = pod::radial_snapshot_basis(peaks, 0.1, params, cfg, grid, 3.0, 50, pod::default_ranks(0.5),
                                                axisym::RadialGrid(std::numbers::pi, 81), true);
  CHECK(basis.source == "radial");
  const auto red = pod::integrate_reduced(basis, FieldState::uniform(grid.size(), 1.0), J, params, cfg, grid);
  const auto full = dae::simulate(FieldState::uniform(grid.size(), 1.0), J, params, cfg, grid);
  REQUIRE(red.tbut.has_value());
  REQUIRE(full.tbut.has_value());
  CHECK(*red.tbut == doctest::Approx(*full.tbut).epsilon(0.02));
  const std::size_t k = std::min(red.snapshots.size(), full.snapshots.size()) - 1;
  CHECK(red.times[k] == full.times[k]);
  CHECK(dae::relative_error(red.snapshots[k].h, full.snapshots[k].h) < 0.1);
  CHECK(dae::relative_error(red.snapshots[k].c, full.snapshots[k].c) < 0.1);
}

TEST_CASE("reduced Jacobian matches central differences of the reduced residual") {
  const auto& fx = fixture();
  const auto basis = pod::build_basis(fx.snaps, {6, 8, 6, 6}, false);
  auto sys = pod::reduced_system(basis, fx.grid, fx.J, fx.params);
  const auto& last = fx.snaps;
  const Eigen::Index n = sys->size();
  dae::Vector y(n);
  y << basis.B_h.transpose() * last.h.columns.rightCols(1), basis.B_p.transpose() * last.p.columns.rightCols(1),
      basis.B_c.transpose() * last.c.columns.rightCols(1);
  dae::Vector f;
  sys->rhs(0.0, y, f);
  sys->linearize(0.0, y, f);
  Eigen::MatrixXd Jac;
  REQUIRE(sys->jacobian(Jac));
  Eigen::MatrixXd fd(n, n);
  const double eps = 1e-6;
  for (Eigen::Index k = 0; k < n; ++k) {
    dae::Vector yp = y, ym = y, fp, fm;
    yp[k] += eps;
    ym[k] -= eps;
    sys->rhs(0.0, yp, fp);
    sys->rhs(0.0, ym, fm);
    fd.col(k) = (fp - fm) / (2 * eps);
  }
  CHECK((Jac - fd).norm() / fd.norm() < 1e-7);
}

TEST_CASE("reduced solve within the snapshot window reproduces the full solve") {
  const auto& fx = fixture();
  const auto basis = pod::build_basis(fx.snaps, {12, 12, 12, 12}, true);
  auto cfg = fx.cfg;
  cfg.t_end = 0.5;
  cfg.snapshot_times = {0.5};
  const auto red = pod::integrate_reduced(basis, FieldState::uniform(fx.grid.size(), 1.0), fx.J, fx.params, cfg, fx.grid);
  REQUIRE(red.snapshots.size() == 1);
  const auto& S = fx.snaps;
  const Field h = S.h.columns.rightCols(1).array();
  const Field c = S.c.columns.rightCols(1).array();
  const Field f = S.f.columns.rightCols(1).array();
  CHECK(dae::relative_error(red.snapshots[0].h, h) < 1e-5);
  CHECK(dae::relative_error(red.snapshots[0].c, c) < 1e-5);
  CHECK(dae::relative_error(red.snapshots[0].f, f) < 1e-4);
}

TEST_CASE("basis files round-trip") {
  const auto& fx = fixture();
  const auto basis = pod::build_basis(fx.snaps, {4, 5, 4, 4}, true);
  const auto path = std::filesystem::temp_directory_path() / "tearfilm_basis_test.tfpod";
  pod::save_basis(path, basis);
  const auto back = pod::load_basis(path);
  std::filesystem::remove(path);
  CHECK(back.B_h == basis.B_h);
  CHECK(back.B_p == basis.B_p);
  CHECK(back.B_c == basis.B_c);
  CHECK(back.B_f == basis.B_f);
  CHECK(back.nx == 20);
  CHECK(back.source == basis.source);
  CHECK(back.tau == basis.tau);
}

TEST_CASE("mismatched bases are rejected") {
  const auto& fx = fixture();
  const auto basis = pod::build_basis(fx.snaps, {4, 5, 4, 4}, false);
  const PeriodicGrid other(16, 16);
  CHECK_THROWS_AS(pod::reduced_system(basis, other, Field::Constant(other.size(), 0.1), fx.params), DimensionError);
}

}
