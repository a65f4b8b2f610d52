#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tearfilm/axisym.hpp"
#include "tearfilm/streak.hpp"

using namespace tearfilm;
using axisym::RadialGrid;
using spectral::PeriodicGrid;

TEST_SUITE("axisym") {

TEST_CASE("Chebyshev nodes, differentiation and quadrature") {
  const RadialGrid rg(std::numbers::pi, 33);
  const Eigen::VectorXd& r = rg.r();
  CHECK(r[0] == 0.0);
  CHECK(r[32] == doctest::Approx(std::numbers::pi));
  for (int k = 1; k < 33; ++k) CHECK(r[k] > r[k - 1]);
  const Eigen::VectorXd r2 = r.array().square();
  CHECK((rg.D() * r2 - 2 * r).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(rg.integrate(r) == doctest::Approx(std::pow(std::numbers::pi, 2) / 2).epsilon(1e-13));
  const Eigen::VectorXd g = (-r2.array()).exp();
  CHECK(rg.integrate(g.cwiseProduct(r)) == doctest::Approx(0.5 * (1 - std::exp(-std::pow(std::numbers::pi, 2)))).epsilon(1e-12));
  CHECK(rg.interpolate(r2, 1.234) == doctest::Approx(1.234 * 1.234).epsilon(1e-13));
}

TEST_CASE("radial profiles map onto the Cartesian grid") {
  const RadialGrid rg(std::numbers::pi, 41);
  const PeriodicGrid g(30, 30);
  const Eigen::VectorXd r2 = rg.r().array().square();
  const Field u = axisym::radial_to_cartesian(rg, r2, 0.4, -0.3, g);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double q = std::pow(g.x(i) - 0.4, 2) + std::pow(g.y(j) + 0.3, 2);
      const double expect = std::sqrt(q) >= std::numbers::pi ? r2[40] : q;
      CHECK(u[g.index(i, j)] == doctest::Approx(expect).epsilon(1e-11));
    }
  }
}

TEST_CASE("a constant profile maps to a constant field") {
  const RadialGrid rg(std::numbers::pi, 41);
  const PeriodicGrid g(20, 20);
  const Field u = axisym::radial_to_cartesian(rg, Eigen::VectorXd::Constant(41, 0.7), 1.0, 0.5, g);
  CHECK((u - 0.7).abs().maxCoeff() < 1e-13);
}

TEST_CASE("radial evaporation agrees with the Cartesian map") {
  const RadialGrid rg(std::numbers::pi, 41);
  const PeriodicGrid g(60, 60);
  const Eigen::VectorXd Jr = axisym::radial_evaporation({1.0, 0.5}, 0.1, rg);
  const model::EvaporationMap map{0.1, {{1.0, 0.0, 0.0, 0.5, 0.5}}, false};
  for (int k = 0; k < rg.size(); ++k) {
    const double r = rg.r()[k];
    CHECK(Jr[k] == doctest::Approx(map(r / std::sqrt(2.0), r / std::sqrt(2.0))).epsilon(1e-14));
  }
  const Field Jc = axisym::radial_to_cartesian(rg, Jr, 0.0, 0.0, g);
  CHECK((Jc - map.evaluate(g)).abs().maxCoeff() < 1e-6);
}

TEST_CASE("axisymmetric solve conserves solute and breaks up") {
  model::ModelParams p;
  dae::IntegratorConfig cfg;
  const RadialGrid rg(std::numbers::pi, 61);
  const auto rec = axisym::integrate_radial({1.0, 0.5}, 0.1, p, cfg, rg);
  REQUIRE(rec.tbut.has_value());
  CHECK(*rec.tbut == doctest::Approx(2.4).epsilon(0.03));
  CHECK(std::abs(rec.solute_c.back() / rec.solute_c.front() - 1) < 1e-5);
  CHECK(std::abs(rec.solute_f.back() / rec.solute_f.front() - 1) < 1e-5);
  CHECK(rec.center.back().h == doctest::Approx(dae::kDefaultBreakupThickness).epsilon(1e-4));
  const auto& fin = rec.final_state;
  Eigen::Index ih, ip, ic;
  fin.h.minCoeff(&ih);
  fin.p.maxCoeff(&ip);
  fin.c.maxCoeff(&ic);
  CHECK(ih == 0);
  CHECK(ic == 0);
  CHECK(rg.r()[ip] == doctest::Approx(1.0).epsilon(0.35));
}

}

TEST_SUITE("streak") {

TEST_CASE("streak evaporation is a one-dimensional Gaussian") {
  const auto line = PeriodicGrid::line(64);
  const Field J = streak::streak_evaporation({1.0, 0.5}, 0.1, line);
  CHECK(J[line.origin_i()] == doctest::Approx(1.0));
  CHECK(J[10] == doctest::Approx(0.1 + 0.9 * std::exp(-0.5 * std::pow(line.x(10) / 0.5, 2))));
  CHECK_THROWS(streak::streak_evaporation({1.0, 0.5}, 0.1, PeriodicGrid(16, 16)));
  CHECK_THROWS(streak::streak_evaporation({0.05, 0.5}, 0.1, line));
}

TEST_CASE("streak without evaporation is steady") {
  const auto line = PeriodicGrid::line(32);
  dae::IntegratorConfig cfg;
  cfg.t_end = 3.0;
  const auto rec = dae::simulate(model::FieldState::uniform(line.size(), 1.0), Field::Zero(line.size()),
                                 model::ModelParams{}, cfg, line);
  CHECK(rec.halted_reason == dae::HaltReason::t_end);
  CHECK((rec.final_state.h - 1).abs().maxCoeff() < 1e-14);
  CHECK((rec.final_state.c - 1).abs().maxCoeff() < 1e-14);
}

TEST_CASE("streak breakup time is resolved in space") {
  model::ModelParams p;
  dae::IntegratorConfig cfg;
  const auto a = streak::integrate_streak({1.0, 0.5}, 0.1, p, cfg, 64);
  const auto b = streak::integrate_streak({1.0, 0.5}, 0.1, p, cfg, 128);
  REQUIRE(a.tbut.has_value());
  REQUIRE(b.tbut.has_value());
  CHECK(*b.tbut == doctest::Approx(1.87).epsilon(0.02));
  CHECK(std::abs(*a.tbut - *b.tbut) < 1e-4);
  CHECK(std::abs(b.solute_c.back() / b.solute_c.front() - 1) < 1e-5);
  const auto& fin = b.final_state;
  for (int i = 0; i < 126; ++i) CHECK(fin.h[i] == doctest::Approx(fin.h[126 - i]).epsilon(1e-7));
}

}
