#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tearfilm/model.hpp"

using namespace tearfilm;
using model::EvaporationPeak;
using model::FieldState;
using model::ModelParams;
using spectral::PeriodicGrid;

namespace {

FieldState wavy_state(const PeriodicGrid& g) {
  FieldState s = FieldState::uniform(g.size(), 1.0);
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x(i), y = g.y(j);
      const auto k = g.index(i, j);
      s.h[k] = 1.0 - 0.3 * std::exp(-(x * x + y * y)) + 0.05 * std::cos(x + y);
      s.c[k] = 1.0 + 0.4 * std::exp(-(x * x + 2 * y * y));
      s.f[k] = 1.0 + 0.2 * std::sin(y);
    }
  }
  s.p = -spectral::laplacian(s.h, g);
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("parameter validation names the violated constraint") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.Pe_c = -1;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("Pe_c"), std::invalid_argument);
}

TEST_CASE("evaporation map is the baseline plus Gaussian peaks") {
  const PeriodicGrid g(60, 60);
  const std::vector<EvaporationPeak> peaks{{1.0, 0.0, 0.0, 0.5, 0.5}, {1.5, 1.2, -0.4, 0.3, 0.8}};
  const Field J = model::eval_J(peaks, 0.1, g);
  CHECK(J[g.index(g.origin_i(), g.origin_j())] == doctest::Approx(1.0 + 1.4 * std::exp(-0.5 * (1.44 / 0.09 + 0.16 / 0.64))));
  const model::EvaporationMap map{0.1, peaks, false};
  const double x = 0.7, y = -0.2;
  const double expect = 0.1 + 0.9 * std::exp(-0.5 * (x * x + y * y) / 0.25) +
                        1.4 * std::exp(-0.5 * ((x - 1.2) * (x - 1.2) / 0.09 + (y + 0.4) * (y + 0.4) / 0.64));
  CHECK(map(x, y) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(J.minCoeff() > 0.1);
  CHECK(J.minCoeff() < 0.1 + 1e-6);
}

TEST_CASE("single centred peak evaporates at its peak rate") {
  const PeriodicGrid g(60, 60);
  const Field J = model::eval_J({EvaporationPeak{}}, 0.1, g);
  CHECK(J[g.index(g.origin_i(), g.origin_j())] == 1.0);
  CHECK_THROWS(model::EvaporationMap({0.1, {{0.05, 0, 0, 0.5, 0.5}}, false}).validate());
}

TEST_CASE("uniform state residual reduces to the evaporation balance") {
  const PeriodicGrid g(16, 16);
  ModelParams p;
  const Field J = Field::Constant(g.size(), 0.3);
  const auto r = model::residual(FieldState::uniform(g.size(), 1.0), J, p, g);
  CHECK(r.r_h.matrix().cwiseAbs().maxCoeff() == doctest::Approx(0.3));
  CHECK((r.r_h + 0.3).abs().maxCoeff() < 1e-14);
  CHECK((r.r_c - 0.3).abs().maxCoeff() < 1e-14);
  CHECK((r.r_f - 0.3).abs().maxCoeff() < 1e-14);
  CHECK(r.r_p.abs().maxCoeff() < 1e-14);
}

TEST_CASE("mechanism terms sum to the osmolarity rate") {
  const PeriodicGrid g(40, 40);
  ModelParams p;
  const Field J = model::eval_J({{1.0, 0.0, 0.0, 0.5, 0.5}}, 0.1, g);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    FieldState s = wavy_state(g);
    const double a = U(rng), b = U(rng), c = U(rng);
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const auto k = g.index(i, j);
        s.h[k] += 0.2 * a * std::sin(g.x(i) + b);
        s.c[k] *= 1.0 + 0.3 * c * std::cos(2 * g.y(j));
        s.p[k] += 0.1 * b * std::cos(g.x(i) - g.y(j));
      }
    }
    const auto r = model::residual(s, J, p, g);
    const auto m = model::mechanism_terms(s, J, p, g);
    const Field sum = -m.advection + m.diffusion + m.evaporation - m.osmosis;
    CHECK((sum - r.r_c).abs().maxCoeff() < 1e-12 * std::max(1.0, r.r_c.abs().maxCoeff()));
  }
}

TEST_CASE("thickness residual agrees with a fourth-order difference oracle on 512^2") {
  const PeriodicGrid g(64, 64);
  ModelParams p;
  const std::vector<EvaporationPeak> peaks{EvaporationPeak{}};
  FieldState s = FieldState::uniform(g.size(), 1.0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) s.h[g.index(i, j)] = 1.0 + 0.1 * std::sin(g.x(i)) * std::sin(g.y(j));
  s.p = -spectral::laplacian(s.h, g);
  const auto r = model::residual(s, model::eval_J(peaks, 0.1, g), p, g);
  CHECK(r.r_p.abs().maxCoeff() < 1e-10);
  CHECK(std::abs(s.p.mean()) < 1e-14);

  const int n = 512;
  const double d = 2 * std::numbers::pi / n;
  const auto X = [&](int i) { return -std::numbers::pi + (((i % n) + n) % n + 1) * d; };
  // flux components q = h^3 / 12 grad p with p = 0.2 sin x sin y
  const auto qx = [](double x, double y) { return std::pow(1 + 0.1 * std::sin(x) * std::sin(y), 3) / 12 * 0.2 * std::cos(x) * std::sin(y); };
  const auto qy = [](double x, double y) { return std::pow(1 + 0.1 * std::sin(x) * std::sin(y), 3) / 12 * 0.2 * std::sin(x) * std::cos(y); };
  const model::EvaporationMap J{0.1, peaks, false};
  double err = 0.0, scale = 0.0;
  for (int j = 0; j < 64; ++j) {
    for (int i = 0; i < 64; ++i) {
      const int I = 8 * (i + 1) - 1, Jn = 8 * (j + 1) - 1;
      const double x = X(I), y = X(Jn);
      const double dqx = (-qx(X(I + 2), y) + 8 * qx(X(I + 1), y) - 8 * qx(X(I - 1), y) + qx(X(I - 2), y)) / (12 * d);
      const double dqy = (-qy(x, X(Jn + 2)) + 8 * qy(x, X(Jn + 1)) - 8 * qy(x, X(Jn - 1)) + qy(x, X(Jn - 2))) / (12 * d);
      const double expect = dqx + dqy - J(x, y);
      err = std::max(err, std::abs(r.r_h[g.index(i, j)] - expect));
      scale = std::max(scale, std::abs(expect));
    }
  }
  CHECK(err < 1e-6 * scale);
}

TEST_CASE("depth-averaged velocity follows the pressure gradient") {
  const PeriodicGrid g(16, 16);
  const Field h = Field::Ones(g.size());
  Field pr(g.size());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) pr[g.index(i, j)] = std::sin(g.x(i));
  const auto [u, v] = model::velocities(h, pr, g);
  for (int i = 0; i < g.nx(); ++i) CHECK(u[g.index(i, 3)] == doctest::Approx(-std::cos(g.x(i)) / 12).epsilon(1e-12));
  CHECK(v.abs().maxCoeff() < 1e-14);

  const auto [u0, v0] = model::velocities(h, Field::Constant(g.size(), 3.0), g);
  CHECK(u0.abs().maxCoeff() < 1e-14);
  CHECK(v0.abs().maxCoeff() < 1e-14);

  Field py(g.size());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) py[g.index(i, j)] = std::sin(g.y(j));
  const auto [u2, v2] = model::velocities(Field::Constant(g.size(), 2.0), py, g);
  CHECK(u2.abs().maxCoeff() < 1e-14);
  for (int j = 0; j < g.ny(); ++j) CHECK(v2[g.index(2, j)] == doctest::Approx(-std::cos(g.y(j)) / 3).epsilon(1e-12));
}

TEST_CASE("residual rejects non-positive thickness") {
  const PeriodicGrid g(16, 16);
  FieldState s = FieldState::uniform(g.size(), 1.0);
  s.h[5] = -0.1;
  CHECK_THROWS_AS(model::residual(s, Field::Constant(g.size(), 0.1), ModelParams{}, g), InvalidStateError);
}

TEST_CASE("intensity and unit conversion") {
  ModelParams p;
  CHECK(model::fl_intensity(1.0, 1.0, p) == doctest::Approx((1 - std::exp(-0.417)) / 2));
  CHECK(model::fl_intensity(0.0, 3.0, p) == 0.0);
  CHECK(model::fl_intensity(1.0, 0.0, p) == 0.0);
  CHECK(model::fl_intensity(1.0, 1.0, p) == doctest::Approx(0.17048).epsilon(1e-4));
  CHECK(model::fl_intensity(1e4, 2.0, p) == doctest::Approx(1.0 / 5.0));
  CHECK(model::dimensionalize(1.0, model::Quantity::thickness, p).value == doctest::Approx(4.5e-6));
  CHECK(model::dimensionalize(1.0, model::Quantity::time, p).value == doctest::Approx(27.0));
  CHECK(model::dimensionalize(1.0, model::Quantity::length, p).value == doctest::Approx(0.54e-3));
  const auto t = model::dimensionalize(2.4, model::Quantity::time, p);
  CHECK(t.unit == "s");
  CHECK(t.value == doctest::Approx(2.4 * 4.5e-6 / (10e-6 / 60)));
  CHECK(model::parse_quantity("thickness") == model::Quantity::thickness);
  CHECK_THROWS(model::parse_quantity("speed"));
}

TEST_CASE("total solute of the uniform state is the cell area") {
  const PeriodicGrid g(16, 16);
  const auto s = FieldState::uniform(g.size(), 1.0);
  CHECK(model::total_solute(s.h, s.c, g) == doctest::Approx(g.measure()));
  CHECK(model::total_solute(Field::Constant(g.size(), 2.0), Field::Constant(g.size(), 0.5), g) ==
        doctest::Approx(4 * std::numbers::pi * std::numbers::pi));
}

}
