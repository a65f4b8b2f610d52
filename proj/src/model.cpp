#include "tearfilm/model.hpp"

#include <cmath>
#include <numbers>

namespace tearfilm::model {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_size(const Field& u, const PeriodicGrid& grid, const char* name) {
  if (static_cast<std::size_t>(u.size()) != grid.size()) {
    throw DimensionError(std::string(name) + " does not match the grid size");
  }
}

double gaussian(const EvaporationPeak& pk, double x, double y) {
  const double sx = (x - pk.x) / pk.x_w;
  const double sy = (y - pk.y) / pk.y_w;
  return std::exp(-0.5 * (sx * sx + sy * sy));
}

}  // namespace

void ModelParams::validate() const {
  require(Pc > 0, "Pc must be positive");
  require(Pe_c > 0, "Pe_c must be positive");
  require(Pe_f > 0, "Pe_f must be positive");
  require(phi > 0, "phi must be positive");
  require(I0 > 0, "I0 must be positive");
  require(f0 > 0, "f0 must be positive");
  require(v_b > 0, "v_b must be positive");
  require(d > 0 && ell > 0 && v_max > 0, "dimensional scales must be positive");
}

void EvaporationMap::validate() const {
  require(v_b > 0, "v_b must be positive");
  for (const auto& pk : peaks) {
    require(pk.x_w > 0 && pk.y_w > 0, "evaporation peak widths must be positive");
    require(pk.a > v_b, "evaporation peak height must exceed v_b");
    const double pi = std::numbers::pi;
    require(pk.x > -pi && pk.x <= pi && pk.y > -pi && pk.y <= pi,
            "evaporation peak centre must lie in (-pi, pi]^2");
  }
}

double EvaporationMap::operator()(double x, double y) const {
  double J = v_b;
  const double period = 2.0 * std::numbers::pi;
  for (const auto& pk : peaks) {
    double g = 0.0;
    if (periodic_images) {
      for (int sx = -1; sx <= 1; ++sx)
        for (int sy = -1; sy <= 1; ++sy) g += gaussian(pk, x + sx * period, y + sy * period);
    } else {
      g = gaussian(pk, x, y);
    }
    J += (pk.a - v_b) * g;
  }
  return J;
}

Field EvaporationMap::evaluate(const PeriodicGrid& grid) const {
  validate();
  Field out(static_cast<Eigen::Index>(grid.size()));
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) out[grid.index(i, j)] = (*this)(grid.x(i), grid.y(j));
  return out;
}

Field eval_J(const std::vector<EvaporationPeak>& peaks, double v_b, const PeriodicGrid& grid,
             bool periodic_images) {
  EvaporationMap map{v_b, peaks, periodic_images};
  return map.evaluate(grid);
}

FieldState FieldState::uniform(std::size_t n, double f0) {
  const auto m = static_cast<Eigen::Index>(n);
  FieldState s;
  s.h = Field::Ones(m);
  s.p = Field::Zero(m);
  s.c = Field::Ones(m);
  s.f = Field::Constant(m, f0);
  s.t = 0.0;
  return s;
}

std::pair<Field, Field> velocities(const Field& h, const Field& p, const PeriodicGrid& grid) {
  check_size(h, grid, "h");
  check_size(p, grid, "p");
  Field px, py;
  spectral::ops_for(grid).gradient(p, px, py);
  const Field a = -h.square() / 12.0;
  return {a * px, a * py};
}

namespace {

struct Transport {
  Field advection;
  Field diffusion;
  Field evaporation;
  Field source;  // osmosis
};

// Terms of a solute equation for concentration s:
//   ds/dt = -advection + diffusion + evaporation - osmosis.
Transport transport_terms(const spectral::SpectralOps& ops, const Field& h, const Field& u,
                          const Field& v, const Field& s, const Field& c, const Field& J,
                          double Pc, double Pe) {
  Field sx, sy;
  ops.gradient(s, sx, sy);
  Transport t;
  t.advection = u * sx + v * sy;
  t.diffusion = ops.divergence(h * sx, h * sy) / (h * Pe);
  t.evaporation = J * s / h;
  t.source = Pc * (c - 1.0) * s / h;
  return t;
}

void check_state(const FieldState& state, const PeriodicGrid& grid) {
  check_size(state.h, grid, "h");
  check_size(state.p, grid, "p");
  check_size(state.c, grid, "c");
  if (state.f.size() != 0) check_size(state.f, grid, "f");
  const double hmin = state.h.minCoeff();
  if (!(hmin > kThicknessFloor) || !state.h.allFinite()) {
    throw NonPhysicalState("film thickness fell below the positivity floor (min h = " +
                           std::to_string(hmin) + ")");
  }
}

}  // namespace

Residual residual(const FieldState& state, const Field& J, const ModelParams& params,
                  const PeriodicGrid& grid) {
  check_state(state, grid);
  check_size(J, grid, "J");
  const auto& ops = spectral::ops_for(grid);
  const Field& h = state.h;

  Field px, py;
  ops.gradient(state.p, px, py);
  const Field a = h.cube() / 12.0;
  const Field u = -h.square() / 12.0 * px;
  const Field v = -h.square() / 12.0 * py;

  Residual r;
  r.r_h = ops.divergence(a * px, a * py) - J + params.Pc * (state.c - 1.0);
  r.r_p = state.p + ops.laplacian(h);
  const auto tc = transport_terms(ops, h, u, v, state.c, state.c, J, params.Pc, params.Pe_c);
  r.r_c = -tc.advection + tc.diffusion + tc.evaporation - tc.source;
  if (state.f.size() != 0) {
    const auto tf = transport_terms(ops, h, u, v, state.f, state.c, J, params.Pc, params.Pe_f);
    r.r_f = -tf.advection + tf.diffusion + tf.evaporation - tf.source;
  }
  return r;
}

MechanismTerms mechanism_terms(const FieldState& state, const Field& J, const ModelParams& params,
                               const PeriodicGrid& grid) {
  check_state(state, grid);
  check_size(J, grid, "J");
  const auto& ops = spectral::ops_for(grid);
  Field px, py;
  ops.gradient(state.p, px, py);
  const Field u = -state.h.square() / 12.0 * px;
  const Field v = -state.h.square() / 12.0 * py;
  auto t = transport_terms(ops, state.h, u, v, state.c, state.c, J, params.Pc, params.Pe_c);
  return {std::move(t.advection), std::move(t.diffusion), std::move(t.evaporation),
          std::move(t.source)};
}

Field fl_intensity(const Field& h, const Field& f, const ModelParams& params) {
  if (h.size() != f.size()) throw DimensionError("fl_intensity: h and f differ in size");
  return params.I0 * (1.0 - (-params.phi * f * h).exp()) / (1.0 + f.square());
}

double fl_intensity(double h, double f, const ModelParams& params) {
  return params.I0 * (1.0 - std::exp(-params.phi * f * h)) / (1.0 + f * f);
}

double total_solute(const Field& h, const Field& conc, const PeriodicGrid& grid) {
  check_size(h, grid, "h");
  check_size(conc, grid, "concentration");
  return spectral::integrate_domain(h * conc, grid);
}

Dimensional dimensionalize(double value, Quantity kind, const ModelParams& params) {
  switch (kind) {
    case Quantity::thickness:
      return {value * params.d, "m"};
    case Quantity::time:
      return {value * params.time_scale(), "s"};
    case Quantity::rate:
      return {value * params.v_max, "m/s"};
    case Quantity::length:
      return {value * params.ell, "m"};
  }
  throw std::invalid_argument("dimensionalize: unknown quantity");
}

Quantity parse_quantity(const std::string& name) {
  if (name == "thickness") return Quantity::thickness;
  if (name == "time") return Quantity::time;
  if (name == "rate") return Quantity::rate;
  if (name == "length") return Quantity::length;
  throw std::invalid_argument("unknown quantity kind '" + name + "'");
}

}  // namespace tearfilm::model
