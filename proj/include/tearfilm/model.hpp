#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tearfilm/spectral.hpp"

namespace tearfilm::model {

using spectral::PeriodicGrid;

/// Nondimensional constants of the thin-film/osmolarity/fluorescein model,
/// plus the dimensional scales used only for reporting.
struct ModelParams {
  double Pc = 0.392;     // osmosis strength
  double Pe_c = 6.76;    // osmolarity Peclet number
  double Pe_f = 27.7;    // fluorescein Peclet number
  double phi = 0.417;    // Napierian extinction
  double f0 = 1.0;       // initial FL concentration / f_cr
  double I0 = 1.0;       // intensity normalization
  double v_b = 0.1;      // baseline evaporation / peak rate

  double d = 4.5e-6;              // initial thickness [m]
  double ell = 0.54e-3;           // horizontal length scale [m]
  double v_max = 10.0e-6 / 60.0;  // peak thinning rate [m/s]

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
  /// Time scale d / v_max in seconds.
  double time_scale() const { return d / v_max; }
};

struct EvaporationPeak {
  double a = 1.0;
  double x = 0.0;
  double y = 0.0;
  double x_w = 0.5;
  double y_w = 0.5;
};

/// Baseline plus Gaussian peaks. Gaussians are not periodized unless
/// periodic_images is set, in which case the eight neighbouring images of
/// each peak are added.
struct EvaporationMap {
  double v_b = 0.1;
  std::vector<EvaporationPeak> peaks;
  bool periodic_images = false;

  void validate() const;
  double operator()(double x, double y) const;
  Field evaluate(const PeriodicGrid& grid) const;
};

Field eval_J(const std::vector<EvaporationPeak>& peaks, double v_b, const PeriodicGrid& grid,
             bool periodic_images = false);

/// Discretized state. f is empty until the fluorescein stage has run.
struct FieldState {
  Field h;
  Field p;
  Field c;
  Field f;
  double t = 0.0;

  /// h = c = 1, p = 0, f = f0.
  static FieldState uniform(std::size_t n, double f0);
};

using NonPhysicalState = InvalidStateError;

/// Smallest thickness the residual accepts before reporting an invalid step.
inline constexpr double kThicknessFloor = 1e-4;

std::pair<Field, Field> velocities(const Field& h, const Field& p, const PeriodicGrid& grid);

struct Residual {
  Field r_h;  // dh/dt
  Field r_p;  // algebraic, zero on the constraint manifold
  Field r_c;  // dc/dt
  Field r_f;  // df/dt, empty when the state carries no f
};

struct MechanismTerms {
  Field advection;
  Field diffusion;
  Field evaporation;
  Field osmosis;
};

/// Time derivatives of h, c, f (transport equations divided through by h)
/// and the pressure constraint p + lap(h).
Residual residual(const FieldState& state, const Field& J, const ModelParams& params,
                  const PeriodicGrid& grid);

/// Osmolarity-equation terms: dc/dt = -advection + diffusion + evaporation - osmosis.
MechanismTerms mechanism_terms(const FieldState& state, const Field& J, const ModelParams& params,
                               const PeriodicGrid& grid);

Field fl_intensity(const Field& h, const Field& f, const ModelParams& params);
double fl_intensity(double h, double f, const ModelParams& params);

/// Integral of h * (c or f) over the periodic cell.
double total_solute(const Field& h, const Field& conc, const PeriodicGrid& grid);

enum class Quantity { thickness, time, rate, length };

struct Dimensional {
  double value;
  std::string unit;
};

Dimensional dimensionalize(double value, Quantity kind, const ModelParams& params);
/// Parses "thickness", "time", "rate" or "length".
Quantity parse_quantity(const std::string& name);

}  // namespace tearfilm::model
