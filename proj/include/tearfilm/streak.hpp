#pragma once

#include "tearfilm/solver.hpp"

namespace tearfilm::streak {

struct StreakPeak {
  double a = 1.0;
  double x_w = 0.5;
};

/// J(x) = v_b + (a - v_b) exp(-(x / x_w)^2 / 2) on a line grid.
Field streak_evaporation(const StreakPeak& peak, double v_b, const spectral::PeriodicGrid& line);

/// Periodic 1D model (the y_w -> infinity limit of an elliptical spot),
/// solved with the 2D machinery on a line grid from the uniform state.
dae::SolutionRecord integrate_streak(const StreakPeak& peak, double v_b,
                                     const model::ModelParams& params,
                                     const dae::IntegratorConfig& config, int nx = 128);

}  // namespace tearfilm::streak
