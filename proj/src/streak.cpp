#include "tearfilm/streak.hpp"

namespace tearfilm::streak {

Field streak_evaporation(const StreakPeak& peak, double v_b, const spectral::PeriodicGrid& line) {
  if (!line.is_line()) throw std::invalid_argument("streak evaporation needs a line grid");
  if (!(peak.x_w > 0)) throw std::invalid_argument("x_w must be positive");
  if (!(peak.a > v_b)) throw std::invalid_argument("peak height must exceed v_b");
  const Field s = line.x_coords() / peak.x_w;
  return v_b + (peak.a - v_b) * (-0.5 * s.square()).exp();
}

dae::SolutionRecord integrate_streak(const StreakPeak& peak, double v_b,
                                     const model::ModelParams& params,
                                     const dae::IntegratorConfig& config, int nx) {
  const auto line = spectral::PeriodicGrid::line(nx);
  const Field J = streak_evaporation(peak, v_b, line);
  return dae::simulate(model::FieldState::uniform(line.size(), params.f0), J, params, config, line);
}

}  // namespace tearfilm::streak
