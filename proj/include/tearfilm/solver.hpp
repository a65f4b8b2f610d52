#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tearfilm/film_system.hpp"

namespace tearfilm::dae {

/// Breakup thickness: 1 um over the 4.5 um initial film.
inline constexpr double kDefaultBreakupThickness = 1.0 / 4.5;

struct IntegratorConfig {
  double rtol = 1e-6;
  double atol = 1e-8;
  int max_order = 5;
  double initial_dt = 0.0;  // 0 selects automatically
  double max_dt = std::numeric_limits<double>::infinity();
  double tbu_threshold = kDefaultBreakupThickness;
  double t_end = 10.0;
  bool stop_at_breakup = true;
  /// Explicit snapshot times; if empty and snapshot_every > 0, a uniform cadence from 0.
  std::vector<double> snapshot_times;
  double snapshot_every = 0.0;
  bool ndf = true;
  ErrorNorm norm = ErrorNorm::rms;
  LinearSolverKind linear_solver = LinearSolverKind::krylov;
  double krylov_rel_tol = 1e-4;
  int krylov_restart = 40;
  /// Probe points (x, y) at which traces are recorded.
  std::vector<std::pair<double, double>> probes{{0.0, 0.0}};
  /// Keep per-step (h, p, c) for the fluorescein stage.
  bool record_history = true;

  void validate() const;
  NdfOptions ndf_options() const;
  /// Requested snapshot times within [0, t_end], sorted.
  std::vector<double> snapshot_schedule() const;
};

enum class HaltReason { event, t_end, failure };
std::string to_string(HaltReason r);

struct ProbeSample {
  double h = 0, p = 0, c = 0, f = 0, I = 0;
  double advection = 0, diffusion = 0, evaporation = 0, osmosis = 0;
};

struct ProbeTrace {
  double x = 0.0;
  double y = 0.0;
  std::vector<ProbeSample> samples;  // aligned with SolutionRecord::trace_times
};

/// Accepted step of the (h, p, c) integration, as needed to drive the
/// fluorescein stage.
struct StepRecord {
  double t = 0.0;
  int order = 1;
  Field h, p, c;
  Field dh, dc;  // time derivatives from the multistep history
};

struct SolutionRecord {
  PeriodicGrid grid{8, 8};
  std::vector<double> times;
  std::vector<FieldState> snapshots;

  std::vector<double> trace_times;
  std::vector<ProbeTrace> probes;
  /// Wall-clock seconds since the start of the integration at each trace time.
  std::vector<double> trace_wall;
  std::vector<double> solute_c;     // integral of h c
  std::vector<double> solute_f;     // integral of h f (after the f stage)
  std::vector<double> water;        // integral of h
  std::vector<double> water_rate;   // integral of (-J + Pc (c - 1))
  double max_constraint_residual = 0.0;

  std::optional<double> tbut;
  HaltReason halted_reason = HaltReason::t_end;
  std::string message;
  FieldState final_state;

  std::vector<StepRecord> history;
  IntegratorStats stats;
  double wall_seconds = 0.0;
  bool has_f = false;
};

/// Hooks through which drive() reports progress.
struct DriveHooks {
  /// Smallest film thickness in the state (event function).
  std::function<double(const Vector& y)> min_thickness;
  /// Called at each requested snapshot time.
  std::function<void(double t, const Vector& y)> snapshot;
  /// Called after every accepted step, before event handling.
  std::function<void(const NdfIntegrator& integ)> on_step;
  /// Called at every accepted step up to the event, and at the event itself.
  std::function<void(double t, const Vector& y)> sample;
};

struct DriveOutcome {
  HaltReason reason = HaltReason::t_end;
  std::optional<double> tbut;
  double t_final = 0.0;
  Vector y_final;
  std::string message;
};

/// Steps an initialized integrator to config.t_end, emitting snapshots and
/// samples, and halts at the first crossing of the breakup thickness, located
/// by bisection on the dense output.
DriveOutcome drive(NdfIntegrator& integ, const IntegratorConfig& config, const DriveHooks& hooks);

/// Maps a system state (or rate) to grid fields; linear in y.
using Lift = std::function<FieldState(const Vector& y, double t)>;

/// Integrates a system whose states lift to (h, p, c) fields on `grid` and
/// records snapshots, probe traces, diagnostics and the step history.
SolutionRecord record_run(DaeSystem& sys, const Vector& y0, double t0, const Lift& lift,
                          const NdfOptions& options, const Field& J, const ModelParams& params,
                          const IntegratorConfig& config, const PeriodicGrid& grid);

/// Integrates the (h, p, c) system from `initial` (p is recomputed from h).
SolutionRecord integrate(const FieldState& initial, const Field& J, const ModelParams& params,
                         const IntegratorConfig& config, const PeriodicGrid& grid);

/// Integrates the fluorescein equation along a recorded (h, p, c) history and
/// fills f, I and the integral of h f into the record. The step sequence of
/// the recorded run is replayed; times off that sequence use cubic Hermite
/// interpolation of the history. With basis_f, f is restricted to its span
/// (Galerkin projection of the fluorescein equation). f starts from f_initial,
/// or from the uniform value params.f0 when it is null.
void solve_f_stage(SolutionRecord& record, const Field& J, const ModelParams& params,
                   const IntegratorConfig& config, const PeriodicGrid& grid,
                   const Field* f_initial = nullptr, const Eigen::MatrixXd* basis_f = nullptr);

/// Both stages.
SolutionRecord simulate(const FieldState& initial, const Field& J, const ModelParams& params,
                        const IntegratorConfig& config, const PeriodicGrid& grid);

/// ||a - b||_2 / ||b||_2.
double relative_error(const Field& a, const Field& b);

/// Probe values of a full state; f may be empty.
ProbeSample probe_sample(const FieldState& s, const Field& J, const ModelParams& params,
                         const PeriodicGrid& grid, double x, double y);

}  // namespace tearfilm::dae
