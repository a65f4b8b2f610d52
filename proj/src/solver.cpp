#include "tearfilm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace tearfilm::dae {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

std::vector<ProbeSample> sample_probes(const FieldState& s, const Field& J, const ModelParams& params,
                                       const PeriodicGrid& grid,
                                       const std::vector<std::pair<double, double>>& points) {
  const auto& ops = spectral::ops_for(grid);
  const auto H = ops.forward(s.h);
  const auto P = ops.forward(s.p);
  const auto C = ops.forward(s.c);
  const auto m = model::mechanism_terms(s, J, params, grid);
  const auto A = ops.forward(m.advection);
  const auto D = ops.forward(m.diffusion);
  const auto E = ops.forward(m.evaporation);
  const auto O = ops.forward(m.osmosis);
  spectral::Spectrum F;
  if (s.f.size() != 0) F = ops.forward(s.f);
  std::vector<ProbeSample> out;
  out.reserve(points.size());
  for (const auto& [x, y] : points) {
    ProbeSample ps;
    ps.h = ops.evaluate_at(H, x, y);
    ps.p = ops.evaluate_at(P, x, y);
    ps.c = ops.evaluate_at(C, x, y);
    ps.advection = ops.evaluate_at(A, x, y);
    ps.diffusion = ops.evaluate_at(D, x, y);
    ps.evaporation = ops.evaluate_at(E, x, y);
    ps.osmosis = ops.evaluate_at(O, x, y);
    if (s.f.size() != 0) {
      ps.f = ops.evaluate_at(F, x, y);
      ps.I = model::fl_intensity(ps.h, ps.f, params);
    }
    out.push_back(ps);
  }
  return out;
}

}  // namespace

void IntegratorConfig::validate() const {
  require(rtol > 0 && atol > 0, "integrator tolerances must be positive");
  require(max_order >= 1 && max_order <= 5, "max_order must lie in 1..5");
  require(initial_dt >= 0, "initial_dt must be non-negative");
  require(max_dt > 0, "max_dt must be positive");
  require(tbu_threshold > 0 && tbu_threshold < 1, "tbu_threshold must lie in (0, 1)");
  require(t_end > 0, "t_end must be positive");
  require(snapshot_every >= 0, "snapshot_every must be non-negative");
  require(krylov_rel_tol > 0 && krylov_rel_tol < 1, "krylov_rel_tol must lie in (0, 1)");
  require(krylov_restart >= 1, "krylov_restart must be at least 1");
}

NdfOptions IntegratorConfig::ndf_options() const {
  NdfOptions o;
  o.rtol = rtol;
  o.atol = atol;
  o.max_order = max_order;
  o.initial_step = initial_dt;
  o.max_step = max_dt;
  o.ndf = ndf;
  o.norm = norm;
  o.linear_solver = linear_solver;
  o.krylov_rel_tol = krylov_rel_tol;
  o.krylov_restart = krylov_restart;
  return o;
}

std::vector<double> IntegratorConfig::snapshot_schedule() const {
  std::vector<double> out;
  if (!snapshot_times.empty()) {
    for (double t : snapshot_times)
      if (t >= 0.0 && t <= t_end) out.push_back(t);
  } else if (snapshot_every > 0.0) {
    for (long k = 0;; ++k) {
      const double t = k * snapshot_every;
      if (t > t_end * (1.0 + 1e-12)) break;
      out.push_back(std::min(t, t_end));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string to_string(HaltReason r) {
  switch (r) {
    case HaltReason::event:
      return "event";
    case HaltReason::t_end:
      return "t_end";
    case HaltReason::failure:
      return "failure";
  }
  return "unknown";
}

DriveOutcome drive(NdfIntegrator& integ, const IntegratorConfig& config, const DriveHooks& hooks) {
  const auto schedule = config.snapshot_schedule();
  std::size_t next = 0;
  const double thr = config.tbu_threshold;
  DriveOutcome out;

  auto emit_until = [&](double t_limit, bool inclusive, const Vector* y_at_limit) {
    while (next < schedule.size() &&
           (schedule[next] < t_limit || (inclusive && schedule[next] <= t_limit))) {
      const double ts = schedule[next];
      if (hooks.snapshot) {
        if (y_at_limit && ts == t_limit) {
          hooks.snapshot(ts, *y_at_limit);
        } else {
          hooks.snapshot(ts, integ.interpolate(ts));
        }
      }
      ++next;
    }
  };

  const double t0 = integ.t();
  emit_until(t0 + 1e-14 * std::max(1.0, std::abs(t0)), true, nullptr);
  if (hooks.sample) hooks.sample(t0, integ.y());
  if (config.stop_at_breakup && hooks.min_thickness(integ.y()) <= thr) {
    out.reason = HaltReason::event;
    out.tbut = t0;
    out.t_final = t0;
    out.y_final = integ.y();
    return out;
  }

  while (integ.t() < config.t_end) {
    try {
      integ.step(config.t_end);
    } catch (const StepFailure& e) {
      out.reason = HaltReason::failure;
      out.message = e.what();
      break;
    } catch (const InvalidStateError& e) {
      out.reason = HaltReason::failure;
      out.message = e.what();
      break;
    }
    if (hooks.on_step) hooks.on_step(integ);
    const double t = integ.t();
    const Vector& y = integ.y();
    if (config.stop_at_breakup && hooks.min_thickness(y) <= thr) {
      double lo = integ.t_previous();
      double hi = t;
      for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hooks.min_thickness(integ.interpolate(mid)) <= thr) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      const Vector ye = hi == t ? y : integ.interpolate(hi);
      emit_until(hi, false, nullptr);
      if (hooks.sample) hooks.sample(hi, ye);
      out.reason = HaltReason::event;
      out.tbut = hi;
      out.t_final = hi;
      out.y_final = ye;
      return out;
    }
    emit_until(t, true, &y);
    if (hooks.sample) hooks.sample(t, y);
  }
  if (out.reason != HaltReason::failure) out.reason = HaltReason::t_end;
  out.t_final = integ.t();
  out.y_final = integ.y();
  return out;
}

SolutionRecord record_run(DaeSystem& sys, const Vector& y0, double t0, const Lift& lift,
                          const NdfOptions& options, const Field& J, const ModelParams& params,
                          const IntegratorConfig& config, const PeriodicGrid& grid) {
  const auto start = Clock::now();
  const auto& ops = spectral::ops_for(grid);
  NdfIntegrator integ(sys, options);
  integ.initialize(t0, y0);

  SolutionRecord rec;
  rec.grid = grid;
  for (const auto& [x, y] : config.probes) rec.probes.push_back({x, y, {}});

  if (config.record_history) {
    Vector f0(sys.size());
    sys.rhs(t0, y0, f0);
    const FieldState s0 = lift(y0, t0);
    StepRecord s;
    s.t = t0;
    s.h = s0.h;
    s.p = s0.p;
    s.c = s0.c;
    // Algebraic rows of f0 are residuals, not rates; only h and c rates are used.
    const FieldState d0 = lift(f0, t0);
    s.dh = d0.h;
    s.dc = d0.c;
    rec.history.push_back(std::move(s));
  }

  DriveHooks hooks;
  hooks.min_thickness = [&](const Vector& y) { return lift(y, 0.0).h.minCoeff(); };
  hooks.snapshot = [&](double t, const Vector& y) {
    rec.times.push_back(t);
    rec.snapshots.push_back(lift(y, t));
  };
  hooks.on_step = [&](const NdfIntegrator& it) {
    FieldState s = lift(it.y(), it.t());
    rec.max_constraint_residual =
        std::max(rec.max_constraint_residual, (s.p + ops.laplacian(s.h)).abs().maxCoeff());
    if (!config.record_history) return;
    const FieldState d = lift(it.derivative(), it.t());
    StepRecord r;
    r.t = it.t();
    r.order = it.last_order();
    r.h = std::move(s.h);
    r.p = std::move(s.p);
    r.c = std::move(s.c);
    r.dh = d.h;
    r.dc = d.c;
    rec.history.push_back(std::move(r));
  };
  hooks.sample = [&](double t, const Vector& y) {
    const FieldState s = lift(y, t);
    rec.trace_times.push_back(t);
    rec.trace_wall.push_back(seconds_since(start));
    const auto samples = sample_probes(s, J, params, grid, config.probes);
    for (std::size_t k = 0; k < samples.size(); ++k) rec.probes[k].samples.push_back(samples[k]);
    rec.solute_c.push_back(model::total_solute(s.h, s.c, grid));
    rec.water.push_back(ops.integrate(s.h));
    rec.water_rate.push_back(ops.integrate(-J + params.Pc * (s.c - 1.0)));
  };

  const DriveOutcome outcome = drive(integ, config, hooks);
  rec.halted_reason = outcome.reason;
  rec.tbut = outcome.tbut;
  rec.message = outcome.message;
  rec.final_state = lift(outcome.y_final, outcome.t_final);
  rec.stats = integ.stats();
  rec.wall_seconds = seconds_since(start);
  return rec;
}

SolutionRecord integrate(const FieldState& initial, const Field& J, const ModelParams& params,
                         const IntegratorConfig& config, const PeriodicGrid& grid) {
  config.validate();
  params.validate();
  FilmSystem sys(grid, J, params);
  Vector y0 = sys.pack(initial);
  sys.make_consistent(initial.t, y0);
  const Lift lift = [&sys](const Vector& y, double t) { return sys.unpack(y, t); };
  return record_run(sys, y0, initial.t, lift, config.ndf_options(), J, params, config, grid);
}

namespace {

// (h, p, c) along a recorded history: exact at step times, cubic Hermite in
// between with p recomputed from h.
class HistoryFlow {
 public:
  HistoryFlow(const SolutionRecord& rec, const PeriodicGrid& grid)
      : rec_(rec), ops_(spectral::ops_for(grid)) {
    times_.reserve(rec.history.size());
    for (const auto& s : rec.history) times_.push_back(s.t);
  }

  void operator()(double t, Field& h, Field& p, Field& c) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it != times_.end() && *it == t) {
      const auto& s = rec_.history[static_cast<std::size_t>(it - times_.begin())];
      h = s.h;
      p = s.p;
      c = s.c;
      return;
    }
    if (t == rec_.final_state.t && rec_.final_state.h.size() != 0) {
      h = rec_.final_state.h;
      p = rec_.final_state.p;
      c = rec_.final_state.c;
      return;
    }
    if (it == times_.begin() || it == times_.end()) {
      throw std::out_of_range("time lies outside the recorded history");
    }
    const auto& b = rec_.history[static_cast<std::size_t>(it - times_.begin())];
    const auto& a = rec_.history[static_cast<std::size_t>(it - times_.begin()) - 1];
    const double dt = b.t - a.t;
    const double s = (t - a.t) / dt;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
    const double h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s);
    const double h11 = s * s * (s - 1);
    h = h00 * a.h + h10 * dt * a.dh + h01 * b.h + h11 * dt * b.dh;
    c = h00 * a.c + h10 * dt * a.dc + h01 * b.c + h11 * dt * b.dc;
    p = -ops_.laplacian(h);
  }

 private:
  const SolutionRecord& rec_;
  const spectral::SpectralOps& ops_;
  std::vector<double> times_;
};

// Galerkin restriction of an all-differential system to span(B).
class ProjectedSystem : public DaeSystem {
 public:
  ProjectedSystem(DaeSystem& full, const Eigen::MatrixXd& B)
      : full_(full), B_(B), mask_(static_cast<std::size_t>(B.cols()), true) {}
  Eigen::Index size() const override { return B_.cols(); }
  const std::vector<bool>& differential() const override { return mask_; }
  void rhs(double t, const Vector& y, Vector& f) override {
    full_.rhs(t, B_ * y, work_);
    f = B_.transpose() * work_;
  }

 private:
  DaeSystem& full_;
  const Eigen::MatrixXd& B_;
  std::vector<bool> mask_;
  Vector work_;
};

}  // namespace

void solve_f_stage(SolutionRecord& record, const Field& J, const ModelParams& params,
                   const IntegratorConfig& config, const PeriodicGrid& grid,
                   const Field* f_initial, const Eigen::MatrixXd* basis_f) {
  if (record.history.size() < 2) {
    throw std::invalid_argument("solution record lacks the step history needed for the f stage");
  }
  if (!(record.grid == grid)) throw DimensionError("record grid does not match");
  const auto& ops = spectral::ops_for(grid);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());

  HistoryFlow flow(record, grid);
  FluoresceinSystem sys(grid, J, params,
                        [&flow](double t, Field& h, Field& p, Field& c) { flow(t, h, p, c); });
  const auto& hist = record.history;
  std::unique_ptr<ProjectedSystem> reduced;
  NdfOptions opts = config.ndf_options();
  if (f_initial && f_initial->size() != n) throw DimensionError("initial f does not match the grid");
  Vector y0 = f_initial ? Vector(f_initial->matrix()) : Vector::Constant(n, params.f0);
  if (basis_f) {
    if (basis_f->rows() != n) throw DimensionError("f basis does not match the grid");
    reduced = std::make_unique<ProjectedSystem>(sys, *basis_f);
    opts.linear_solver = LinearSolverKind::dense;
    y0 = basis_f->transpose() * y0;
  }
  NdfIntegrator integ(reduced ? static_cast<DaeSystem&>(*reduced) : sys, opts);
  integ.initialize(hist.front().t, y0);
  auto lift = [&](const Vector& y) -> Field {
    return basis_f ? Field((*basis_f * y).array()) : Field(y.array());
  };

  std::vector<Field> f_trace(record.trace_times.size());
  std::vector<Field> f_snap(record.times.size());
  std::size_t it = 0, is = 0;
  Field f_final;
  auto fill = [&](double t_hi, bool first) {
    const Vector& y = integ.y();
    while (it < record.trace_times.size() && record.trace_times[it] <= t_hi) {
      const double t = record.trace_times[it];
      f_trace[it] = lift((first || t == integ.t()) ? y : integ.interpolate(t));
      ++it;
    }
    while (is < record.times.size() && record.times[is] <= t_hi) {
      const double t = record.times[is];
      f_snap[is] = lift((first || t == integ.t()) ? y : integ.interpolate(t));
      ++is;
    }
    if (f_final.size() == 0 && record.final_state.t <= t_hi) {
      const double t = record.final_state.t;
      f_final = lift((first || t == integ.t()) ? y : integ.interpolate(t));
    }
  };
  fill(hist.front().t, true);
  for (std::size_t k = 1; k < hist.size(); ++k) {
    integ.step_prescribed(hist[k].t, hist[k].order);
    fill(hist[k].t, false);
  }
  if (it != record.trace_times.size() || is != record.times.size() || f_final.size() == 0) {
    throw std::logic_error("f stage did not cover the recorded times");
  }

  record.solute_f.clear();
  for (std::size_t k = 0; k < record.trace_times.size(); ++k) {
    Field h, p, c;
    flow(record.trace_times[k], h, p, c);
    record.solute_f.push_back(model::total_solute(h, f_trace[k], grid));
    const auto F = ops.forward(f_trace[k]);
    for (auto& probe : record.probes) {
      auto& s = probe.samples[k];
      s.f = ops.evaluate_at(F, probe.x, probe.y);
      s.I = model::fl_intensity(s.h, s.f, params);
    }
  }
  for (std::size_t k = 0; k < record.snapshots.size(); ++k) record.snapshots[k].f = f_snap[k];
  record.final_state.f = f_final;
  record.has_f = true;
}

SolutionRecord simulate(const FieldState& initial, const Field& J, const ModelParams& params,
                        const IntegratorConfig& config, const PeriodicGrid& grid) {
  IntegratorConfig cfg = config;
  cfg.record_history = true;
  SolutionRecord rec = integrate(initial, J, params, cfg, grid);
  if (rec.history.size() >= 2) {
    solve_f_stage(rec, J, params, cfg, grid, initial.f.size() != 0 ? &initial.f : nullptr);
  }
  return rec;
}

double relative_error(const Field& a, const Field& b) {
  if (a.size() != b.size()) throw DimensionError("relative_error: fields differ in size");
  const double denom = b.matrix().norm();
  if (denom == 0.0) throw std::domain_error("relative_error: reference field is zero");
  return (a - b).matrix().norm() / denom;
}

ProbeSample probe_sample(const FieldState& s, const Field& J, const ModelParams& params,
                         const PeriodicGrid& grid, double x, double y) {
  return sample_probes(s, J, params, grid, {{x, y}}).front();
}

}  // namespace tearfilm::dae
