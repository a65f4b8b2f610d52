#include "tearfilm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "tearfilm/axisym.hpp"
#include "tearfilm/io.hpp"
#include "tearfilm/streak.hpp"

namespace tearfilm::runner {

using dae::SolutionRecord;
using model::FieldState;
using spectral::PeriodicGrid;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(count)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr first_error;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            body(k);
          } catch (...) {
            std::lock_guard<std::mutex> lock(mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

model::ModelParams params_of(const RunConfig& cfg) {
  model::ModelParams p = cfg.model;
  p.v_b = cfg.evaporation.v_b;
  return p;
}

json stats_json(const dae::IntegratorStats& s) {
  return {{"steps", s.steps},
          {"error_test_failures", s.error_test_failures},
          {"newton_failures", s.newton_failures},
          {"rhs_evals", s.rhs_evals},
          {"jacobians", s.jacobians},
          {"factorizations", s.factorizations},
          {"krylov_iterations", s.krylov_iterations},
          {"krylov_failures", s.krylov_failures}};
}

json tbut_json(const std::optional<double>& tbut, const model::ModelParams& p) {
  if (!tbut) return nullptr;
  return {{"nondimensional", *tbut},
          {"seconds", model::dimensionalize(*tbut, model::Quantity::time, p).value}};
}

double relative_drift(const std::vector<double>& v) {
  if (v.empty() || v.front() == 0.0) return 0.0;
  double worst = 0.0;
  for (double x : v) worst = std::max(worst, std::abs(x / v.front() - 1.0));
  return worst;
}

json record_results(const SolutionRecord& rec, const model::ModelParams& p) {
  return {{"tbut", tbut_json(rec.tbut, p)},
          {"halted_reason", dae::to_string(rec.halted_reason)},
          {"message", rec.message},
          {"final_time", rec.final_state.t},
          {"wall_seconds", rec.wall_seconds},
          {"max_constraint_residual", rec.max_constraint_residual},
          {"solute_c_drift", relative_drift(rec.solute_c)},
          {"solute_f_drift", relative_drift(rec.solute_f)},
          {"stats", stats_json(rec.stats)}};
}

struct Products {
  std::vector<fs::path> files;
  void add(const fs::path& dir, const std::vector<fs::path>& abs) {
    for (const auto& f : abs) files.push_back(fs::relative(f, dir));
  }
};

// Traces, snapshots and the final state of a grid solution.
void write_record(const fs::path& dir, const SolutionRecord& rec, const model::ModelParams& p,
                  bool snapshots, Products& out) {
  out.add(dir, io::write_traces(dir, rec));
  if (snapshots) out.add(dir, io::write_snapshots(dir, rec, p));
  const int nx = rec.grid.nx(), ny = rec.grid.ny();
  const auto& s = rec.final_state;
  const fs::path fin = dir / "final";
  fs::create_directories(fin);
  out.add(dir, io::write_field(fin / "h", s.h.matrix(), {"h", s.t, nx, ny}));
  out.add(dir, io::write_field(fin / "p", s.p.matrix(), {"p", s.t, nx, ny}));
  out.add(dir, io::write_field(fin / "c", s.c.matrix(), {"c", s.t, nx, ny}));
  if (s.f.size() != 0) out.add(dir, io::write_field(fin / "f", s.f.matrix(), {"f", s.t, nx, ny}));
}

RunSummary finish(const fs::path& dir, const RunConfig& cfg, const std::string& started,
                  json results, const Products& products, bool ok) {
  io::Manifest m;
  m.config = config::to_json(cfg);
  m.started = started;
  m.finished = io::utc_now();
  m.results = results;
  m.files = products.files;
  RunSummary s;
  s.ok = ok;
  s.results = results;
  if (results.contains("tbut") && !results["tbut"].is_null()) {
    s.tbut = results["tbut"]["nondimensional"].get<double>();
  }
  if (results.contains("halted_reason")) s.halted_reason = results["halted_reason"].get<std::string>();
  if (results.contains("message")) s.message = results["message"].get<std::string>();
  s.manifest = io::write_manifest(dir, m);
  return s;
}

struct BasisBuild {
  pod::PodBasis basis;
  FieldState initial;
  double seconds = 0.0;
};

BasisBuild build_pod_basis(const RunConfig& cfg, const PeriodicGrid& grid, const Field& J) {
  const auto params = params_of(cfg);
  const auto icfg = cfg.effective_integrator();
  const auto start = Clock::now();
  BasisBuild b;
  b.initial = FieldState::uniform(grid.size(), params.f0);
  const auto& ps = cfg.pod;
  if (!ps.basis_file.empty()) {
    b.basis = pod::load_basis(ps.basis_file);
    if (b.basis.nx != grid.nx() || b.basis.ny != grid.ny()) {
      throw config::ConfigError("pod.basis_file was built on a " + std::to_string(b.basis.nx) + "x" +
                                std::to_string(b.basis.ny) + " grid");
    }
    if (!ps.restart) throw config::ConfigError("pod.start = tau needs a computed basis, not basis_file");
  } else if (ps.source == "radial") {
    if (!ps.restart) throw config::ConfigError("pod.start = tau is not available with a radial basis");
    const axisym::RadialGrid radial(cfg.radial.R0, cfg.radial.n);
    b.basis = pod::radial_snapshot_basis(cfg.evaporation.peaks, cfg.evaporation.v_b, params, icfg, grid,
                                         ps.radial_horizon, ps.effective_snapshots(), ps.effective_ranks(),
                                         radial, ps.reduce_f);
  } else {
    const auto snaps = pod::capture_snapshots(J, params, icfg, grid, ps.tau, ps.effective_snapshots());
    b.basis = pod::build_basis(snaps, ps.effective_ranks(), ps.reduce_f);
    b.basis.tau = ps.tau;
    if (!ps.restart) {
      const auto last = snaps.h.columns.cols() - 1;
      b.initial.h = snaps.h.columns.col(last).array();
      b.initial.p = snaps.p.columns.col(last).array();
      b.initial.c = snaps.c.columns.col(last).array();
      b.initial.f = snaps.f.columns.col(last).array();
      b.initial.t = snaps.h.times.back();
    }
  }
  b.seconds = seconds_since(start);
  return b;
}

Field intensity(const FieldState& s, const model::ModelParams& p) { return model::fl_intensity(s.h, s.f, p); }

RunSummary run_full(const RunConfig& cfg, const fs::path& dir, const std::string& started) {
  const PeriodicGrid grid(cfg.nx, cfg.ny);
  const auto params = params_of(cfg);
  const Field J = cfg.evaporation.evaluate(grid);
  spdlog::info("full solve on {}x{}", cfg.nx, cfg.ny);
  const auto rec = dae::simulate(FieldState::uniform(grid.size(), params.f0), J, params,
                                 cfg.effective_integrator(), grid);
  Products products;
  write_record(dir, rec, params, cfg.outputs.write_snapshots, products);
  return finish(dir, cfg, started, record_results(rec, params), products,
                rec.halted_reason != dae::HaltReason::failure);
}

RunSummary run_pod(const RunConfig& cfg, const fs::path& dir, const std::string& started) {
  const PeriodicGrid grid(cfg.nx, cfg.ny);
  const auto params = params_of(cfg);
  const Field J = cfg.evaporation.evaluate(grid);
  spdlog::info("building {} POD basis", cfg.pod.basis_file.empty() ? cfg.pod.source : "stored");
  const auto b = build_pod_basis(cfg, grid, J);
  spdlog::info("reduced solve with ranks ({}, {}, {})", b.basis.B_h.cols(), b.basis.B_p.cols(),
               b.basis.B_c.cols());
  const auto rec = pod::integrate_reduced(b.basis, b.initial, J, params, cfg.effective_integrator(), grid);
  Products products;
  write_record(dir, rec, params, cfg.outputs.write_snapshots, products);
  if (cfg.pod.save_basis) {
    pod::save_basis(dir / "basis.tfpod", b.basis);
    products.files.emplace_back("basis.tfpod");
  }
  json results = record_results(rec, params);
  results["basis_seconds"] = b.seconds;
  results["ranks"] = {b.basis.B_h.cols(), b.basis.B_p.cols(), b.basis.B_c.cols(), b.basis.B_f.cols()};
  return finish(dir, cfg, started, results, products, rec.halted_reason != dae::HaltReason::failure);
}

RunSummary run_radial(const RunConfig& cfg, const fs::path& dir, const std::string& started) {
  const auto params = params_of(cfg);
  const auto& pk = cfg.evaporation.peaks.front();
  const axisym::RadialGrid radial(cfg.radial.R0, cfg.radial.n);
  auto icfg = cfg.effective_integrator();
  const auto rec = axisym::integrate_radial({pk.a, pk.x_w}, cfg.evaporation.v_b, params, icfg, radial);
  Products products;
  const fs::path center = dir / "center.csv";
  io::CsvWriter csv(center, {"t", "h", "p", "c", "f", "I", "advection", "diffusion", "evaporation",
                             "osmosis", "solute_c", "solute_f"});
  for (std::size_t i = 0; i < rec.trace_times.size(); ++i) {
    const auto& s = rec.center[i];
    csv.row(std::vector<double>{rec.trace_times[i], s.h, s.p, s.c, s.f, s.I, s.advection, s.diffusion,
                                s.evaporation, s.osmosis, rec.solute_c[i], rec.solute_f[i]});
  }
  csv.close();
  products.files.emplace_back("center.csv");
  const int n = radial.size();
  if (cfg.outputs.write_snapshots) {
    const fs::path sub = dir / "profiles";
    fs::create_directories(sub);
    products.add(dir, io::write_field(sub / "r", radial.r(), {"r", 0.0, n, 1}));
    for (std::size_t k = 0; k < rec.snapshots.size(); ++k) {
      const auto& s = rec.snapshots[k];
      std::ostringstream idx;
      idx << std::setw(4) << std::setfill('0') << k;
      const Eigen::VectorXd I = model::fl_intensity(Field(s.h.array()), Field(s.f.array()), params).matrix();
      const std::vector<std::pair<std::string, const Eigen::VectorXd*>> vars{
          {"h", &s.h}, {"p", &s.p}, {"c", &s.c}, {"f", &s.f}, {"I", &I}};
      for (const auto& [name, v] : vars) {
        products.add(dir, io::write_field(sub / (name + "_" + idx.str()), *v, {name, s.t, n, 1}));
      }
    }
  }
  json results = {{"tbut", tbut_json(rec.tbut, params)},
                  {"halted_reason", dae::to_string(rec.halted_reason)},
                  {"message", rec.message},
                  {"final_time", rec.final_state.t},
                  {"wall_seconds", rec.wall_seconds},
                  {"solute_c_drift", relative_drift(rec.solute_c)},
                  {"solute_f_drift", relative_drift(rec.solute_f)},
                  {"stats", stats_json(rec.stats)}};
  return finish(dir, cfg, started, results, products, rec.halted_reason != dae::HaltReason::failure);
}

RunSummary run_streak(const RunConfig& cfg, const fs::path& dir, const std::string& started) {
  const auto params = params_of(cfg);
  const auto& pk = cfg.evaporation.peaks.front();
  auto icfg = cfg.effective_integrator();
  if (cfg.outputs.probes.empty()) {
    icfg.probes.clear();
    icfg.probes.emplace_back(0.0, 0.0);
    if (pk.x != 0.0) icfg.probes.emplace_back(pk.x, 0.0);
  }
  const auto rec = streak::integrate_streak({pk.a, pk.x_w}, cfg.evaporation.v_b, params, icfg, cfg.streak.nx);
  Products products;
  write_record(dir, rec, params, cfg.outputs.write_snapshots, products);
  return finish(dir, cfg, started, record_results(rec, params), products,
                rec.halted_reason != dae::HaltReason::failure);
}

RunSummary run_grid_study(const RunConfig& cfg, const fs::path& dir, const std::string& started,
                          int threads) {
  const auto rows = grid_study(cfg, threads);
  const fs::path path = dir / "grid_study.csv";
  io::CsvWriter csv(path, {"n", "err_h", "err_p", "err_c", "wall_seconds"});
  json table = json::array();
  for (const auto& r : rows) {
    csv.row(std::vector<double>{double(r.n), r.err_h, r.err_p, r.err_c, r.wall_seconds});
    table.push_back({{"n", r.n}, {"err_h", r.err_h}, {"err_p", r.err_p}, {"err_c", r.err_c}});
  }
  csv.close();
  Products products;
  products.files.emplace_back("grid_study.csv");
  json results = {{"reference", cfg.grid_study.reference}, {"time", cfg.grid_study.time}, {"rows", table}};
  return finish(dir, cfg, started, results, products, true);
}

RunSummary run_pod_error_study(const RunConfig& cfg, const fs::path& dir, const std::string& started) {
  const auto cmp = pod_compare(cfg, dir);
  Products products;
  products.files.emplace_back("pod_errors.csv");
  products.files.emplace_back("pod_timing.json");
  const auto params = params_of(cfg);
  json results = {{"tbut", tbut_json(cmp.tbut_reduced, params)},
                  {"tbut_full", tbut_json(cmp.tbut_full, params)},
                  {"wall_full", cmp.wall_full},
                  {"wall_reduced", cmp.wall_reduced},
                  {"wall_basis", cmp.wall_basis},
                  {"wall_full_tail", cmp.wall_full_tail},
                  {"wall_reduced_tail", cmp.wall_reduced_tail}};
  return finish(dir, cfg, started, results, products, true);
}

}  // namespace

double tail_wall(const SolutionRecord& rec, double t) {
  if (rec.trace_wall.empty()) return 0.0;
  std::size_t k = 0;
  while (k + 1 < rec.trace_times.size() && rec.trace_times[k] < t) ++k;
  return rec.trace_wall.back() - rec.trace_wall[k];
}

RunSummary run(const RunConfig& cfg, const fs::path& out_dir, int threads) {
  cfg.validate();
  fs::create_directories(out_dir);
  const std::string started = io::utc_now();
  spdlog::info("mode {} -> {}", config::to_string(cfg.mode), out_dir.string());
  switch (cfg.mode) {
    case config::Mode::full:
      return run_full(cfg, out_dir, started);
    case config::Mode::pod:
      return run_pod(cfg, out_dir, started);
    case config::Mode::radial1d:
      return run_radial(cfg, out_dir, started);
    case config::Mode::streak1d:
      return run_streak(cfg, out_dir, started);
    case config::Mode::grid_study:
      return run_grid_study(cfg, out_dir, started, threads);
    case config::Mode::pod_error_study:
      return run_pod_error_study(cfg, out_dir, started);
  }
  throw std::logic_error("unhandled mode");
}

std::vector<SweepCase> run_sweep(const config::SweepConfig& sweep, const fs::path& out_dir, int threads) {
  fs::create_directories(out_dir);
  std::vector<SweepCase> cases(sweep.axis.values.size());
  parallel_for(cases.size(), threads, [&](std::size_t k) {
    SweepCase& sc = cases[k];
    sc.value = sweep.axis.values[k];
    const fs::path dir = out_dir / ("case_" + std::to_string(k));
    try {
      const RunConfig cfg = config::apply_axis(sweep.base, sweep.axis, sc.value);
      sc.summary = run(cfg, dir, 1);
      FieldState fin;
      const auto load = [&](const char* v) {
        const fs::path p = dir / "final" / (std::string(v) + ".bin");
        return fs::exists(p) ? Field(io::read_field(p).array()) : Field();
      };
      fin.h = load("h");
      fin.c = load("c");
      fin.f = load("f");
      if (fin.c.size() != 0) {
        sc.c_max = fin.c.maxCoeff();
        const PeriodicGrid grid(cfg.nx, cfg.ny);
        sc.c_center = fin.c[grid.index(grid.origin_i(), grid.origin_j())];
        const auto& ops = spectral::ops_for(grid);
        const auto C = ops.forward(fin.c);
        sc.c_probe_max = -std::numeric_limits<double>::infinity();
        for (const auto& [x, y] : cfg.probe_points()) sc.c_probe_max = std::max(sc.c_probe_max, ops.evaluate_at(C, x, y));
      }
      if (fin.f.size() != 0) {
        sc.f_max = fin.f.maxCoeff();
        sc.I_min = model::fl_intensity(fin.h, fin.f, params_of(cfg)).minCoeff();
      }
    } catch (const std::exception& e) {
      sc.error = e.what();
      sc.summary.ok = false;
      spdlog::error("case {} ({} = {}): {}", k, sweep.axis.name, sc.value, e.what());
    }
  });
  io::CsvWriter csv(out_dir / "summary.csv", {"case", sweep.axis.name, "tbut", "halted_reason", "c_max",
                                              "c_center", "c_probe_max", "f_max", "I_min", "error"});
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    csv.row(std::vector<std::string>{std::to_string(k), io::format_number(c.value),
                                     c.summary.tbut ? io::format_number(*c.summary.tbut) : "",
                                     c.summary.halted_reason, io::format_number(c.c_max),
                                     io::format_number(c.c_center), io::format_number(c.c_probe_max),
                                     io::format_number(c.f_max), io::format_number(c.I_min), c.error});
  }
  csv.close();
  return cases;
}

PodComparison pod_compare(const RunConfig& cfg, const fs::path& out_dir) {
  const PeriodicGrid grid(cfg.nx, cfg.ny);
  const auto params = params_of(cfg);
  const Field J = cfg.evaporation.evaluate(grid);
  const auto icfg = cfg.effective_integrator();

  spdlog::info("pod comparison: full reference solve");
  const auto full = dae::simulate(FieldState::uniform(grid.size(), params.f0), J, params, icfg, grid);
  spdlog::info("pod comparison: basis ({})", cfg.pod.basis_file.empty() ? cfg.pod.source : "stored");
  const auto b = build_pod_basis(cfg, grid, J);
  spdlog::info("pod comparison: reduced solve");
  const auto red = pod::integrate_reduced(b.basis, b.initial, J, params, icfg, grid);

  PodComparison out;
  out.tbut_full = full.tbut;
  out.tbut_reduced = red.tbut;
  out.wall_full = full.wall_seconds;
  out.wall_reduced = red.wall_seconds;
  out.wall_basis = b.seconds;
  out.wall_full_tail = tail_wall(full, cfg.pod.tau);
  out.wall_reduced_tail = tail_wall(red, cfg.pod.tau);
  for (std::size_t i = 0, j = 0; i < full.times.size() && j < red.times.size();) {
    const double tf = full.times[i], tr = red.times[j];
    if (std::abs(tf - tr) > 1e-12 * std::max(1.0, tf)) {
      (tf < tr ? i : j)++;
      continue;
    }
    const auto& A = red.snapshots[j];
    const auto& B = full.snapshots[i];
    out.times.push_back(tf);
    out.err_h.push_back(dae::relative_error(A.h, B.h));
    out.err_p.push_back(B.p.matrix().norm() > 0 ? dae::relative_error(A.p, B.p) : A.p.matrix().norm());
    out.err_c.push_back(dae::relative_error(A.c, B.c));
    out.err_f.push_back(dae::relative_error(A.f, B.f));
    out.err_I.push_back(dae::relative_error(intensity(A, params), intensity(B, params)));
    ++i;
    ++j;
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    io::CsvWriter csv(out_dir / "pod_errors.csv", {"t", "err_h", "err_p", "err_c", "err_f", "err_I"});
    for (std::size_t k = 0; k < out.times.size(); ++k) {
      csv.row(std::vector<double>{out.times[k], out.err_h[k], out.err_p[k], out.err_c[k], out.err_f[k],
                                  out.err_I[k]});
    }
    csv.close();
    const json timing = {{"tbut_full", out.tbut_full ? json(*out.tbut_full) : json(nullptr)},
                         {"tbut_reduced", out.tbut_reduced ? json(*out.tbut_reduced) : json(nullptr)},
                         {"wall_full", out.wall_full},
                         {"wall_reduced", out.wall_reduced},
                         {"wall_basis", out.wall_basis},
                         {"tau", cfg.pod.tau},
                         {"wall_full_tail", out.wall_full_tail},
                         {"wall_reduced_tail", out.wall_reduced_tail},
                         {"tail_ratio", out.wall_full_tail > 0 ? out.wall_reduced_tail / out.wall_full_tail : 0.0}};
    io::write_atomic(out_dir / "pod_timing.json", timing.dump(2) + "\n");
  }
  return out;
}

std::vector<GridStudyRow> grid_study(const RunConfig& cfg, int threads) {
  const auto params = params_of(cfg);
  auto icfg = cfg.integrator;
  icfg.t_end = cfg.grid_study.time;
  icfg.stop_at_breakup = false;
  icfg.snapshot_times = {cfg.grid_study.time};
  icfg.snapshot_every = 0.0;
  icfg.record_history = false;
  icfg.probes = {{0.0, 0.0}};

  std::vector<int> sizes = cfg.grid_study.sizes;
  sizes.push_back(cfg.grid_study.reference);
  std::vector<FieldState> finals(sizes.size());
  std::vector<double> walls(sizes.size());
  parallel_for(sizes.size(), threads, [&](std::size_t k) {
    const PeriodicGrid grid(sizes[k], sizes[k]);
    const Field J = cfg.evaporation.evaluate(grid);
    const auto rec = dae::integrate(FieldState::uniform(grid.size(), params.f0), J, params, icfg, grid);
    if (rec.snapshots.empty()) {
      throw std::runtime_error("grid study run at N = " + std::to_string(sizes[k]) + " ended early (" +
                               rec.message + ")");
    }
    finals[k] = rec.snapshots.back();
    walls[k] = rec.wall_seconds;
    spdlog::info("grid study N = {} done in {:.2f} s", sizes[k], walls[k]);
  });
  const int nref = cfg.grid_study.reference;
  const PeriodicGrid ref(nref, nref);
  const auto& R = finals.back();
  std::vector<GridStudyRow> rows;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const PeriodicGrid g(sizes[k], sizes[k]);
    const auto up = [&](const Field& u) { return spectral::fourier_interpolate(u, g, ref); };
    rows.push_back({sizes[k], dae::relative_error(up(finals[k].h), R.h), dae::relative_error(up(finals[k].p), R.p),
                    dae::relative_error(up(finals[k].c), R.c), walls[k]});
  }
  return rows;
}

}  // namespace tearfilm::runner
