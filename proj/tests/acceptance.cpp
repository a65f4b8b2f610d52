// Acceptance checks for the tear-film simulator. Prints one PASS/FAIL line per
// criterion and exits non-zero when any criterion fails. Pass criterion
// numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "tearfilm/axisym.hpp"
#include "tearfilm/runner.hpp"
#include "tearfilm/streak.hpp"

using namespace tearfilm;
using dae::SolutionRecord;
using model::EvaporationPeak;
using model::FieldState;
using model::ModelParams;
using spectral::PeriodicGrid;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(what + (ok ? "" : " [miss]"));
  }
};

std::string line(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

const ModelParams kParams{};

dae::IntegratorConfig base_config(std::vector<std::pair<double, double>> probes = {{0.0, 0.0}}) {
  dae::IntegratorConfig cfg;
  cfg.snapshot_every = 0.1;
  cfg.probes = std::move(probes);
  return cfg;
}

SolutionRecord run2d(const std::vector<EvaporationPeak>& peaks, double v_b,
                     const dae::IntegratorConfig& cfg, int n = 60) {
  const PeriodicGrid grid(n, n);
  const Field J = model::eval_J(peaks, v_b, grid);
  return dae::simulate(FieldState::uniform(grid.size(), kParams.f0), J, kParams, cfg, grid);
}

double tbut_of(const SolutionRecord& r) { return r.tbut.value_or(std::nan("")); }

std::string tbut_text(const std::optional<double>& t) { return t ? line("%.4f", *t) : std::string("none"); }

struct CenterValues {
  double h, c, f, I;
};

CenterValues center_of(const FieldState& s, const PeriodicGrid& g) {
  const auto k = g.index(g.origin_i(), g.origin_j());
  return {s.h[k], s.c[k], s.f[k], model::fl_intensity(s.h[k], s.f[k], kParams)};
}

/// Largest relative deviation of h, c, f, I between two sets of centre values
/// sampled at the same times.
double max_center_deviation(const std::vector<double>& ta, const std::vector<CenterValues>& a,
                            const std::vector<double>& tb, const std::vector<CenterValues>& b, double t_max,
                            double* t_at = nullptr) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i] > t_max) break;
    for (std::size_t j = 0; j < tb.size(); ++j) {
      if (std::abs(ta[i] - tb[j]) > 1e-9) continue;
      const double d = std::max({std::abs(a[i].h - b[j].h) / std::abs(b[j].h), std::abs(a[i].c - b[j].c) / std::abs(b[j].c),
                                 std::abs(a[i].f - b[j].f) / std::abs(b[j].f), std::abs(a[i].I - b[j].I) / std::abs(b[j].I)});
      if (d > worst) {
        worst = d;
        if (t_at) *t_at = ta[i];
      }
    }
  }
  return worst;
}

std::vector<CenterValues> centers(const SolutionRecord& r) {
  std::vector<CenterValues> out;
  for (const auto& s : r.snapshots) out.push_back(center_of(s, r.grid));
  return out;
}

// Shared solves.

const SolutionRecord& single_spot() {
  static const SolutionRecord rec = run2d({EvaporationPeak{}}, 0.1, base_config());
  return rec;
}

runner::RunConfig pod_config(const std::vector<EvaporationPeak>& peaks, double tau, const std::string& source) {
  runner::RunConfig c;
  c.mode = config::Mode::pod_error_study;
  c.evaporation.peaks = peaks;
  c.pod.tau = tau;
  c.pod.source = source;
  c.pod.save_basis = false;
  c.outputs.write_snapshots = false;
  return c;
}

const runner::PodComparison& pod_single(double tau) {
  static std::map<double, runner::PodComparison> cache;
  auto it = cache.find(tau);
  if (it == cache.end()) it = cache.emplace(tau, runner::pod_compare(pod_config({EvaporationPeak{}}, tau, "full2d"), {})).first;
  return it->second;
}

double max_of(const std::vector<double>& v) { return v.empty() ? std::nan("") : *std::max_element(v.begin(), v.end()); }

// Criteria.

Verdict single_spot_criterion() {
  Verdict v;
  const auto& rec = single_spot();
  v.check(rec.tbut && within(*rec.tbut, 2.4, 0.05), "TBUT " + tbut_text(rec.tbut) + " (2.4 +- 0.05)");
  const axisym::RadialGrid rg(std::numbers::pi, 81);
  const auto rad = axisym::integrate_radial({1.0, 0.5}, 0.1, kParams, base_config(), rg);
  std::vector<CenterValues> rc;
  for (const auto& s : rad.snapshots) rc.push_back({s.h[0], s.c[0], s.f[0], model::fl_intensity(s.h[0], s.f[0], kParams)});
  const double t_max = std::min(tbut_of(rec), rad.tbut.value_or(1e9));
  double t_at = 0.0;
  const double dev = max_center_deviation(rec.times, centers(rec), rad.times, rc, t_max, &t_at);
  v.check(dev < 0.01, line("axisymmetric TBUT %s, centre traces differ by %.3f%% at most (t = %.1f, < 1%%)",
                           tbut_text(rad.tbut).c_str(), 100 * dev, t_at));
  return v;
}

Verdict three_spot_criterion() {
  Verdict v;
  const std::vector<std::pair<const char*, EvaporationPeak>> cases{
      {"a", {1.5, 0, 0, 0.5, 0.5}}, {"b", {1.0, 0, 0, 0.5, 0.5}}, {"c", {1.5, 0, 0, 0.3, 0.3}}};
  const double v_b[] = {0.1, 0.05, 0.05};
  const double target[] = {1.1, 1.7, 2.2};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto rec = run2d({cases[k].second}, v_b[k], base_config());
    v.check(rec.tbut && within(*rec.tbut, target[k], 0.05),
            line("(%s) TBUT %s (%.1f +- 0.05)", cases[k].first, tbut_text(rec.tbut).c_str(), target[k]));
  }
  return v;
}

Verdict fixed_product_criterion() {
  Verdict v;
  const double xw[] = {0.5, 0.35, 0.25};
  const double target[] = {2.4, 2.65, 3.4};
  for (int k = 0; k < 3; ++k) {
    const auto rec = run2d({{1.0, 0, 0, xw[k], 0.25 / xw[k]}}, 0.1, base_config());
    v.check(rec.tbut && within(*rec.tbut, target[k], 0.05),
            line("x_w %.2f: TBUT %s (%.2f +- 0.05)", xw[k], tbut_text(rec.tbut).c_str(), target[k]));
  }
  return v;
}

Verdict fixed_width_criterion() {
  Verdict v;
  const double yw[] = {0.5, 1.0, 4.0};
  const double target[] = {2.4, 1.9, 1.85};
  SolutionRecord wide;
  for (int k = 0; k < 3; ++k) {
    auto rec = run2d({{1.0, 0, 0, 0.5, yw[k]}}, 0.1, base_config());
    v.check(rec.tbut && within(*rec.tbut, target[k], 0.05),
            line("y_w %.1f: TBUT %s (%.2f +- 0.05)", yw[k], tbut_text(rec.tbut).c_str(), target[k]));
    if (k == 2) wide = std::move(rec);
  }
  const auto st = streak::integrate_streak({1.0, 0.5}, 0.1, kParams, base_config(), 128);
  v.check(st.tbut && within(*st.tbut, 1.87, 0.03), "streak TBUT " + tbut_text(st.tbut) + " (1.87 +- 0.03)");
  const double t_max = std::min(tbut_of(wide), tbut_of(st));
  double t_at = 0.0;
  const double dev = max_center_deviation(wide.times, centers(wide), st.times, centers(st), t_max, &t_at);
  v.check(dev < 0.02, line("y_w 4 vs streak centre traces differ by %.3f%% at most (t = %.1f, < 2%%)", 100 * dev, t_at));
  return v;
}

Verdict two_spot_criterion() {
  Verdict v;
  struct Case {
    double tbut;
    double c_peak;
  };
  std::map<double, Case> res;
  for (double xk : {0.0, 0.25, 0.5, 0.6, 0.75, 0.8, 1.0, 1.25, 1.5, 2.0}) {
    const auto rec = run2d({{1.0, -xk, 0, 0.5, 0.5}, {1.0, xk, 0, 0.5, 0.5}}, 0.1,
                           base_config({{0.0, 0.0}, {-xk, 0.0}, {xk, 0.0}}));
    double c_peak = 0.0;
    for (std::size_t p = 1; p < rec.probes.size(); ++p) c_peak = std::max(c_peak, rec.probes[p].samples.back().c);
    res[xk] = {tbut_of(rec), c_peak};
  }
  const std::pair<double, double> paper[] = {{1.5, 2.6}, {0.8, 2.3}, {0.6, 1.7}};
  for (const auto& [xk, t] : paper) {
    v.check(within(res[xk].tbut, t, 0.05), line("x_k %.1f: TBUT %.4f (%.1f +- 0.05)", xk, res[xk].tbut, t));
  }
  const auto& overlap = res[0.0];
  const auto& far = res[2.0];
  const double c_ratio = far.c_peak / overlap.c_peak;
  const double t_ratio = far.tbut / overlap.tbut;
  v.check(within(c_ratio, 0.72, 0.05), line("osmolarity plateau %.1f%% of overlap (72 +- 5)", 100 * c_ratio));
  v.check(within(t_ratio, 3.0, 0.3), line("TBUT plateau %.2fx overlap (3 +- 10%%)", t_ratio));
  const bool level = std::abs(res[1.0].tbut / far.tbut - 1) < 0.05 && std::abs(res[1.0].c_peak / far.c_peak - 1) < 0.05 &&
                     res[0.5].tbut < 0.9 * far.tbut;
  v.check(level, line("levels off near x_k 1 (TBUT %.3f / %.3f / %.3f at x_k 0.5 / 1 / 2)", res[0.5].tbut,
                     res[1.0].tbut, far.tbut));
  return v;
}

Verdict grid_criterion() {
  Verdict v;
  runner::RunConfig cfg;
  cfg.mode = config::Mode::grid_study;
  const auto rows = runner::grid_study(cfg, 1);
  std::map<int, runner::GridStudyRow> by_n;
  for (const auto& r : rows) by_n[r.n] = r;
  const auto comp = [](const runner::GridStudyRow& r, int k) { return k == 0 ? r.err_h : k == 1 ? r.err_p : r.err_c; };
  const char* names[] = {"h", "p", "c"};
  for (int k = 0; k < 3; ++k) {
    bool mono = true;
    std::string seq;
    int prev = 0;
    for (int n : {20, 30, 40, 50, 60}) {
      if (prev && !(comp(by_n[n], k) < comp(by_n[prev], k))) mono = false;
      seq += line("%s%.2e", prev ? " " : "", comp(by_n[n], k));
      prev = n;
    }
    v.check(mono, line("%s errors monotone over N 20..60 (%s)", names[k], seq.c_str()));
  }
  for (int k = 0; k < 3; ++k) {
    const double ratio = comp(by_n[60], k) / comp(by_n[80], k);
    v.check(ratio <= 2.0, line("%s error N 60 / N 80 = %.2f (<= 2)", names[k], ratio));
  }
  return v;
}

double error_at(const runner::PodComparison& c, const std::vector<double>& e, double t) {
  for (std::size_t k = 0; k < c.times.size(); ++k) {
    if (std::abs(c.times[k] - t) < 1e-9) return e[k];
  }
  return std::nan("");
}

Verdict pod_accuracy_criterion() {
  Verdict v;
  const auto& a = pod_single(0.5);
  const auto& b = pod_single(0.25);
  const double eh = max_of(a.err_h), ep = max_of(a.err_p), ec = max_of(a.err_c);
  v.check(eh < 0.1 && ec < 0.1, line("tau 0.5 max error h %.2e, c %.2e (< 10%%) through t %.1f; TBUT %s vs full %s", eh, ec,
                                     a.times.back(), tbut_text(a.tbut_reduced).c_str(), tbut_text(a.tbut_full).c_str()));
  v.check(ep >= eh && ep >= ec, line("p has the largest error (%.2e)", ep));
  const double t = std::min(a.times.back(), b.times.back());
  bool worse = true;
  std::string detail;
  const std::pair<const char*, const std::vector<double> runner::PodComparison::*> comps[] = {
      {"h", &runner::PodComparison::err_h}, {"p", &runner::PodComparison::err_p}, {"c", &runner::PodComparison::err_c}};
  for (const auto& [name, member] : comps) {
    const double ea = error_at(a, a.*member, t), ebv = error_at(b, b.*member, t);
    worse = worse && ebv > ea;
    detail += line(" %s %.2e vs %.2e", name, ebv, ea);
  }
  v.check(worse, line("tau 0.25 worse than tau 0.5 at t %.1f:%s", t, detail.c_str()));
  return v;
}

Verdict pod_source_criterion() {
  Verdict v;
  const std::vector<EvaporationPeak> peaks{{1.0, -0.6, 0, 0.5, 0.5}, {1.0, 0.6, 0, 0.5, 0.5}};
  const auto worst = [](const runner::PodComparison& c) {
    return std::max({max_of(c.err_h), max_of(c.err_p), max_of(c.err_c)});
  };
  const auto full = runner::pod_compare(pod_config(peaks, 0.5, "full2d"), {});
  const double ef = worst(full);
  v.check(ef < 0.1, line("2D snapshots: max error %.2e through t %.1f (< 10%%)", ef, full.times.back()));
  const auto radial = runner::pod_compare(pod_config(peaks, 0.5, "radial"), {});
  const double er = worst(radial);
  v.check(er > 0.5, line("radial snapshots: max error %.2e before TBUT (> 50%%); reduced TBUT %s vs full %s", er,
                        tbut_text(radial.tbut_reduced).c_str(), tbut_text(radial.tbut_full).c_str()));
  return v;
}

Verdict pod_speed_criterion() {
  Verdict v;
  const auto& a = pod_single(0.5);
  const double ratio = a.wall_reduced_tail / a.wall_full_tail;
  v.check(ratio <= 0.25, line("[tau, TBUT] wall %.3f s reduced vs %.3f s full, ratio %.3f (<= 0.25)", a.wall_reduced_tail,
                             a.wall_full_tail, ratio));
  return v;
}

Verdict property_criterion() {
  Verdict v;
  const auto& rec = single_spot();
  const auto drift = [](const std::vector<double>& s) {
    double d = 0.0;
    for (double x : s) d = std::max(d, std::abs(x / s.front() - 1));
    return d;
  };
  const double dc = drift(rec.solute_c), df = drift(rec.solute_f);
  v.check(dc < 1e-5 && df < 1e-5, line("solute drift c %.1e, f %.1e (< 1e-5)", dc, df));

  double water = 0.0, acc = 0.0;
  for (std::size_t k = 1; k < rec.trace_times.size(); ++k) {
    acc += 0.5 * (rec.water_rate[k] + rec.water_rate[k - 1]) * (rec.trace_times[k] - rec.trace_times[k - 1]);
    water = std::max(water, std::abs(rec.water[k] - rec.water[0] - acc) / rec.water[0]);
  }
  v.check(water < 1e-4, line("water balance residual %.1e (< 1e-4)", water));

  double p_max = 0.0;
  for (const auto& s : rec.snapshots) p_max = std::max(p_max, s.p.abs().maxCoeff());
  const dae::IntegratorConfig defaults;
  const double newton_tol = defaults.rtol * p_max + defaults.atol;
  v.check(rec.max_constraint_residual < newton_tol,
          line("max |p + lap h| %.1e at accepted steps (< %.1e)", rec.max_constraint_residual, newton_tol));

  {
    const PeriodicGrid g(60, 60);
    double worst = 0.0;
    for (double vb : {0.1, 0.5}) {
      dae::IntegratorConfig cfg;
      cfg.rtol = 1e-8;
      cfg.atol = 1e-10;
      cfg.stop_at_breakup = false;
      cfg.t_end = 2.0;
      cfg.snapshot_times = {0.5, 1.0, 2.0};
      const auto u = dae::simulate(FieldState::uniform(g.size(), kParams.f0), Field::Constant(g.size(), vb), kParams, cfg, g);
      for (std::size_t k = 0; k < u.times.size(); ++k) {
        const double h = oracle::uniform_h(u.times[k], vb, kParams.Pc);
        const auto& s = u.snapshots[k];
        worst = std::max({worst, (s.h - h).abs().maxCoeff() / h, (s.c - 1 / h).abs().maxCoeff() * h,
                          (s.f - kParams.f0 / h).abs().maxCoeff() * h / kParams.f0});
      }
    }
    v.check(worst < 1e-6, line("uniform runs vs ODE oracle %.1e at rtol 1e-8 (< 1e-6)", worst));
  }

  {
    const PeriodicGrid& g = rec.grid;
    const int n = g.nx();
    const auto mirror = [n](int i) { return ((n - 2 - i) % n + n) % n; };
    double sym = 0.0;
    for (const auto* s : {&rec.snapshots.back(), &rec.final_state}) {
      for (const Field* u : {&s->h, &s->c, &s->f}) {
        const double scale = u->abs().maxCoeff();
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            const double a = (*u)[g.index(i, j)];
            sym = std::max({sym, std::abs(a - (*u)[g.index(mirror(i), j)]) / scale,
                            std::abs(a - (*u)[g.index(i, mirror(j))]) / scale, std::abs(a - (*u)[g.index(j, i)]) / scale});
          }
        }
      }
    }
    v.check(sym < 1e-8, line("quadrant and diagonal symmetry defect %.1e (< 1e-8)", sym));
  }

  {
    const Field J = model::eval_J({EvaporationPeak{}}, 0.1, rec.grid);
    double worst = 0.0;
    for (const auto& s : rec.snapshots) {
      const auto r = model::residual(s, J, kParams, rec.grid);
      const auto m = model::mechanism_terms(s, J, kParams, rec.grid);
      const Field sum = -m.advection + m.diffusion + m.evaporation - m.osmosis;
      worst = std::max(worst, (sum - r.r_c).abs().maxCoeff() / std::max(1.0, r.r_c.abs().maxCoeff()));
    }
    v.check(worst < 1e-12, line("mechanism sum identity %.1e (< 1e-12)", worst));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"single circular spot", single_spot_criterion},
      {"three-spot parameter cases", three_spot_criterion},
      {"fixed-product spot-to-streak sweep", fixed_product_criterion},
      {"fixed-width sweep and streak limit", fixed_width_criterion},
      {"two-spot separation sweep", two_spot_criterion},
      {"grid convergence", grid_criterion},
      {"POD accuracy", pod_accuracy_criterion},
      {"POD basis source", pod_source_criterion},
      {"POD speedup", pod_speed_criterion},
      {"property suite", property_criterion},
  };
  spdlog::set_level(spdlog::level::warn);
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::stoi(argv[k]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.check(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string notes;
    for (const auto& n : v.notes) notes += (notes.empty() ? "" : "; ") + n;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", criteria[k].first, notes.c_str(), secs);
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
