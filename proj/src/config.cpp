#include "tearfilm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace tearfilm::config {

namespace {

// Reads the keys of one JSON object, remembering which were consumed so that
// anything left over can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    read(j_.at(key), key_path(key), out);
  }

  Section section(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), key_path(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key '" + key_path(key) + "'");
    }
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "configuration" : "'" + path_ + "'"; }

  static void read(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) throw ConfigError("'" + path + "' must be a number");
    out = v.get<double>();
  }
  static void read(const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) throw ConfigError("'" + path + "' must be an integer");
    out = v.get<int>();
  }
  static void read(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) throw ConfigError("'" + path + "' must be true or false");
    out = v.get<bool>();
  }
  static void read(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) throw ConfigError("'" + path + "' must be a string");
    out = v.get<std::string>();
  }
  static void read(const json& v, const std::string& path, std::vector<double>& out) {
    if (!v.is_array()) throw ConfigError("'" + path + "' must be an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("'" + path + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }
  static void read(const json& v, const std::string& path, std::vector<int>& out) {
    if (!v.is_array()) throw ConfigError("'" + path + "' must be an array of integers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer()) throw ConfigError("'" + path + "' must be an array of integers");
      out.push_back(e.get<int>());
    }
  }
  static void read(const json& v, const std::string& path, std::pair<double, double>& out) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError("'" + path + "' must be a pair of numbers");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Mode parse_mode(const std::string& s) {
  if (s == "full") return Mode::full;
  if (s == "pod") return Mode::pod;
  if (s == "radial1d") return Mode::radial1d;
  if (s == "streak1d") return Mode::streak1d;
  if (s == "grid_study") return Mode::grid_study;
  if (s == "pod_error_study") return Mode::pod_error_study;
  throw ConfigError("'mode' must be one of full, pod, radial1d, streak1d, grid_study, pod_error_study (got '" +
                    s + "')");
}

void parse_model(Section s, model::ModelParams& m) {
  s.get("Pc", m.Pc);
  s.get("Pe_c", m.Pe_c);
  s.get("Pe_f", m.Pe_f);
  s.get("phi", m.phi);
  s.get("f0", m.f0);
  s.get("I0", m.I0);
  s.get("d", m.d);
  s.get("ell", m.ell);
  s.get("v_max", m.v_max);
  s.finish();
}

void parse_evaporation(Section s, model::EvaporationMap& e) {
  s.get("v_b", e.v_b);
  s.get("periodic_images", e.periodic_images);
  if (s.has("peaks")) {
    const json& arr = s.raw("peaks");
    const std::string path = s.key_path("peaks");
    if (!arr.is_array()) throw ConfigError("'" + path + "' must be an array");
    e.peaks.clear();
    for (std::size_t k = 0; k < arr.size(); ++k) {
      Section p(arr[k], path + "[" + std::to_string(k) + "]");
      model::EvaporationPeak pk;
      std::pair<double, double> centre{pk.x, pk.y}, widths{pk.x_w, pk.y_w};
      p.get("a", pk.a);
      p.get("center", centre);
      p.get("widths", widths);
      p.finish();
      pk.x = centre.first;
      pk.y = centre.second;
      pk.x_w = widths.first;
      pk.y_w = widths.second;
      e.peaks.push_back(pk);
    }
  }
  s.finish();
}

void parse_integrator(Section s, dae::IntegratorConfig& c) {
  s.get("rtol", c.rtol);
  s.get("atol", c.atol);
  s.get("max_order", c.max_order);
  s.get("initial_dt", c.initial_dt);
  s.get("max_dt", c.max_dt);
  s.get("tbu_threshold", c.tbu_threshold);
  s.get("t_end", c.t_end);
  s.get("stop_at_breakup", c.stop_at_breakup);
  s.get("ndf", c.ndf);
  std::string norm = c.norm == dae::ErrorNorm::rms ? "rms" : "max";
  s.get("norm", norm);
  if (norm == "rms") {
    c.norm = dae::ErrorNorm::rms;
  } else if (norm == "max") {
    c.norm = dae::ErrorNorm::max;
  } else {
    throw ConfigError("'" + s.key_path("norm") + "' must be rms or max");
  }
  std::string solver = c.linear_solver == dae::LinearSolverKind::krylov ? "krylov" : "dense";
  s.get("linear_solver", solver);
  if (solver == "krylov") {
    c.linear_solver = dae::LinearSolverKind::krylov;
  } else if (solver == "dense") {
    c.linear_solver = dae::LinearSolverKind::dense;
  } else {
    throw ConfigError("'" + s.key_path("linear_solver") + "' must be krylov or dense");
  }
  s.get("krylov_rel_tol", c.krylov_rel_tol);
  s.get("krylov_restart", c.krylov_restart);
  s.finish();
}

void parse_pod(Section s, PodSettings& p) {
  s.get("tau", p.tau);
  s.get("snapshots", p.snapshots);
  if (s.has("ranks")) {
    Section r = s.section("ranks");
    pod::PodRanks ranks = pod::default_ranks(p.tau);
    r.get("h", ranks.h);
    r.get("p", ranks.p);
    r.get("c", ranks.c);
    const bool has_f = r.has("f");
    r.get("f", ranks.f);
    if (!has_f) ranks.f = ranks.c;
    r.finish();
    p.ranks = ranks;
  }
  s.get("source", p.source);
  std::string start = p.restart ? "zero" : "tau";
  s.get("start", start);
  if (start == "zero") {
    p.restart = true;
  } else if (start == "tau") {
    p.restart = false;
  } else {
    throw ConfigError("'" + s.key_path("start") + "' must be zero or tau");
  }
  s.get("reduce_f", p.reduce_f);
  s.get("radial_horizon", p.radial_horizon);
  s.get("basis_file", p.basis_file);
  s.get("save_basis", p.save_basis);
  s.finish();
}

void parse_outputs(Section s, OutputSettings& o) {
  s.get("directory", o.directory);
  s.get("snapshot_every", o.snapshot_every);
  s.get("snapshot_times", o.snapshot_times);
  if (s.has("probes")) {
    const json& arr = s.raw("probes");
    const std::string path = s.key_path("probes");
    if (!arr.is_array()) throw ConfigError("'" + path + "' must be an array of [x, y] pairs");
    o.probes.clear();
    for (const auto& e : arr) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw ConfigError("'" + path + "' must be an array of [x, y] pairs");
      }
      o.probes.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  s.get("write_snapshots", o.write_snapshots);
  s.finish();
}

void check(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::full:
      return "full";
    case Mode::pod:
      return "pod";
    case Mode::radial1d:
      return "radial1d";
    case Mode::streak1d:
      return "streak1d";
    case Mode::grid_study:
      return "grid_study";
    case Mode::pod_error_study:
      return "pod_error_study";
  }
  return "full";
}

pod::PodRanks PodSettings::effective_ranks() const { return ranks ? *ranks : pod::default_ranks(tau); }

int PodSettings::effective_snapshots() const {
  return snapshots > 0 ? snapshots : pod::default_snapshot_count(tau);
}

std::vector<std::pair<double, double>> RunConfig::probe_points() const {
  if (!outputs.probes.empty()) return outputs.probes;
  std::vector<std::pair<double, double>> out{{0.0, 0.0}};
  for (const auto& pk : evaporation.peaks) {
    const std::pair<double, double> c{pk.x, pk.y};
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

dae::IntegratorConfig RunConfig::effective_integrator() const {
  dae::IntegratorConfig c = integrator;
  c.snapshot_every = outputs.snapshot_every;
  c.snapshot_times = outputs.snapshot_times;
  c.probes = probe_points();
  return c;
}

void RunConfig::validate() const {
  try {
    model::ModelParams m = model;
    m.v_b = evaporation.v_b;
    m.validate();
    evaporation.validate();
    integrator.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  check(nx >= 8 && ny >= 8 && nx % 2 == 0 && ny % 2 == 0, "grid.nx and grid.ny must be even and at least 8");
  check(outputs.snapshot_every >= 0, "outputs.snapshot_every must be non-negative");
  check(!outputs.directory.empty(), "outputs.directory must not be empty");
  check(pod.tau > 0, "pod.tau must be positive");
  check(pod.snapshots == 0 || pod.snapshots >= 2, "pod.snapshots must be at least 2");
  check(pod.source == "full2d" || pod.source == "radial", "pod.source must be full2d or radial");
  check(pod.radial_horizon > 0, "pod.radial_horizon must be positive");
  if (pod.ranks) {
    const auto& r = *pod.ranks;
    check(r.h >= 1 && r.p >= 1 && r.c >= 1 && r.f >= 1, "pod.ranks must be positive");
  }
  check(radial.R0 > 0, "radial.R0 must be positive");
  check(radial.n >= 32, "radial.n must be at least 32");
  check(streak.nx >= 8 && streak.nx % 2 == 0, "streak.nx must be even and at least 8");
  check(!grid_study.sizes.empty(), "grid_study.sizes must not be empty");
  for (int n : grid_study.sizes) check(n >= 8 && n % 2 == 0, "grid_study.sizes must be even and at least 8");
  check(grid_study.reference >= 8 && grid_study.reference % 2 == 0,
        "grid_study.reference must be even and at least 8");
  check(grid_study.time > 0, "grid_study.time must be positive");

  const bool needs_peak = mode == Mode::radial1d || mode == Mode::streak1d ||
                          (pod.source == "radial" && (mode == Mode::pod || mode == Mode::pod_error_study));
  if (needs_peak) {
    check(!evaporation.peaks.empty(), "evaporation.peaks must list at least one peak for mode " + to_string(mode));
  }
  if (mode == Mode::radial1d) {
    check(evaporation.peaks.size() == 1, "mode radial1d takes exactly one peak");
    check(evaporation.peaks[0].x_w == evaporation.peaks[0].y_w, "mode radial1d needs a circular peak (x_w == y_w)");
  }
  if (mode == Mode::streak1d) check(evaporation.peaks.size() == 1, "mode streak1d takes exactly one peak");
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  Section root(j, "");
  std::string mode = "full";
  root.get("mode", mode);
  c.mode = parse_mode(mode);
  if (root.has("model")) parse_model(root.section("model"), c.model);
  if (root.has("grid")) {
    Section g = root.section("grid");
    g.get("nx", c.nx);
    g.get("ny", c.ny);
    g.finish();
  }
  if (root.has("evaporation")) parse_evaporation(root.section("evaporation"), c.evaporation);
  c.model.v_b = c.evaporation.v_b;
  if (root.has("integrator")) parse_integrator(root.section("integrator"), c.integrator);
  if (root.has("pod")) parse_pod(root.section("pod"), c.pod);
  if (root.has("radial")) {
    Section r = root.section("radial");
    r.get("R0", c.radial.R0);
    r.get("n", c.radial.n);
    r.finish();
  }
  if (root.has("streak")) {
    Section s = root.section("streak");
    s.get("nx", c.streak.nx);
    s.finish();
  }
  if (root.has("grid_study")) {
    Section g = root.section("grid_study");
    g.get("sizes", c.grid_study.sizes);
    g.get("reference", c.grid_study.reference);
    g.get("time", c.grid_study.time);
    g.finish();
  }
  if (root.has("outputs")) parse_outputs(root.section("outputs"), c.outputs);
  root.finish();
  c.validate();
  return c;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_json(path)); }

json to_json(const RunConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  const auto& m = c.model;
  j["model"] = {{"Pc", m.Pc},   {"Pe_c", m.Pe_c}, {"Pe_f", m.Pe_f}, {"phi", m.phi},    {"f0", m.f0},
                {"I0", m.I0},   {"d", m.d},       {"ell", m.ell},   {"v_max", m.v_max}};
  j["grid"] = {{"nx", c.nx}, {"ny", c.ny}};
  json peaks = json::array();
  for (const auto& pk : c.evaporation.peaks) {
    peaks.push_back({{"a", pk.a}, {"center", {pk.x, pk.y}}, {"widths", {pk.x_w, pk.y_w}}});
  }
  j["evaporation"] = {{"v_b", c.evaporation.v_b},
                      {"periodic_images", c.evaporation.periodic_images},
                      {"peaks", peaks}};
  const auto& i = c.integrator;
  j["integrator"] = {{"rtol", i.rtol},
                     {"atol", i.atol},
                     {"max_order", i.max_order},
                     {"initial_dt", i.initial_dt},
                     {"tbu_threshold", i.tbu_threshold},
                     {"t_end", i.t_end},
                     {"stop_at_breakup", i.stop_at_breakup},
                     {"ndf", i.ndf},
                     {"norm", i.norm == dae::ErrorNorm::rms ? "rms" : "max"},
                     {"linear_solver", i.linear_solver == dae::LinearSolverKind::krylov ? "krylov" : "dense"},
                     {"krylov_rel_tol", i.krylov_rel_tol},
                     {"krylov_restart", i.krylov_restart}};
  if (std::isfinite(i.max_dt)) j["integrator"]["max_dt"] = i.max_dt;
  const auto ranks = c.pod.effective_ranks();
  j["pod"] = {{"tau", c.pod.tau},
              {"snapshots", c.pod.effective_snapshots()},
              {"ranks", {{"h", ranks.h}, {"p", ranks.p}, {"c", ranks.c}, {"f", ranks.f}}},
              {"source", c.pod.source},
              {"start", c.pod.restart ? "zero" : "tau"},
              {"reduce_f", c.pod.reduce_f},
              {"radial_horizon", c.pod.radial_horizon},
              {"basis_file", c.pod.basis_file},
              {"save_basis", c.pod.save_basis}};
  j["radial"] = {{"R0", c.radial.R0}, {"n", c.radial.n}};
  j["streak"] = {{"nx", c.streak.nx}};
  j["grid_study"] = {{"sizes", c.grid_study.sizes},
                     {"reference", c.grid_study.reference},
                     {"time", c.grid_study.time}};
  json probes = json::array();
  for (const auto& [x, y] : c.outputs.probes) probes.push_back({x, y});
  j["outputs"] = {{"directory", c.outputs.directory},
                  {"snapshot_every", c.outputs.snapshot_every},
                  {"snapshot_times", c.outputs.snapshot_times},
                  {"probes", probes},
                  {"write_snapshots", c.outputs.write_snapshots}};
  return j;
}

SweepConfig parse_sweep(const json& j) {
  Section root(j, "");
  SweepConfig s;
  if (!root.has("base")) throw ConfigError("sweep file needs a 'base' configuration");
  try {
    s.base = parse_config(root.raw("base"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("base: ") + e.what());
  }
  if (!root.has("axis")) throw ConfigError("sweep file needs an 'axis' section");
  Section a = root.section("axis");
  a.get("name", s.axis.name);
  a.get("values", s.axis.values);
  a.get("product", s.axis.product);
  a.finish();
  root.finish();
  static const std::set<std::string> names{"x_w", "y_w", "x_w_fixed_product", "x_k", "a"};
  if (!names.count(s.axis.name)) {
    throw ConfigError("'axis.name' must be one of x_w, y_w, x_w_fixed_product, x_k, a (got '" +
                      s.axis.name + "')");
  }
  check(!s.axis.values.empty(), "'axis.values' must not be empty");
  check(s.axis.product > 0, "'axis.product' must be positive");
  if (s.axis.name == "x_k") check(s.base.evaporation.peaks.size() == 2, "axis x_k needs exactly two peaks");
  for (double v : s.axis.values) apply_axis(s.base, s.axis, v).validate();
  return s;
}

SweepConfig load_sweep(const std::filesystem::path& path) { return parse_sweep(read_json(path)); }

RunConfig apply_axis(const RunConfig& base, const SweepAxis& axis, double value) {
  RunConfig c = base;
  auto& peaks = c.evaporation.peaks;
  if (axis.name == "x_w") {
    for (auto& pk : peaks) pk.x_w = value;
  } else if (axis.name == "y_w") {
    for (auto& pk : peaks) pk.y_w = value;
  } else if (axis.name == "x_w_fixed_product") {
    for (auto& pk : peaks) {
      pk.x_w = value;
      pk.y_w = axis.product / value;
    }
  } else if (axis.name == "x_k") {
    if (peaks.size() != 2) throw ConfigError("axis x_k needs exactly two peaks");
    peaks[0].x = -value;
    peaks[1].x = value;
  } else if (axis.name == "a") {
    for (auto& pk : peaks) pk.a = value;
  } else {
    throw ConfigError("unknown sweep axis '" + axis.name + "'");
  }
  return c;
}

}  // namespace tearfilm::config
