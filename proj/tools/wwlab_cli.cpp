// Experiment runner: one subcommand per stage, each writing a self-describing
// artifact directory. Exit codes: 0 pass, 2 tolerance failure, 3 config
// error, 4 numerical abort.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wwlab/dispersive.hpp"
#include "wwlab/elliptic.hpp"
#include "wwlab/hamiltonian.hpp"
#include "wwlab/io.hpp"
#include "wwlab/packets.hpp"
#include "wwlab/scenarios.hpp"
#include "wwlab/zakharov.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wwlab;
using spectral::Complex;
using spectral::ComplexVec;
using spectral::RealVec;

constexpr const char* kCodeVersion = "wwlab 0.1.0";
constexpr int kExitTolerance = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumerical = 4;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- configuration ----

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"grid", {"n", "length"}},
      {"physics", {"g", "h", "delta", "nz"}},
      {"frequency", {"lambda", "lambdas", "c", "c1", "kappas", "mu_exponents", "separations"}},
      {"evolution", {"dt", "t_end", "stride", "filter_strength", "filter_order", "amplitude", "modes", "decay",
                     "time_samples"}},
      {"coefficients", {"velocity", "taylor"}},
      {"tolerances", {"energy_drift", "identity", "dtn", "frame", "match", "bilipschitz", "spreading_r2"}},
  };
  return s;
}

const std::set<std::string>& top_level_scalars() {
  static const std::set<std::string> s = {"scenario", "seed"};
  return s;
}

void validate(const json& tree) {
  if (!tree.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : tree.items()) {
    if (top_level_scalars().count(key)) continue;
    const auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError("unknown config key '" + key + "'");
    if (!value.is_object()) throw ConfigError("config key '" + key + "' must be an object");
    for (const auto& [sub, unused] : value.items())
      if (!it->second.count(sub)) throw ConfigError("unknown config key '" + key + "." + sub + "'");
  }
}

// Typed access; every value read, default or not, lands in effective() so
// the manifest records the complete configuration.
class Config {
 public:
  Config() = default;
  explicit Config(json tree) : tree_(std::move(tree)) { validate(tree_); }

  double number(const std::string& sec, const std::string& key, double fallback) {
    const json* v = find(sec, key);
    double out = fallback;
    if (v) {
      if (!v->is_number()) throw ConfigError("config key '" + sec + "." + key + "' must be a number");
      out = v->get<double>();
    }
    effective_[sec][key] = out;
    return out;
  }

  int integer(const std::string& sec, const std::string& key, int fallback) {
    const json* v = find(sec, key);
    int out = fallback;
    if (v) {
      if (!v->is_number_integer()) throw ConfigError("config key '" + sec + "." + key + "' must be an integer");
      out = v->get<int>();
    }
    effective_[sec][key] = out;
    return out;
  }

  std::vector<double> list(const std::string& sec, const std::string& key, std::vector<double> fallback) {
    const json* v = find(sec, key);
    if (v) {
      if (!v->is_array()) throw ConfigError("config key '" + sec + "." + key + "' must be an array");
      fallback.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError("config key '" + sec + "." + key + "' must hold numbers");
        fallback.push_back(e.get<double>());
      }
    }
    effective_[sec][key] = fallback;
    return fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    std::string out = fallback;
    if (tree_.contains(key)) {
      if (!tree_[key].is_string()) throw ConfigError("config key '" + key + "' must be a string");
      out = tree_[key].get<std::string>();
    }
    effective_[key] = out;
    return out;
  }

  std::uint64_t seed(std::uint64_t fallback) {
    std::uint64_t out = fallback;
    if (tree_.contains("seed")) {
      if (!tree_["seed"].is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
      out = tree_["seed"].get<std::uint64_t>();
    }
    effective_["seed"] = out;
    return out;
  }

  void override_value(const std::string& sec, const std::string& key, json value) { tree_[sec][key] = std::move(value); }
  void override_seed(std::uint64_t s) { tree_["seed"] = s; }
  const json& effective() const { return effective_; }

 private:
  const json* find(const std::string& sec, const std::string& key) const {
    if (!tree_.contains(sec)) return nullptr;
    const json& s = tree_.at(sec);
    return s.contains(key) ? &s.at(key) : nullptr;
  }

  json tree_ = json::object();
  json effective_ = json::object();
};

// A manifest is accepted as a config: its "config" member is used.
Config load_config(const std::string& path) {
  if (path.empty()) return Config();
  json tree;
  try {
    tree = io::read_json(path);
  } catch (const io::FormatError& e) {
    throw ConfigError(e.what());
  }
  if (tree.is_object() && tree.contains("config") && tree.contains("command")) tree = tree["config"];
  return Config(tree);
}

struct CommonOptions {
  std::string config_path;
  std::string out;
  std::string lambdas;
  std::optional<std::uint64_t> seed;
  bool frozen = false;
  bool dump_strip = false;
  std::string input;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad --lambda entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--lambda needs at least one value");
  return out;
}

Config prepare(const CommonOptions& opt) {
  Config cfg = load_config(opt.config_path);
  if (!opt.lambdas.empty()) {
    const auto values = parse_list(opt.lambdas);
    cfg.override_value("frequency", "lambdas", values);
    cfg.override_value("frequency", "lambda", values.front());
  }
  if (opt.seed) cfg.override_seed(*opt.seed);
  return cfg;
}

fs::path resolve_out(const CommonOptions& opt, const std::string& command) {
  const char* root = std::getenv("WWLAB_ARTIFACT_ROOT");
  fs::path base = root ? fs::path(root) : fs::path("artifacts");
  if (opt.out.empty()) return base / command;
  fs::path out(opt.out);
  return out.is_absolute() || !root ? out : base / out;
}

json conventions() {
  return {{"domain", "2 pi torus, uniform grid x_j = 2 pi j / n"},
          {"norms", "un-normalized integrals over [0, 2 pi)"},
          {"fft", "forward unnormalized, inverse normalized by 1/n"},
          {"linf", "8x spectral oversampling where stated"},
          {"littlewood_paley", "phi from the normalized exp(-1/(1-s^2)) integral; levels 0, 1, 2, 4, ..."},
          {"bottom", "flat bottom, Neumann closure for potential and pressure"},
          {"time_fit", "exponents are least-squares slopes of log2 value against log2 scale"}};
}

json manifest(const std::string& command, const Config& cfg, json extra = json::object()) {
  json m = {{"command", command}, {"code_version", kCodeVersion}, {"config", cfg.effective()},
            {"conventions", conventions()}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  return m;
}

struct Check {
  std::string name;
  bool pass = true;
  std::string detail;
};

int finish(const std::vector<Check>& checks) {
  int code = 0;
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    if (!c.pass) code = kExitTolerance;
  }
  return code;
}

std::string fmt(double v) { return io::format_double(v); }

zakharov::WaveParams physics(Config& cfg, zakharov::WaveParams p) {
  p.g = cfg.number("physics", "g", p.g);
  p.h = cfg.number("physics", "h", p.h);
  p.delta = cfg.number("physics", "delta", p.delta);
  p.nz = cfg.integer("physics", "nz", p.nz);
  p.filter_strength = cfg.number("evolution", "filter_strength", p.filter_strength);
  p.filter_order = cfg.number("evolution", "filter_order", p.filter_order);
  return p;
}

int grid_size(Config& cfg, int fallback) {
  const double length = cfg.number("grid", "length", spectral::kTwoPi);
  if (std::abs(length - spectral::kTwoPi) > 1e-12) throw ConfigError("config key 'grid.length' must be 2 pi");
  const int n = cfg.integer("grid", "n", fallback);
  if (!spectral::is_power_of_two(n) || n < 16) throw ConfigError("config key 'grid.n' must be a power of two >= 16");
  return n;
}

scenarios::WaveScenario wave_scenario(Config& cfg) {
  const std::string name = cfg.text("scenario", "identity");
  scenarios::WaveScenario s;
  if (name == "identity") {
    s = scenarios::identity_scenario();
    s.t_end = 0.05;
  } else if (name == "flow") {
    s = scenarios::flow_scenario();
  } else if (name == "rough") {
    s = scenarios::flow_scenario();
    s.modes = scenarios::rough_modes(cfg.number("evolution", "amplitude", 0.02), cfg.integer("evolution", "modes", 64),
                                     cfg.number("evolution", "decay", 2.5));
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  s.n = grid_size(cfg, s.n);
  s.params = physics(cfg, s.params);
  s.dt = cfg.number("evolution", "dt", s.dt);
  s.t_end = cfg.number("evolution", "t_end", s.t_end);
  s.stride = cfg.integer("evolution", "stride", s.stride);
  if (!(s.dt > 0.0) || !(s.t_end > 0.0) || s.stride < 1) throw ConfigError("evolution dt, t_end and stride must be positive");
  return s;
}

// ---- simulate ----

int cmd_simulate(const CommonOptions& opt) {
  Config cfg = prepare(opt);
  const scenarios::WaveScenario s = wave_scenario(cfg);
  const double drift_tol = cfg.number("tolerances", "energy_drift", 1e-6);
  const double identity_tol = cfg.number("tolerances", "identity", 1e-2);
  const zakharov::ZakharovSystem sys(s.n, s.params);
  const zakharov::Trajectory traj = scenarios::run(sys, s);

  io::ArtifactWriter out(resolve_out(opt, "simulate"));
  io::Table energy{{"t", "energy", "relative_drift"}, {}};
  double drift = 0.0;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const double rel = std::abs(traj.energy[i] - traj.energy[0]) / std::abs(traj.energy[0]);
    drift = std::max(drift, rel);
    energy.add({traj.snapshots[i].t, traj.energy[i], rel});
  }
  io::write_csv(out.path("energy.csv"), energy);

  io::Table ident{{"time", "spacing", "eta_to_b", "b_to_taylor", "v_to_taylor", "structure", "slope_transport",
                   "min_taylor"},
                  {}};
  const int mid = static_cast<int>(traj.snapshots.size()) / 2;
  double worst_identity = 0.0;
  for (int offset : {4, 2, 1}) {
    if (mid - offset < 0 || mid + offset >= static_cast<int>(traj.snapshots.size())) continue;
    const auto r = zakharov::identity_residuals(sys, traj, mid, offset);
    ident.add({r.time, r.spacing, r.eta_to_b, r.b_to_taylor, r.v_to_taylor, r.structure, r.slope_transport, r.min_taylor});
    if (offset == 1)
      worst_identity = std::max({r.eta_to_b, r.b_to_taylor, r.v_to_taylor, r.structure, r.slope_transport});
  }
  io::write_csv(out.path("identities.csv"), ident);

  fs::create_directory(out.path("snapshots"));
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    const auto& st = traj.snapshots[i];
    io::BinaryField f;
    f.name = "snapshot t=" + fmt(st.t);
    f.nx = static_cast<std::uint32_t>(s.n);
    f.column_names = {"eta", "psi"};
    f.columns = {st.eta, st.psi};
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
    io::write_binary(out.path("snapshots") / name, f);
  }
  if (opt.dump_strip) {
    const auto& last = traj.snapshots.back();
    const auto solver = sys.solver(last.eta);
    const auto sol = solver.solve(last.psi);
    const auto p = elliptic::pressure(solver, sol, s.params.g);
    io::BinaryField f;
    f.name = "strip t=" + fmt(last.t);
    f.nx = static_cast<std::uint32_t>(s.n);
    f.nz = static_cast<std::uint32_t>(s.params.nz);
    f.column_names = {"theta", "pressure"};
    for (const auto* field : {&sol.theta, &p.pressure}) {
      RealVec col;
      for (int i = 0; i < field->rows(); ++i)
        for (int j = 0; j < field->cols(); ++j) col.push_back((*field)(i, j));
      f.columns.push_back(col);
    }
    io::write_binary(out.path("strip_final.bin"), f);
  }
  json extra = {{"snapshots", traj.snapshots.size()}, {"snapshot_spacing", traj.spacing()}};
  io::write_json(out.path("manifest.json"), manifest("simulate", cfg, extra));
  out.commit();

  std::vector<Check> checks{{"energy_drift", drift <= drift_tol, fmt(drift) + " <= " + fmt(drift_tol)}};
  if (!ident.rows.empty())
    checks.push_back({"identities", worst_identity < identity_tol, fmt(worst_identity) + " < " + fmt(identity_tol)});
  return finish(checks);
}

// ---- dtn-test ----

int cmd_dtn_test(const CommonOptions& opt) {
  Config cfg = prepare(opt);
  const int n = grid_size(cfg, 1024);
  zakharov::WaveParams p;
  p.nz = 64;
  p = physics(cfg, p);
  const double tol = cfg.number("tolerances", "dtn", 1e-8);
  const double amplitude = cfg.number("evolution", "amplitude", 0.02);
  const zakharov::ZakharovSystem sys(n, p);

  io::ArtifactWriter out(resolve_out(opt, "dtn-test"));
  io::Table flat{{"k", "computed", "exact", "relative_error"}, {}};
  double worst = 0.0;
  const RealVec zero(n, 0.0);
  const auto solver = sys.solver(zero);
  for (int k = 1; k <= n / 4; ++k) {
    RealVec f(n);
    for (int j = 0; j < n; ++j) f[j] = std::cos(k * spectral::kTwoPi * j / n);
    const RealVec g = elliptic::dtn(solver, f);
    const double exact = k * std::tanh(p.h * k);
    // Project onto cos(kx) to read the multiplier.
    double proj = 0.0, err = 0.0;
    for (int j = 0; j < n; ++j) proj += g[j] * f[j];
    proj *= 2.0 / n;
    for (int j = 0; j < n; ++j) err = std::max(err, std::abs(g[j] - exact * f[j]));
    const double rel = err / exact;
    worst = std::max(worst, rel);
    flat.add({static_cast<double>(k), proj, exact, rel});
  }
  io::write_csv(out.path("dtn_flat.csv"), flat);

  // |G(eta) f - |D| tanh(h|D|) f| / ||D| f| for f = cos(kappa x) on a smooth surface.
  RealVec eta(n);
  for (int j = 0; j < n; ++j) eta[j] = amplitude * std::cos(spectral::kTwoPi * j / n);
  const auto curved = sys.solver(eta);
  io::Table para{{"kappa", "relative_residual"}, {}};
  for (double kappa : spectral::lp::levels(n)) {
    if (kappa < 1.0 || kappa > n / 4) continue;
    RealVec f(n);
    for (int j = 0; j < n; ++j) f[j] = std::cos(kappa * spectral::kTwoPi * j / n);
    const RealVec g = elliptic::dtn(curved, f);
    const RealVec flat_part = spectral::fourier_multiplier(f, [&](double xi) { return std::abs(xi) * std::tanh(p.h * std::abs(xi)); });
    RealVec diff(n);
    for (int j = 0; j < n; ++j) diff[j] = g[j] - flat_part[j];
    para.add({kappa, spectral::l2_norm(diff) / spectral::l2_norm(flat_part)});
  }
  io::write_csv(out.path("dtn_paralinearization.csv"), para);
  io::write_json(out.path("manifest.json"), manifest("dtn-test", cfg));
  out.commit();
  return finish({{"dtn_flat", worst <= tol, fmt(worst) + " <= " + fmt(tol)}});
}

// ---- loading a simulate artifact ----

struct LoadedRun {
  Config cfg;
  int n = 0;
  zakharov::WaveParams params;
  zakharov::Trajectory traj;
};

LoadedRun load_run(const std::string& dir) {
  const fs::path root(dir);
  json m;
  try {
    m = io::read_json(root / "manifest.json");
  } catch (const io::FormatError& e) {
    throw ConfigError(std::string("input artifact: ") + e.what());
  }
  if (m.value("command", "") != "simulate") throw ConfigError("input artifact is not a simulate run: " + dir);
  LoadedRun run;
  run.cfg = Config(m["config"]);
  const scenarios::WaveScenario s = wave_scenario(run.cfg);
  run.n = s.n;
  run.params = s.params;
  run.traj.dt = s.dt;
  run.traj.stride = s.stride;
  const std::size_t count = m.value("snapshots", std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", i);
    io::BinaryField f;
    try {
      f = io::read_binary(root / "snapshots" / name);
    } catch (const io::FormatError& e) {
      throw ConfigError(std::string("input artifact: ") + e.what());
    }
    zakharov::WaveState st{f.columns.at(0), f.columns.at(1), s.initial().t + i * s.dt * s.stride};
    if (i + 1 == count) st.t = s.t_end;
    run.traj.snapshots.push_back(st);
  }
  if (run.traj.snapshots.empty()) throw ConfigError("input artifact has no snapshots: " + dir);
  return run;
}

hamiltonian::TruncatedCoeffs constant_coefficients(Config& cfg) {
  const double v = cfg.number("coefficients", "velocity", 0.0);
  const double a = cfg.number("coefficients", "taylor", 9.81);
  if (!(a > 0.0)) throw ConfigError("config key 'coefficients.taylor' must be positive");
  return hamiltonian::TruncatedCoeffs::constant(v, a);
}

// ---- flow ----

int cmd_flow(const CommonOptions& opt) {
  if (opt.input.empty() && !opt.frozen)
    throw ConfigError("flow needs a simulate artifact (--input DIR) or a frozen-coefficient spec (--frozen-coeffs)");
  Config cfg = prepare(opt);
  const double lambda = cfg.number("frequency", "lambda", 256.0);
  const double bilip_tol = cfg.number("tolerances", "bilipschitz", 0.5);
  const double r2_tol = cfg.number("tolerances", "spreading_r2", 0.99);
  hamiltonian::FrequencyConstants k;
  k.lambda = lambda;
  k.c = cfg.number("frequency", "c", k.c);
  k.c1 = cfg.number("frequency", "c1", k.c1);
  k.validate();

  std::optional<LoadedRun> run;
  std::optional<zakharov::ZakharovSystem> sys;
  hamiltonian::TruncatedCoeffs coeffs = hamiltonian::TruncatedCoeffs::constant(0.0, 9.81);
  double s0 = 0.0, t_end = cfg.number("evolution", "t_end", 0.25);
  json extra = json::object();
  if (!opt.input.empty()) {
    run = load_run(opt.input);
    sys.emplace(run->n, run->params);
    coeffs = hamiltonian::coefficients_from_trajectory(*sys, run->traj, k);
    if (opt.frozen) coeffs = coeffs.frozen_at(0);
    std::vector<RealVec> etas;
    for (const auto& st : run->traj.snapshots) etas.push_back(st.eta);
    const std::size_t i0 = hamiltonian::select_s0(etas, k);
    s0 = run->traj.snapshots[i0].t;
    t_end = run->traj.snapshots.back().t;
    extra["input"] = opt.input;
    extra["input_config"] = run->cfg.effective();
    extra["s0"] = s0;
  } else {
    coeffs = constant_coefficients(cfg);
  }
  const double t0 = coeffs.time_independent() ? 0.0 : coeffs.t_min();
  const int samples = cfg.integer("evolution", "time_samples", 25);
  std::vector<double> times;
  for (int i = 0; i <= samples; ++i) times.push_back(t0 + (t_end - t0) * i / samples);

  io::ArtifactWriter out(resolve_out(opt, "flow"));
  std::vector<std::pair<double, double>> init;
  const int rays = 64;
  for (int r = 0; r < rays; ++r) init.emplace_back(spectral::kTwoPi * r / rays, lambda);
  const auto bundle = hamiltonian::flow_integrate(coeffs, init, s0, times, hamiltonian::band_options(lambda));
  io::Table ray_table{{"t", "ray", "x", "xi", "dx_dx"}, {}};
  for (std::size_t i = 0; i < times.size(); ++i)
    for (int r = 0; r < rays; ++r)
      ray_table.add({times[i], static_cast<double>(r), bundle.states[i][r].x, bundle.states[i][r].xi, bundle.states[i][r].dx_dx});
  io::write_csv(out.path("rays.csv"), ray_table);

  const auto bl = hamiltonian::bilipschitz_report(bundle);
  io::write_json(out.path("bilipschitz.json"),
                 {{"defect", bl.defect}, {"band_drift", bl.band_drift}, {"min_dx_dx", bl.min_dx_dx}, {"max_dx_dx", bl.max_dx_dx}});
  io::Table spread{{"ray", "r2", "min_ratio", "max_ratio"}, {}};
  double worst_r2 = 1.0;
  for (int r = 0; r < rays; r += 8) {
    const auto sp = hamiltonian::spreading_report(bundle, r, coeffs, lambda);
    worst_r2 = std::min(worst_r2, sp.fit.r2);
    spread.add({static_cast<double>(r), sp.fit.r2, sp.min_ratio, sp.max_ratio});
  }
  io::write_csv(out.path("spreading.csv"), spread);

  std::vector<std::pair<double, double>> pair_init;
  const double scale = std::pow(lambda, 0.75);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 3; ++j) pair_init.emplace_back(1.0 + j * 0.5 / scale, lambda + i * scale / 4.0);
  const auto pairs = hamiltonian::flow_integrate(coeffs, pair_init, s0, times, hamiltonian::band_options(lambda));
  io::write_json(out.path("two_point.json"), {{"two_point_constant", hamiltonian::two_point_constant(pairs, lambda)},
                                              {"persistence_constant", hamiltonian::persistence_constant(pairs, lambda)}});

  // Integration identity scan when the trajectory resolves it.
  if (run && run->traj.snapshots.size() >= 3) {
    const auto lambdas = cfg.list("frequency", "lambdas", {64, 128, 256, 512});
    io::Table f1{{"lambda", "g_v_sup", "d2v_sup", "f1_sup"}, {}};
    std::vector<double> ls, gv, dv;
    for (double l : lambdas) {
      if (l > run->n / 8) continue;
      hamiltonian::FrequencyConstants kl = k;
      kl.lambda = l;
      const auto r = hamiltonian::integration_residual(*sys, run->traj, 1, 1, kl);
      f1.add({l, r.g_v_sup, r.d2v_sup, r.f1_sup});
      ls.push_back(l);
      gv.push_back(r.g_v_sup);
      dv.push_back(r.d2v_sup);
    }
    io::write_csv(out.path("f1_scan.csv"), f1);
    if (ls.size() >= 2) {
      const auto fg = fit_exponent(ls, gv), fd = fit_exponent(ls, dv);
      io::write_json(out.path("f1_fit.json"), {{"g_v", io::fit_json(fg)}, {"d2v", io::fit_json(fd)}, {"gap", fd.slope - fg.slope}});
    }
  }
  io::write_json(out.path("manifest.json"), manifest("flow", cfg, extra));
  out.commit();
  return finish({{"bilipschitz", bl.defect < bilip_tol, fmt(bl.defect) + " < " + fmt(bilip_tol)},
                 {"spreading_r2", worst_r2 >= r2_tol, fmt(worst_r2) + " >= " + fmt(r2_tol)}});
}

// ---- parametrix ----

int cmd_parametrix(const CommonOptions& opt) {
  Config cfg = prepare(opt);
  const double lambda = cfg.number("frequency", "lambda", 256.0);
  const auto lambdas = cfg.list("frequency", "lambdas", {64, 128, 256, 512, 1024});
  const double frame_tol = cfg.number("tolerances", "frame", 1e-10);
  const double match_tol = cfg.number("tolerances", "match", 1e-6);
  const std::uint64_t seed = cfg.seed(1);
  const int n = static_cast<int>(8 * lambda);

  // Coefficients frozen from a simulate artifact's first snapshot, or constant.
  std::function<hamiltonian::TruncatedCoeffs(double)> coeffs_at;
  json extra = json::object();
  if (!opt.input.empty()) {
    const LoadedRun run = load_run(opt.input);
    const zakharov::ZakharovSystem sys(run.n, run.params);
    const auto traces = sys.traces(run.traj.snapshots.front(), true);
    const double t = run.traj.snapshots.front().t;
    coeffs_at = [traces, t](double l) { return scenarios::frozen_coefficients(traces, t, l); };
    extra["input"] = opt.input;
  } else {
    const auto c = constant_coefficients(cfg);
    coeffs_at = [c](double) { return c; };
  }

  io::ArtifactWriter out(resolve_out(opt, "parametrix"));
  std::mt19937_64 rng(seed);
  const auto full = packets::Lattice::make(n, lambda, packets::XiRange::kFull);
  const double a_full = packets::frame_constant(full);
  const ComplexVec f = spectral::random_complex_field(rng, n, 1, n / 2 - 1);
  const ComplexVec back = packets::reconstruct(packets::decompose(f, full));
  double recon = 0.0;
  for (int j = 0; j < n; ++j) recon = std::max(recon, std::abs(back[j] / a_full - f[j]));
  recon /= spectral::linf_norm(f);

  const auto band = packets::Lattice::make(n, lambda, packets::XiRange::kBand);
  const ComplexVec data = dispersive::band_projection(
      spectral::random_complex_field(rng, n, static_cast<int>(lambda / 2), static_cast<int>(2 * lambda)), lambda / 2.0,
      2.0 * lambda);
  const auto match = packets::match_data(data, band, {match_tol, 20, true});
  io::Table residuals{{"iteration", "relative_residual"}, {}};
  for (std::size_t i = 0; i < match.residuals.size(); ++i) residuals.add({static_cast<double>(i + 1), match.residuals[i]});
  io::write_csv(out.path("match_residuals.csv"), residuals);
  io::Table coeff_table{{"x", "xi", "re", "im"}, {}};
  for (std::size_t ix = 0; ix < band.xs.size(); ++ix)
    for (std::size_t ixi = 0; ixi < band.xis.size(); ++ixi) {
      const Complex c = match.coeffs.at(ix, ixi);
      coeff_table.add({band.xs[ix], static_cast<double>(band.xis[ixi]), c.real(), c.imag()});
    }
  io::write_csv(out.path("coefficients.csv"), coeff_table);
  const double a_band = packets::frame_constant(band);
  io::write_json(out.path("frame.json"), {{"frame_constant_full", a_full},
                                          {"frame_constant_band", a_band},
                                          {"reconstruction_error", recon},
                                          {"match_iterations", match.iterations},
                                          {"match_contraction", match.contraction},
                                          {"match_residual", match.residuals.empty() ? 0.0 : match.residuals.back()}});

  std::vector<double> ratios, frozen;
  for (double l : lambdas) {
    const auto c = coeffs_at(l);
    packets::ResidualOptions ro;
    ratios.push_back(packets::packet_residual(c, 1.0, l, static_cast<int>(ro.grid_factor * l), ro).ratio());
    ro.model = packets::PhaseModel::kFrozen;
    frozen.push_back(packets::packet_residual(c, 1.0, l, static_cast<int>(ro.grid_factor * l), ro).ratio());
  }
  const auto fit = fit_exponent(lambdas, ratios);
  auto table = io::scan_table("lambda", "ratio", lambdas, ratios, fit);
  table.columns.push_back("frozen_phase_ratio");
  for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].push_back(frozen[i]);
  io::write_csv(out.path("residual_scan.csv"), table);
  io::write_json(out.path("residual_fit.json"), io::fit_json(fit));

  io::Table orth{{"lambda", "packets", "max_ratio", "mean_ratio", "constant"}, {}};
  double worst_c = 0.0;
  for (double l : lambdas) {
    const auto o = packets::orthogonality(coeffs_at(l), l, 1.0, 0.1, 0.125, 20, seed);
    orth.add({l, static_cast<double>(o.packets), o.max_ratio, o.mean_ratio, o.constant()});
    worst_c = std::max(worst_c, o.constant());
  }
  io::write_csv(out.path("orthogonality.csv"), orth);
  extra["frame_constants"] = {{"full", a_full}, {"band", a_band}};
  io::write_json(out.path("manifest.json"), manifest("parametrix", cfg, extra));
  out.commit();
  return finish({{"frame_reconstruction", recon <= frame_tol, fmt(recon) + " <= " + fmt(frame_tol)},
                 {"match_data", match.converged && match.contraction <= 0.5,
                  "contraction " + fmt(match.contraction) + ", iterations " + std::to_string(match.iterations)},
                 {"packet_residual_exponent", fit.slope <= -0.4, fmt(fit.slope) + " <= -0.4"},
                 {"orthogonality", worst_c <= 10.0, "C = " + fmt(worst_c) + " <= 10"}});
}

// ---- strichartz ----

void write_scan(io::ArtifactWriter& out, const std::string& stem, const std::string& scale, const std::string& value,
                const dispersive::ScanReport& r) {
  std::vector<double> xs, ys;
  for (const auto& p : r.points) {
    xs.push_back(p.scale);
    ys.push_back(p.value);
  }
  io::write_csv(out.path(stem + ".csv"), io::scan_table(scale, value, xs, ys, r.fit));
  io::write_json(out.path(stem + ".json"), io::fit_json(r.fit));
}

int cmd_strichartz(const CommonOptions& opt) {
  Config cfg = prepare(opt);
  const auto lambdas = cfg.list("frequency", "lambdas", {64, 128, 256, 512, 1024, 2048, 4096});
  const auto kappas = cfg.list("frequency", "kappas", {16, 32, 64, 128, 256});
  const auto mu_exp = cfg.list("frequency", "mu_exponents", {0.875, 0.9375});
  const auto seps = cfg.list("frequency", "separations", {0.05, 0.1, 0.2, 0.4});
  const double lambda = cfg.number("frequency", "lambda", 1024.0);
  const double velocity = cfg.number("coefficients", "velocity", 0.0);
  const double taylor = cfg.number("coefficients", "taylor", 4096.0);
  const double t_end = cfg.number("evolution", "t_end", 0.25);
  const int samples = cfg.integer("evolution", "time_samples", 256);
  if (!(taylor > 0.0)) throw ConfigError("config key 'coefficients.taylor' must be positive");
  if (lambdas.size() < 4) throw ConfigError("Strichartz fit needs at least four lambdas");

  io::ArtifactWriter out(resolve_out(opt, "strichartz"));
  dispersive::StrichartzOptions so;
  so.velocity = velocity;
  so.taylor = taylor;
  so.t_end = t_end;
  so.time_samples = samples;
  const auto strich = dispersive::strichartz_scan(lambdas, so);
  write_scan(out, "strichartz_scan", "lambda", "quotient", strich);
  so.dispersive = false;
  if (so.velocity == 0.0) so.velocity = 1.0;
  const auto transport = dispersive::strichartz_scan(lambdas, so);
  write_scan(out, "transport_scan", "lambda", "quotient", transport);

  dispersive::LocalSmoothingOptions lo;
  lo.lambda = lambda;
  lo.velocity = velocity;
  lo.taylor = taylor;
  lo.t_end = t_end;
  lo.time_samples = samples;
  const auto ls = dispersive::local_smoothing_scan(kappas, lo);
  write_scan(out, "local_smoothing_scan", "kappa", "ratio", ls);
  std::vector<double> mus;
  for (double e : mu_exp) mus.push_back(std::pow(lambda, e));
  const auto gap = dispersive::local_smoothing_gap(mus, lo);
  io::Table gap_table{{"mu", "ratio", "normalized"}, {}};
  for (std::size_t i = 0; i < gap.points.size(); ++i) gap_table.add({gap.points[i].scale, gap.points[i].value, gap.normalized[i]});
  io::write_csv(out.path("local_smoothing_gap.csv"), gap_table);

  dispersive::OverlapOptions oo;
  oo.velocity = velocity;
  oo.taylor = taylor;
  std::vector<double> overlap_lambdas;
  for (double l : lambdas)
    if (l <= 1024) overlap_lambdas.push_back(l);
  const auto single = dispersive::overlap_scan(overlap_lambdas, oo);
  write_scan(out, "overlap_scan", "lambda", "max_count", single);
  const auto two = dispersive::two_point_scan(256, seps, oo);
  write_scan(out, "two_point_scan", "separation", "max_count", two);

  io::write_json(out.path("manifest.json"), manifest("strichartz", cfg, {{"linf_oversampling", 8}}));
  out.commit();
  return finish({{"strichartz_exponent", strich.fit.slope <= 0.425, fmt(strich.fit.slope) + " <= 0.425"},
                 {"transport_control", transport.fit.slope >= 0.45, fmt(transport.fit.slope) + " >= 0.45"},
                 {"local_smoothing_exponent", ls.fit.slope <= -0.075, fmt(ls.fit.slope) + " <= -0.075"},
                 {"local_smoothing_gap", gap.spread <= 2.0, "spread " + fmt(gap.spread) + " <= 2"},
                 {"overlap_single", single.fit.slope <= 0.3, fmt(single.fit.slope) + " <= 0.3"},
                 {"overlap_two_point", std::abs(two.fit.slope + 1.0) <= 0.15, fmt(two.fit.slope) + " in -1 +- 0.15"}});
}

// ---- report ----

struct Target {
  std::string file;
  std::string key;  // empty: the "slope" member
  double lo, hi;
};

int cmd_report(const std::vector<std::string>& dirs, const CommonOptions& opt) {
  if (dirs.empty()) throw ConfigError("report needs at least one artifact directory");
  const std::vector<Target> targets = {
      {"strichartz_scan.json", "", -1e300, 0.425},  {"transport_scan.json", "", 0.45, 1e300},
      {"local_smoothing_scan.json", "", -1e300, -0.075}, {"overlap_scan.json", "", -1e300, 0.3},
      {"two_point_scan.json", "", -1.15, -0.85},    {"residual_fit.json", "", -1e300, -0.4},
      {"f1_fit.json", "gap", 0.4, 1e300}};
  json summary = json::object();
  bool all = true;
  for (const auto& dir : dirs) {
    if (!fs::is_directory(dir)) throw ConfigError("not an artifact directory: " + dir);
    for (const auto& t : targets) {
      const fs::path p = fs::path(dir) / t.file;
      if (!fs::exists(p)) continue;
      const json j = io::read_json(p);
      const double v = t.key.empty() ? j.at("slope").get<double>() : j.at(t.key).get<double>();
      const bool pass = v >= t.lo && v <= t.hi;
      all = all && pass;
      json entry = {{"value", v}, {"pass", pass}};
      if (t.lo > -1e299) entry["min"] = t.lo;
      if (t.hi < 1e299) entry["max"] = t.hi;
      summary[fs::path(dir).filename().string() + "/" + t.file] = entry;
    }
  }
  if (summary.empty()) throw ConfigError("no fitted exponents found in the given artifacts");
  const json report = {{"code_version", kCodeVersion}, {"exponents", summary}, {"all_pass", all}};
  std::cout << report.dump(2) << "\n";
  if (!opt.out.empty()) {
    io::ArtifactWriter out(resolve_out(opt, "report"));
    io::write_json(out.path("report.json"), report);
    out.commit();
  }
  return all ? 0 : kExitTolerance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gravity water wave numerical laboratory"};
  app.require_subcommand(1);
  CommonOptions opt;
  std::vector<std::string> report_dirs;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file or a previous manifest");
    sub->add_option("--out", opt.out, "artifact directory (relative to WWLAB_ARTIFACT_ROOT when set)");
    sub->add_option("--lambda", opt.lambdas, "comma separated frequency list");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_flag("--frozen-coeffs", opt.frozen, "time-frozen coefficients");
    sub->add_flag("--dump-strip", opt.dump_strip, "write strip fields");
    sub->add_option("--input", opt.input, "simulate artifact providing the trajectory");
  };
  std::map<std::string, std::function<int()>> commands = {
      {"simulate", [&] { return cmd_simulate(opt); }},   {"dtn-test", [&] { return cmd_dtn_test(opt); }},
      {"flow", [&] { return cmd_flow(opt); }},           {"parametrix", [&] { return cmd_parametrix(opt); }},
      {"strichartz", [&] { return cmd_strichartz(opt); }}, {"report", [&] { return cmd_report(report_dirs, opt); }}};
  for (const auto& [name, unused] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    common(sub);
    if (name == "report") sub->add_option("artifacts", report_dirs, "artifact directories");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return commands.at(name)();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const zakharov::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << " (last good t = " << e.last_good().t << ")\n";
    return kExitNumerical;
  } catch (const hamiltonian::FlowAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
