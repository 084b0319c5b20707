// The experiments behind the command-line subcommands. Each returns an
// ExperimentReport whose metrics carry their own tolerances; a report passes
// iff every metric does.

#ifndef EDLAB_EXPERIMENTS_HPP_
#define EDLAB_EXPERIMENTS_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "edlab/config.hpp"
#include "edlab/ensemble.hpp"
#include "edlab/fields.hpp"
#include "edlab/io.hpp"
#include "edlab/maxent.hpp"
#include "edlab/observables.hpp"

namespace edlab {

inline constexpr const char* kVersion = "0.1.0";

struct Metric {
  std::string name;
  double value = 0.0;
  std::string op;  // "<", "<=", ">=", "=="
  double bound = 0.0;
  bool pass = false;
};

struct ExperimentReport {
  std::string experiment;
  RunConfig config;
  std::vector<Metric> metrics;
  json cases = json::array();
  std::vector<std::string> diagnostics;

  const Metric& check(std::string name, double value, const std::string& op, double bound) {
    bool ok = false;
    if (op == "<") ok = value < bound;
    else if (op == "<=") ok = value <= bound;
    else if (op == ">=") ok = value >= bound;
    else if (op == "==") ok = value == bound;
    else throw Error("unknown comparison " + op);
    metrics.push_back({std::move(name), value, op, bound, ok});
    return metrics.back();
  }
  const Metric& require(std::string name, bool ok) {
    return check(std::move(name), ok ? 1.0 : 0.0, "==", 1.0);
  }

  bool pass() const {
    return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
  }

  /// Metrics whose name starts with `prefix`.
  std::vector<Metric> matching(const std::string& prefix) const {
    std::vector<Metric> out;
    for (const auto& m : metrics) {
      if (m.name.rfind(prefix, 0) == 0) out.push_back(m);
    }
    return out;
  }

  json to_json() const {
    json ms = json::array();
    for (const auto& m : metrics) {
      ms.push_back({{"name", m.name}, {"value", m.value}, {"op", m.op}, {"bound", m.bound}, {"pass", m.pass}});
    }
    return {{"schema_version", kSchemaVersion},
            {"experiment", experiment},
            {"pass", pass()},
            {"metrics", ms},
            {"cases", cases},
            {"diagnostics", diagnostics},
            {"provenance",
             {{"seed", config.run.seed},
              {"version", kVersion},
              {"config_hash", config_hash(config)},
              {"config", to_config_text(config)}}}};
  }
};

namespace detail {

inline double relative_drift(double value, double reference) {
  const double d = std::abs(value - reference);
  return d == 0.0 ? 0.0 : d / std::abs(reference);
}

inline CoupledOptions coupled_options(const RunConfig& cfg) {
  CoupledOptions o;
  o.duration = cfg.run.duration;
  o.dt = cfg.params.dt;
  o.cadence = cfg.run.cadence;
  o.substeps = cfg.run.substeps;
  o.walkers = cfg.run.walkers;
  o.seed = cfg.run.seed;
  o.recorded_walkers = cfg.run.recorded_walkers;
  o.keep_snapshots = true;
  o.scenario = cfg.scenario.name();
  return o;
}

inline std::string eps_tag(double e) {
  std::ostringstream os;
  os << "eps=" << e;
  return os.str();
}

/// Classical characteristic through X with initial momentum p0 under the
/// configured potential (free or harmonic only).
struct Characteristics {
  bool harmonic = false;
  std::vector<double> omega;
  std::vector<double> mass;

  double position(std::size_t a, double x0, double p0, double t) const {
    if (!harmonic) return x0 + p0 * t / mass[a];
    const double w = omega[a];
    return x0 * std::cos(w * t) + p0 / (mass[a] * w) * std::sin(w * t);
  }
  double amplitude(std::size_t a, double x0, double p0) const {
    if (!harmonic) return std::max(std::abs(x0), std::abs(x0 + p0 / mass[a]));
    return std::hypot(x0, p0 / (mass[a] * omega[a]));
  }
};

inline Characteristics characteristics_for(const RunConfig& cfg, std::size_t dims) {
  Characteristics c;
  for (std::size_t a = 0; a < dims; ++a) c.mass.push_back(cfg.params.mass(a));
  if (const auto* h = std::get_if<HarmonicPotential>(&cfg.potential)) {
    c.harmonic = true;
    for (std::size_t a = 0; a < dims; ++a) c.omega.push_back(h->omega.size() == 1 ? h->omega[0] : h->omega.at(a));
  } else if (!std::holds_alternative<FreePotential>(cfg.potential)) {
    throw Error("characteristics oracle needs a free or harmonic potential");
  }
  return c;
}

/// Initial momentum of the scenario's phase along coordinate a (plane-phase
/// scenarios only).
inline double initial_momentum(const RunConfig& cfg, std::size_t a) {
  if (cfg.scenario.kind != ScenarioKind::gaussian && cfg.scenario.kind != ScenarioKind::coherent) {
    throw Error("characteristics oracle needs a gaussian or coherent scenario");
  }
  return a == 0 && cfg.scenario.kind == ScenarioKind::gaussian ? cfg.params.hbar * cfg.scenario.k0 : 0.0;
}

inline void add_uncertainty_metrics(ExperimentReport& rep, const std::string& prefix,
                                    const std::vector<UncertaintyReport>& reports) {
  double worst_identity = 0.0, worst_cov = 0.0, min_slack = 1e300, min_product = 1e300;
  bool all = true;
  double hbar = 1.0;
  for (const auto& r : reports) {
    hbar = r.hbar;
    all = all && r.all_pass();
    for (std::size_t a = 0; a < r.var_x.size(); ++a) {
      worst_identity = std::max(worst_identity, r.variance_identity_error[a]);
      worst_cov = std::max(worst_cov, std::abs(r.cov_dlnrho_x[a][a] + 1.0));
      min_slack = std::min(min_slack, r.schrodinger_slack[a]);
      min_product = std::min(min_product, r.heisenberg_product[a]);
    }
  }
  if (reports.empty()) return;
  const ReportTolerances tol;
  const double quarter = 0.25 * hbar * hbar;
  rep.check(prefix + "variance_relation_max_rel_error", worst_identity, "<=", tol.variance_relation);
  rep.check(prefix + "cov_dlnrho_x_max_deviation", worst_cov, "<=", tol.identity);
  rep.check(prefix + "schrodinger_min_slack", min_slack, ">=", -tol.inequality * quarter);
  rep.check(prefix + "heisenberg_min_product", min_product, ">=", quarter * (1.0 - tol.inequality));
  rep.require(prefix + "uncertainty_reports_all_pass", all);
}

struct Fringe {
  double minimum = 0.0;  // refined position of the density minimum
  int lo = 0, hi = 0;    // grid indices of the neighbouring maxima
};

/// Interior density minima between maxima above `significance` of the peak,
/// refined by a parabola through the three nodes around each.
inline std::vector<Fringe> fringe_minima(const RealField& rho, const Grid& g, double significance) {
  const int n = g.points(0);
  const double peak = max_value(rho);
  std::vector<int> maxima;
  for (int i = 1; i + 1 < n; ++i) {
    if (rho[i] > rho[i - 1] && rho[i] >= rho[i + 1] && rho[i] > significance * peak) maxima.push_back(i);
  }
  std::vector<Fringe> out;
  for (std::size_t k = 0; k + 1 < maxima.size(); ++k) {
    const int lo = maxima[k], hi = maxima[k + 1];
    const int i = static_cast<int>(std::min_element(rho.begin() + lo, rho.begin() + hi + 1) - rho.begin());
    if (i <= lo || i >= hi) continue;
    const double a = rho[i - 1], b = rho[i], c = rho[i + 1];
    const double denom = a - 2.0 * b + c;
    const double shift = denom > 0.0 ? 0.5 * (a - c) / denom : 0.0;
    out.push_back({g.coordinate(0, i) + shift * g.spacing(0), lo, hi});
  }
  return out;
}

/// Displacement of the walkers' cell histogram relative to rho over one
/// fringe (between its neighbouring maxima): the shift s minimizing the
/// Pearson chi-square between counts and M h rho(x - s).
inline double histogram_shift(const EnsembleState& ens, const RealField& rho, const Grid& g,
                              const Fringe& f) {
  const int n = g.points(0);
  const double h = g.spacing(0);
  std::vector<double> counts(static_cast<std::size_t>(n), 0.0);
  for (std::size_t w = 0; w < ens.size(); ++w) {
    const double s = (g.wrap(0, ens.at(w, 0)) - g.lower(0)) / h + 0.5;
    counts[static_cast<std::size_t>(static_cast<int>(std::floor(s)) % n)] += 1.0;
  }
  const double scale = static_cast<double>(ens.size()) * h;
  auto rho_at = [&](double x) {
    const double u = (x - g.lower(0)) / h;
    const int i = static_cast<int>(std::floor(u));
    const double t = u - i;
    const auto at = [&](int j) { return rho[static_cast<std::size_t>(((j % n) + n) % n)]; };
    return (1.0 - t) * at(i) + t * at(i + 1);
  };
  auto chi2 = [&](double shift) {
    double acc = 0.0;
    for (int j = f.lo; j <= f.hi; ++j) {
      const double mu = std::max(scale * rho_at(g.coordinate(0, j) - shift), 1.0);
      const double d = counts[static_cast<std::size_t>(j)] - mu;
      acc += d * d / mu;
    }
    return acc;
  };
  const double span = 4.0 * h, step = h / 16.0;
  double best = 0.0, best_val = chi2(0.0);
  for (double s = -span; s <= span + 0.5 * step; s += step) {
    const double v = chi2(s);
    if (v < best_val) {
      best_val = v;
      best = s;
    }
  }
  const double a = chi2(best - step), c = chi2(best + step);
  const double denom = a - 2.0 * best_val + c;
  return denom > 0.0 ? best + 0.5 * step * (a - c) / denom : best;
}

}  // namespace detail

inline WaveState initial_state(const RunConfig& cfg, const ModelParams& params) {
  return init_scenario(cfg.scenario, cfg.make_grid(), params);
}

// ---------------------------------------------------------------------------
// run

/// One coupled run at the configured epsilon, written to `out`.
inline ExperimentReport cmd_run(const RunConfig& cfg, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  ExperimentReport rep{"run", cfg};
  const ModelParams params = cfg.params_for(cfg.params.epsilon);
  const WaveState init = initial_state(cfg, params);
  const CoupledOptions opt = detail::coupled_options(cfg);
  const CoupledRun run = run_coupled(init, params, cfg.potential, opt);
  fs::create_directories(out);

  json snapshots = json::array();
  json reports = json::array();
  std::vector<UncertaintyReport> urs;
  auto series = detail::open_output(out / "series.csv");
  series << "time,norm,energy,ks,ks_critical";
  for (std::size_t a = 0; a < init.grid.dims(); ++a) series << ",var_x" << a << ",heisenberg" << a;
  series << '\n';
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const WaveState& s = run.snapshots[k];
    const std::string name = "fields_" + std::to_string(k) + ".csv";
    write_field_csv(out / name, s, velocity_fields(s, params));
    const bool last = k + 1 == run.snapshots.size();
    urs.push_back(uncertainty_report(s, params, last ? &run.final_ensemble : nullptr));
    reports.push_back(to_json(urs.back()));
    snapshots.push_back({{"time", s.time}, {"file", name}});
    series << s.time << ',' << run.norm[k] << ',' << run.energy[k] << ',' << run.ks[k] << ','
           << ks_critical_1pct(run.final_ensemble.size());
    for (std::size_t a = 0; a < init.grid.dims(); ++a) {
      series << ',' << urs.back().var_x[a] << ',' << urs.back().heisenberg_product[a];
    }
    series << '\n';
  }
  series.close();
  write_trajectory_csv(out / "trajectories.csv", run.record);
  write_trajectory_binary(out / "trajectories.bin", run.record, cfg.run.cadence);
  write_json(out / "uncertainty.json", reports);

  const bool quantum = params.dynamics_class() == DynamicsClass::quantum;
  double norm_err = 0.0, energy_drift = 0.0, ks_max = 0.0;
  for (std::size_t k = 0; k < run.norm.size(); ++k) {
    norm_err = std::max(norm_err, std::abs(run.norm[k] - 1.0));
    energy_drift = std::max(energy_drift, detail::relative_drift(run.energy[k], run.energy.front()));
    ks_max = std::max(ks_max, run.ks[k]);
  }
  rep.check("norm_max_error", norm_err, "<", quantum ? 1e-9 : 1e-6);
  rep.check("energy_max_relative_drift", energy_drift, "<", quantum ? 1e-6 : 1e-3);
  rep.check("ks_max", ks_max, "<", ks_critical_1pct(run.final_ensemble.size()));
  detail::add_uncertainty_metrics(rep, "", urs);
  rep.require("completed_without_caustic", !run.halted.has_value());
  if (run.halted) rep.diagnostics.push_back(*run.halted);

  json manifest{{"schema_version", kSchemaVersion},
                {"experiment", "run"},
                {"version", kVersion},
                {"config", to_config_text(cfg)},
                {"config_hash", config_hash(cfg)},
                {"seed", cfg.run.seed},
                {"scenario", cfg.scenario.name()},
                {"potential", potential_name(cfg.potential)},
                {"params", to_json(params)},
                {"dims", init.grid.dims()},
                {"walkers", run.final_ensemble.size()},
                {"recorded_walkers", run.record.walkers},
                {"cadence", cfg.run.cadence},
                {"times", run.record.times},
                {"norm", run.norm},
                {"energy", run.energy},
                {"ks", run.ks},
                {"frozen_walkers", run.frozen_walkers},
                {"max_substeps", run.max_substeps},
                {"halted", run.halted ? json(*run.halted) : json(nullptr)},
                {"snapshots", snapshots},
                {"files",
                 {{"series", "series.csv"},
                  {"trajectories_csv", "trajectories.csv"},
                  {"trajectories_bin", "trajectories.bin"},
                  {"uncertainty", "uncertainty.json"}}}};
  write_json(out / "manifest.json", manifest);
  return rep;
}

// ---------------------------------------------------------------------------
// universality

struct UniversalityOutcome {
  ExperimentReport report;
  std::vector<UncertaintyReport> uncertainty;  // every recorded state of every epsilon
  std::vector<double> seconds;                 // wall time per epsilon
};

inline UniversalityOutcome universality_experiment(const RunConfig& cfg) {
  UniversalityOutcome res{ExperimentReport{"universality", cfg}, {}, {}};
  ExperimentReport& rep = res.report;
  const auto eps = cfg.epsilon_list();
  if (eps.size() < 2) throw Error("universality: needs at least two epsilon values");
  const WaveState init = initial_state(cfg, cfg.params_for(eps.front()));
  CoupledOptions opt = detail::coupled_options(cfg);
  opt.recorded_walkers = 0;
  const double crit = ks_critical_1pct(cfg.run.walkers);
  std::vector<std::string> first_reports;
  bool identical_across_eps = true;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const ModelParams params = cfg.params_for(eps[e]);
    const auto t0 = std::chrono::steady_clock::now();
    const CoupledRun run = run_coupled(init, params, cfg.potential, opt);
    res.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    const std::string tag = detail::eps_tag(eps[e]);
    double ks_max = 0.0;
    for (double k : run.ks) ks_max = std::max(ks_max, k);
    rep.check("ks_max[" + tag + "]", ks_max, "<", crit);
    rep.require("completed[" + tag + "]", !run.halted.has_value());
    if (run.halted) rep.diagnostics.push_back(tag + ": " + *run.halted);

    std::vector<UncertaintyReport> urs;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      urs.push_back(uncertainty_report(run.snapshots[k], params));
      const std::string dump = to_json(urs.back()).dump();
      if (e == 0) {
        first_reports.push_back(dump);
      } else if (k >= first_reports.size() || dump != first_reports[k]) {
        identical_across_eps = false;
      }
    }
    detail::add_uncertainty_metrics(rep, "[" + tag + "] ", urs);
    res.uncertainty.insert(res.uncertainty.end(), urs.begin(), urs.end());

    json c{{"epsilon", eps[e]},
           {"times", run.record.times},
           {"ks", run.ks},
           {"ks_critical", crit},
           {"frozen_walkers", run.frozen_walkers},
           {"max_substeps", run.max_substeps}};

    if (cfg.scenario.kind == ScenarioKind::two_gaussian_superposition && init.grid.dims() == 1 &&
        !run.halted) {
      const WaveState& last = run.snapshots.back();
      const auto minima = detail::fringe_minima(last.rho, last.grid, 0.05);
      double worst = 0.0;
      json fr = json::array();
      for (const auto& f : minima) {
        const double shift = detail::histogram_shift(run.final_ensemble, last.rho, last.grid, f);
        worst = std::max(worst, std::abs(shift));
        fr.push_back({{"rho_minimum", f.minimum}, {"walker_minimum", f.minimum + shift}});
      }
      c["fringe_minima"] = fr;
      if (eps[e] == 1.0) {
        rep.require("fringes_found[" + tag + "]", !minima.empty());
        rep.check("fringe_minimum_offset[" + tag + "]", worst, "<=", last.grid.spacing(0));
      }
    }
    rep.cases.push_back(c);
  }
  rep.require("uncertainty_report_identical_across_epsilon", identical_across_eps);
  return res;
}

inline ExperimentReport cmd_universality(const RunConfig& cfg) { return universality_experiment(cfg).report; }

// ---------------------------------------------------------------------------
// bohmian-convergence

inline ExperimentReport cmd_bohmian_convergence(const RunConfig& cfg) {
  ExperimentReport rep{"bohmian-convergence", cfg};
  std::vector<double> ladder;
  for (double e : cfg.epsilon_list()) {
    if (e > 0.0) ladder.push_back(e);
  }
  std::sort(ladder.begin(), ladder.end());
  if (ladder.size() < 2 || ladder.back() / ladder.front() < 100.0 * (1.0 - 1e-9)) {
    throw Error("bohmian-convergence: the epsilon ladder must span at least two decades");
  }
  const ModelParams bohm = cfg.params_for(0.0);
  const WaveState init = initial_state(cfg, bohm);
  const Grid& g = init.grid;
  CoupledOptions opt = detail::coupled_options(cfg);
  opt.keep_snapshots = false;
  const EnsembleState start = sample_initial(init.rho, g, cfg.run.walkers, cfg.run.seed, init.time);

  const CoupledRun ref = run_coupled(init, bohm, cfg.potential, opt, start);
  rep.require("reference_completed", !ref.halted.has_value());
  if (ref.halted) {
    rep.diagnostics.push_back(*ref.halted);
    return rep;
  }
  // epsilon = 0 against itself with a different stream seed.
  EnsembleState reseeded = start;
  reseeded.seed = cfg.run.seed ^ 0x9E3779B97F4A7C15ull;
  const CoupledRun again = run_coupled(init, bohm, cfg.potential, opt, reseeded);
  double self = 0.0;
  for (std::size_t i = 0; i < ref.final_ensemble.positions.size(); ++i) {
    self = std::max(self, std::abs(again.final_ensemble.positions[i] - ref.final_ensemble.positions[i]));
  }
  rep.check("bohmian_seed_independence_max_deviation", self, "==", 0.0);

  std::vector<double> lx, ly;
  json cases = json::array();
  for (double e : ladder) {
    const CoupledRun run = run_coupled(init, cfg.params_for(e), cfg.potential, opt, start);
    if (run.halted) {
      rep.diagnostics.push_back(detail::eps_tag(e) + ": " + *run.halted);
      rep.require("completed[" + detail::eps_tag(e) + "]", false);
      continue;
    }
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t w = 0; w < start.size(); ++w) {
      if (ref.final_ensemble.frozen[w]) continue;
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const double d = g.minimal_image(a, run.final_ensemble.at(w, a) - ref.final_ensemble.at(w, a));
        acc += d * d;
      }
      ++used;
    }
    const double rms = std::sqrt(acc / static_cast<double>(std::max<std::size_t>(used, 1)));
    lx.push_back(std::log(e));
    ly.push_back(std::log(rms));
    cases.push_back({{"epsilon", e}, {"rms_deviation", rms}, {"walkers", used}});
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.check("rms_slope_deviation_from_half", std::abs(slope - 0.5), "<=", 0.1);
    rep.cases.push_back({{"fitted_slope", slope}});
  }
  rep.cases.push_back({{"ladder", cases}});

  // Hybrid class: Bohmian paths against the classical characteristics.
  if (bohm.dynamics_class() == DynamicsClass::hybrid) {
    const auto ch = detail::characteristics_for(cfg, g.dims());
    double worst = 0.0;
    const auto& rec = ref.record;
    for (std::size_t w = 0; w < rec.walkers; ++w) {
      if (ref.final_ensemble.frozen[w]) continue;
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const double x0 = rec.positions[0][w * rec.dims + a];
        const double p0 = detail::initial_momentum(cfg, a);
        const double amp = ch.amplitude(a, x0, p0);
        if (amp == 0.0) continue;
        for (std::size_t k = 0; k < rec.times.size(); ++k) {
          const double x = rec.positions[k][w * rec.dims + a];
          const double xc = ch.position(a, x0, p0, rec.times[k] - rec.times[0]);
          worst = std::max(worst, std::abs(g.minimal_image(a, x - xc)) / amp);
        }
      }
    }
    rep.check("classical_orbit_max_relative_deviation", worst, "<=", 5e-3);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// hybrid-classical

struct HybridOutcome {
  ExperimentReport report;
  std::vector<UncertaintyReport> uncertainty;
  double seconds = 0.0;
};

inline HybridOutcome hybrid_classical_experiment(const RunConfig& cfg) {
  HybridOutcome res{ExperimentReport{"hybrid-classical", cfg}, {}, 0.0};
  ExperimentReport& rep = res.report;
  const ModelParams params = cfg.params_for(cfg.params.epsilon);
  if (params.dynamics_class() != DynamicsClass::hybrid) {
    throw Error("hybrid-classical: requires params.class = hybrid");
  }
  const WaveState init = initial_state(cfg, params);
  const Grid& g = init.grid;
  const auto ch = detail::characteristics_for(cfg, g.dims());
  const long steps = detail::steps_for(cfg.run.duration, params.dt, "duration");
  const long cadence = detail::steps_for(cfg.run.cadence, params.dt, "cadence");

  // Oracle: push every grid node along its characteristic with weight rho0.
  const auto dphase0 = finite_difference_gradient(init.phase, g);
  auto oracle = [&](double t, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(g.dims(), 0.0);
    var.assign(g.dims(), 0.0);
    double w = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) w += init.rho[i];
    for (std::size_t a = 0; a < g.dims(); ++a) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = ch.position(a, g.position(i, a), dphase0[a][i], t);
        m1 += init.rho[i] * x;
        m2 += init.rho[i] * x * x;
      }
      mean[a] = m1 / w;
      var[a] = m2 / w - mean[a] * mean[a];
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  FieldEvolver ev(init, params, cfg.potential, params.dt);
  const double e0 = ensemble_hamiltonian(init, params, cfg.potential);
  std::vector<double> times, mean_err, var0;
  double amp = 0.0, worst_mean = 0.0, worst_var_rel = 0.0, worst_norm = 0.0, worst_energy = 0.0;
  json series = json::array();
  auto record = [&]() {
    const WaveState& s = ev.state();
    std::vector<double> om, ov;
    oracle(s.time - init.time, om, ov);
    res.uncertainty.push_back(uncertainty_report(s, params));
    const auto& ur = res.uncertainty.back();
    if (var0.empty()) var0 = ur.var_x;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      amp = std::max(amp, std::abs(om[a]));
      worst_mean = std::max(worst_mean, std::abs(ur.mean_x[a] - om[a]));
      worst_var_rel = std::max(worst_var_rel, std::abs(ur.var_x[a] - ov[a]) / ov[a]);
    }
    const double norm = total_probability(s);
    const double energy = ensemble_hamiltonian(s, params, cfg.potential);
    worst_norm = std::max(worst_norm, std::abs(norm - 1.0));
    worst_energy = std::max(worst_energy, detail::relative_drift(energy, e0));
    series.push_back({{"time", s.time},
                      {"mean_x", ur.mean_x},
                      {"oracle_mean_x", om},
                      {"var_x", ur.var_x},
                      {"oracle_var_x", ov},
                      {"heisenberg_product", ur.heisenberg_product},
                      {"norm", norm},
                      {"energy", energy}});
  };
  record();
  std::optional<std::string> halted;
  for (long n = 1; n <= steps; ++n) {
    try {
      ev.step();
    } catch (const CausticError& e) {
      halted = e.what();
      break;
    }
    if (n % cadence == 0) record();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  rep.require("completed_without_caustic", !halted.has_value());
  if (halted) rep.diagnostics.push_back("run truncated: " + *halted);
  rep.check("mean_x_max_error_relative_to_amplitude", worst_mean / std::max(amp, 1e-300), "<=", 5e-3);
  rep.check("var_x_max_relative_error", worst_var_rel, "<=", 5e-3);
  const bool translation = !ch.harmonic;
  if (translation) {
    double drift = 0.0;
    for (const auto& ur : res.uncertainty) {
      for (std::size_t a = 0; a < g.dims(); ++a) drift = std::max(drift, std::abs(ur.var_x[a] - var0[a]) / var0[a]);
    }
    rep.check("var_x_max_relative_drift", drift, "<", 1e-4);
  }
  rep.check("norm_max_error", worst_norm, "<", 1e-6);
  rep.check("energy_max_relative_drift", worst_energy, "<", 1e-3);
  detail::add_uncertainty_metrics(rep, "", res.uncertainty);
  rep.cases.push_back({{"series", series}});
  return res;
}

inline ExperimentReport cmd_hybrid_classical(const RunConfig& cfg) { return hybrid_classical_experiment(cfg).report; }

// ---------------------------------------------------------------------------
// maxent-check

struct MaxentCase {
  std::vector<double> grad_phi;
  std::vector<double> alpha_n;
  double alpha_prime = 0.0;
};

/// Fixed battery of ten configurations: one and two coordinates, one and two
/// particles, zero and non-zero drift.
inline std::vector<MaxentCase> maxent_battery() {
  return {{{1.0}, {4.0}, 2.0},
          {{0.0}, {4.0}, 0.0},
          {{-0.7}, {10.0}, 1.5},
          {{2.5}, {1.0}, 0.3},
          {{0.5}, {100.0}, 20.0},
          {{1.0, -2.0}, {10.0}, 5.0},
          {{0.3, 0.4}, {2.0}, 1.0},
          {{1.0, 0.5}, {4.0, 9.0}, 2.0},
          {{-1.0, 2.0}, {1.0, 3.0}, 0.5},
          {{0.0, 0.0}, {2.0, 5.0}, 0.0}};
}

struct MaxentOutcome {
  ExperimentReport report;
  double seconds = 0.0;  // wall time of the battery
};

inline MaxentOutcome maxent_experiment(const RunConfig& cfg) {
  MaxentOutcome res{ExperimentReport{"maxent-check", cfg}, 0.0};
  ExperimentReport& rep = res.report;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_kl = 0.0, worst_alpha = 0.0;
  int failures = 0;
  for (const auto& c : maxent_battery()) {
    const TransitionKernel k = analytic_kernel(c.grad_phi, c.alpha_n, c.alpha_prime);
    const KernelMoments target = kernel_moments(k, c.grad_phi);
    json cj{{"grad_phi", c.grad_phi}, {"alpha_n", c.alpha_n}, {"alpha_prime", c.alpha_prime}};
    try {
      const DiscreteKernel d = numeric_maxent(c.grad_phi, target.kappa_n, target.kappa_prime, LatticeSpec::covering(k));
      const double kl = kl_divergence(d.probabilities, discretize(k, d));
      double err = std::abs(d.alpha_prime - c.alpha_prime) / std::max(1.0, std::abs(c.alpha_prime));
      for (std::size_t n = 0; n < c.alpha_n.size(); ++n) {
        err = std::max(err, std::abs(d.alpha_n[n] - c.alpha_n[n]) / c.alpha_n[n]);
      }
      worst_kl = std::max(worst_kl, kl);
      worst_alpha = std::max(worst_alpha, err);
      cj["kl"] = kl;
      cj["multiplier_error"] = err;
      cj["recovered_alpha_n"] = d.alpha_n;
      cj["recovered_alpha_prime"] = d.alpha_prime;
      cj["iterations"] = d.iterations;
      if (c.alpha_prime == 0.0) {
        double m = 0.0;
        for (double s : k.mean_shift) m = std::max(m, std::abs(s));
        rep.check("zero_alpha_prime_mean_shift", m, "==", 0.0);
      }
    } catch (const Error& e) {
      ++failures;
      cj["error"] = e.what();
      rep.diagnostics.push_back(e.what());
    }
    rep.cases.push_back(cj);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.check("solver_failures", failures, "==", 0.0);
  rep.check("kl_max", worst_kl, "<", 1e-5);
  rep.check("multiplier_recovery_max_error", worst_alpha, "<", 1e-6);

  double worst_sym = 0.0;
  for (const auto& c : maxent_battery()) {
    const TransitionKernel base = analytic_kernel(c.grad_phi, c.alpha_n, c.alpha_prime);
    for (double scale : {0.1, 3.0, 100.0}) {
      std::vector<double> g2 = c.grad_phi;
      for (auto& x : g2) x *= scale;
      const TransitionKernel k2 = analytic_kernel(g2, c.alpha_n, c.alpha_prime / scale);
      for (std::size_t a = 0; a < g2.size(); ++a) {
        worst_sym = std::max({worst_sym, std::abs(k2.mean_shift[a] - base.mean_shift[a]),
                              std::abs(k2.variance[a] - base.variance[a])});
      }
    }
  }
  rep.check("rescaling_symmetry_max_deviation", worst_sym, "<=", 1e-12);
  return res;
}

inline ExperimentReport cmd_maxent_check(const RunConfig& cfg) { return maxent_experiment(cfg).report; }

// ---------------------------------------------------------------------------
// export-plots

/// Plot-ready CSVs from a directory written by cmd_run.
inline ExperimentReport cmd_export_plots(const std::filesystem::path& run_dir, const std::filesystem::path& out) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) throw Error("export-plots: " + run_dir.string() + " is not a directory");
  if (!fs::exists(run_dir / "manifest.json")) {
    throw Error("export-plots: no manifest.json in " + run_dir.string());
  }
  const json manifest = read_json(run_dir / "manifest.json");
  RunConfig cfg = parse_config(manifest.at("config").get<std::string>(), (run_dir / "manifest.json").string());
  ExperimentReport rep{"export-plots", cfg};
  fs::create_directories(out);
  const std::size_t dims = manifest.at("dims").get<std::size_t>();

  {
    auto os = detail::open_output(out / "rho_profiles.csv");
    os << (dims == 1 ? "time,x,rho\n" : "time,x0,x1,rho\n");
    for (const auto& snap : manifest.at("snapshots")) {
      const CsvTable t = read_csv(run_dir / snap.at("file").get<std::string>());
      const double time = snap.at("time").get<double>();
      const std::size_t ir = t.column("rho");
      for (const auto& row : t.rows) {
        os << time;
        for (std::size_t a = 0; a < dims; ++a) os << ',' << row[a];
        os << ',' << row[ir] << '\n';
      }
    }
  }

  const CsvTable series = read_csv(run_dir / manifest.at("files").at("series").get<std::string>());
  {
    auto os = detail::open_output(out / "ks_vs_time.csv");
    os << "time,ks,ks_critical\n";
    for (const auto& row : series.rows) {
      os << row[series.column("time")] << ',' << row[series.column("ks")] << ','
         << row[series.column("ks_critical")] << '\n';
    }
  }
  const json unc = read_json(run_dir / manifest.at("files").at("uncertainty").get<std::string>());
  {
    auto os = detail::open_output(out / "uncertainty_vs_time.csv");
    os << "time,coordinate,var_x,var_p_operator,heisenberg_product,bound\n";
    for (const auto& r : unc) {
      const double hbar = r.at("hbar").get<double>();
      for (std::size_t a = 0; a < dims; ++a) {
        os << r.at("time").get<double>() << ',' << a << ',' << r.at("var_x")[a].get<double>() << ','
           << r.at("var_p_operator")[a].get<double>() << ',' << r.at("heisenberg_product")[a].get<double>()
           << ',' << 0.25 * hbar * hbar << '\n';
      }
    }
  }

  const CsvTable traj = read_csv(run_dir / manifest.at("files").at("trajectories_csv").get<std::string>());
  {
    auto os = detail::open_output(out / "trajectory_fan.csv");
    os << "time,walker";
    for (std::size_t a = 0; a < dims; ++a) os << ",x" << a;
    os << '\n';
    for (const auto& row : traj.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << '\n';
    }
  }

  // Observations backed by the run data.
  const bool free_quantum = std::holds_alternative<FreePotential>(cfg.potential) &&
                            cfg.params.dynamics_class() == DynamicsClass::quantum &&
                            cfg.scenario.kind == ScenarioKind::gaussian;
  if (free_quantum) {
    bool monotone = true;
    double prev = -1.0;
    for (const auto& r : unc) {
      const double v = r.at("var_x")[0].get<double>();
      monotone = monotone && v >= prev;
      prev = v;
    }
    rep.require("var_x_monotone_growth", monotone);
  }
  const double eps = manifest.at("params").at("epsilon").get<double>();
  if (eps == 0.0 && dims == 1) {
    // Bohmian paths in 1-D cannot cross: the walker order is preserved.
    const std::size_t walkers = manifest.at("recorded_walkers").get<std::size_t>();
    const auto bin = read_trajectory_binary(run_dir / manifest.at("files").at("trajectories_bin").get<std::string>());
    std::vector<std::size_t> order(walkers);
    for (std::size_t i = 0; i < walkers; ++i) order[i] = i;
    const auto& p0 = bin.record.positions.front();
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p0[a] < p0[b]; });
    std::size_t crossings = 0;
    for (const auto& pk : bin.record.positions) {
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (pk[order[i]] > pk[order[i + 1]]) ++crossings;
      }
    }
    rep.check("trajectory_crossings", static_cast<double>(crossings), "==", 0.0);
  }
  rep.cases.push_back({{"files", {"rho_profiles.csv", "ks_vs_time.csv", "uncertainty_vs_time.csv", "trajectory_fan.csv"}}});
  return rep;
}

}  // namespace edlab

#endif  // EDLAB_EXPERIMENTS_HPP_
