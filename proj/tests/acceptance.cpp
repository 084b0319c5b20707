// Acceptance checks. `acceptance --criterion N` runs one criterion, no
// argument runs all nine. One PASS/FAIL line per criterion; exit code 1 if
// any fails.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "edlab/experiments.hpp"

using namespace edlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

RunConfig config(const std::string& name) { return load_config(std::string(EDLAB_CONFIG_DIR) + "/" + name); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

void print_failures(const ExperimentReport& rep) {
  for (const auto& m : rep.metrics) {
    if (!m.pass) std::cout << "    " << rep.experiment << ": " << m.name << " = " << m.value << " (" << m.op << ' ' << m.bound << ")\n";
  }
  for (const auto& d : rep.diagnostics) std::cout << "    note: " << d << '\n';
}

double metric(const ExperimentReport& rep, const std::string& name) {
  const auto ms = rep.matching(name);
  if (ms.empty()) throw Error("no metric " + name);
  return ms.front().value;
}

double fitted_slope(const ExperimentReport& rep) {
  for (const auto& c : rep.cases) {
    if (c.contains("fitted_slope")) return c["fitted_slope"].get<double>();
  }
  throw Error("no fitted slope in " + rep.experiment);
}

double moment(const WaveState& s, int power, double about = 0.0) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.grid.size(); ++i) acc += s.rho[i] * std::pow(s.grid.position(i, 0) - about, power);
  return acc * s.grid.cell_volume();
}

// 1. Numeric maximum entropy against the Gaussian kernel.
Outcome criterion_1() {
  Outcome o;
  const MaxentOutcome res = maxent_experiment(config("maxent.ini"));
  const double kl = metric(res.report, "kl_max"), alpha = metric(res.report, "multiplier_recovery_max_error");
  o.need(metric(res.report, "solver_failures") == 0.0, "solver failures");
  o.need(kl < 1e-5, "KL < 1e-5");
  o.need(alpha < 1e-6, "multiplier error < 1e-6");
  o.need(res.seconds < 10.0, "runtime < 10 s");
  o.detail << "cases=" << res.report.cases.size() << " max KL=" << kl << " max multiplier error=" << alpha
           << " runtime=" << res.seconds << "s";
  if (!o.pass) print_failures(res.report);
  return o;
}

// 2. (phi, alpha') -> (C phi, alpha'/C) leaves the kernel unchanged.
Outcome criterion_2() {
  Outcome o;
  double worst = 0.0;
  for (const auto& c : maxent_battery()) {
    const auto base = analytic_kernel(c.grad_phi, c.alpha_n, c.alpha_prime);
    for (double scale : {0.1, 3.0, 100.0}) {
      std::vector<double> g = c.grad_phi;
      for (auto& x : g) x *= scale;
      const auto k = analytic_kernel(g, c.alpha_n, c.alpha_prime / scale);
      for (std::size_t a = 0; a < g.size(); ++a) {
        worst = std::max({worst, std::abs(k.mean_shift[a] - base.mean_shift[a]), std::abs(k.variance[a] - base.variance[a])});
      }
      // The numeric kernel for the rescaled constraints must agree as well.
      if (scale == 3.0 && c.alpha_prime != 0.0) {
        const auto m = kernel_moments(k, g);
        const auto d = numeric_maxent(g, m.kappa_n, m.kappa_prime, LatticeSpec::covering(k));
        const auto mb = kernel_moments(base, c.grad_phi);
        const auto db = numeric_maxent(c.grad_phi, mb.kappa_n, mb.kappa_prime, LatticeSpec::covering(base));
        o.need(kl_divergence(d.probabilities, discretize(base, d)) < 1e-5 &&
                   kl_divergence(db.probabilities, discretize(k, db)) < 1e-5,
               "numeric kernels agree");
      }
    }
  }
  o.need(worst <= 1e-12, "deviation <= 1e-12");
  o.detail << "C in {0.1, 3, 100} over " << maxent_battery().size() << " kernels, max deviation=" << worst;
  return o;
}

// 3. Norm and ensemble-Hamiltonian conservation.
Outcome criterion_3() {
  Outcome o;
  struct Case {
    const char* file;
    long steps;  // 0: run to the configured duration
    double norm_tol, energy_tol;
  };
  for (const Case& c : {Case{"free_packet.ini", 10000, 1e-9, 1e-6}, Case{"harmonic_coherent.ini", 10000, 1e-9, 1e-6},
                        Case{"hybrid_harmonic.ini", 0, 1e-6, 1e-3}, Case{"hybrid_free.ini", 0, 1e-6, 1e-3}}) {
    const RunConfig cfg = config(c.file);
    const ModelParams p = cfg.params;
    const auto t0 = Clock::now();
    FieldEvolver ev(initial_state(cfg, p), p, cfg.potential, p.dt);
    const double e0 = ensemble_hamiltonian(ev.state(), p, cfg.potential);
    const long steps = c.steps > 0 ? c.steps : std::lround(cfg.run.duration / p.dt);
    double norm_err = 0.0, drift = 0.0;
    for (long n = 1; n <= steps; ++n) {
      ev.step();
      if (n % 100 == 0 || n == steps) {
        const WaveState& s = ev.state();
        norm_err = std::max(norm_err, std::abs(total_probability(s) - 1.0));
        drift = std::max(drift, std::abs(ensemble_hamiltonian(s, p, cfg.potential) - e0) / std::abs(e0));
      }
    }
    const double secs = seconds_since(t0);
    o.need(norm_err < c.norm_tol, std::string(c.file) + " norm");
    o.need(drift < c.energy_tol, std::string(c.file) + " energy");
    o.need(secs < 60.0, std::string(c.file) + " runtime");
    o.detail << ' ' << c.file << ": steps=" << steps << " |norm-1|=" << norm_err << " dH/H=" << drift << " t=" << secs
             << "s;";
  }
  return o;
}

// 4. Free spreading and coherent-state oscillation against analytic solutions.
Outcome criterion_4() {
  Outcome o;
  {
    RunConfig cfg = config("free_packet.ini");
    FieldEvolver ev(initial_state(cfg, cfg.params), cfg.params, cfg.potential, cfg.params.dt);
    for (int n = 0; n < 2000; ++n) ev.step();
    const WaveState& s = ev.state();
    const double sigma2 = cfg.scenario.sigma0 * cfg.scenario.sigma0;
    const double t = s.time, hbar = cfg.params.hbar, m = cfg.params.mass(0);
    const double expected = sigma2 * (1.0 + std::pow(hbar * t / (2.0 * m * sigma2), 2));
    const double mean = moment(s, 1);
    const double rel = std::abs(moment(s, 2, mean) - expected) / expected;
    o.need(rel < 1e-3, "free Var(x)(2)");
    o.detail << "free Var(x)(t=" << t << ") rel err=" << rel << ";";
  }
  {
    RunConfig cfg = config("harmonic_coherent.ini");
    const double w = cfg.scenario.omega, x0 = cfg.scenario.x0;
    const double dt = 2.0 * std::numbers::pi / w / 10000.0;
    FieldEvolver ev(initial_state(cfg, cfg.params), cfg.params, cfg.potential, dt);
    double worst = 0.0;
    for (int n = 1; n <= 10000; ++n) {
      ev.step();
      if (n % 100 == 0) worst = std::max(worst, std::abs(moment(ev.state(), 1) - x0 * std::cos(w * n * dt)));
    }
    o.need(worst / std::abs(x0) < 1e-3, "coherent <x>(t)");
    o.detail << " coherent max |<x>-x0 cos wt|/x0 over one period=" << worst / std::abs(x0);
  }
  return o;
}

// 5. Walker marginals track rho for every epsilon. The time limit applies to the
// three quantum scenarios; the hybrid run is checked for KS only.
Outcome criterion_5() {
  Outcome o;
  for (const char* file : {"free_packet.ini", "harmonic_coherent.ini", "interference.ini", "hybrid_harmonic.ini"}) {
    const RunConfig cfg = config(file);
    const auto t0 = Clock::now();
    const UniversalityOutcome res = universality_experiment(cfg);
    const double secs = seconds_since(t0);
    double ks = 0.0;
    for (const auto& m : res.report.matching("ks_max")) ks = std::max(ks, m.value);
    o.need(res.report.pass(), std::string(file) + " report");
    if (cfg.params.dynamics_class() == DynamicsClass::quantum) o.need(secs < 300.0, std::string(file) + " runtime");
    o.detail << ' ' << file << ": max KS=" << ks << " (crit " << ks_critical_1pct(cfg.run.walkers) << ")";
    if (!res.report.matching("fringe_minimum_offset").empty()) {
      o.detail << " fringe offset=" << metric(res.report, "fringe_minimum_offset");
    }
    o.detail << " t=" << secs << "s;";
    if (!res.report.pass()) print_failures(res.report);
  }
  return o;
}

// 6. Bohmian limit: RMS deviation ~ eps^(1/2), seed-independent eps = 0 paths.
Outcome criterion_6() {
  Outcome o;
  const RunConfig cfg = config("bohmian_convergence.ini");
  const ExperimentReport rep = cmd_bohmian_convergence(cfg);
  o.need(rep.pass(), "bohmian-convergence report");
  // Determinism: a second run reproduces the report exactly.
  o.need(cmd_bohmian_convergence(cfg).to_json().dump() == rep.to_json().dump(), "repeat run identical");
  o.detail << "slope=" << fitted_slope(rep)
           << " eps=0 reseeded max deviation=" << metric(rep, "bohmian_seed_independence_max_deviation");
  if (!rep.pass()) print_failures(rep);
  return o;
}

// 7. Hybrid class against classical characteristics.
Outcome criterion_7() {
  Outcome o;
  for (const char* file : {"hybrid_harmonic.ini", "hybrid_free.ini"}) {
    const HybridOutcome res = hybrid_classical_experiment(config(file));
    o.need(res.report.pass(), file);
    o.detail << ' ' << file << ": mean err/amp=" << metric(res.report, "mean_x_max_error_relative_to_amplitude")
             << " var rel err=" << metric(res.report, "var_x_max_relative_error");
    if (!res.report.matching("var_x_drift").empty()) o.detail << " var drift=" << metric(res.report, "var_x_drift");
    o.detail << ';';
    if (!res.report.pass()) print_failures(res.report);
  }
  const RunConfig hb = config("hybrid_bohmian.ini");
  const ExperimentReport bohm = cmd_bohmian_convergence(hb);
  const double orbit = metric(bohm, "classical_orbit_max_relative_deviation");
  o.need(orbit <= 5e-3, "Bohmian-limit hybrid paths on classical orbits");
  // The slope is reported, not required: for a packet focusing towards the
  // caustic the deviation saturates at
  //   <dx^2> = 2 sigma0^2 cos^2 wT (1 - exp(-eps tan(wT) / (2 m w sigma0^2)))
  // and the fitted exponent is set by that curve.
  std::vector<double> lx, ly;
  const double w = std::get<HarmonicPotential>(hb.potential).omega.front(), s0 = hb.scenario.sigma0;
  const double T = hb.run.duration, m = hb.params.mass(0);
  for (double e : hb.epsilon_list()) {
    lx.push_back(std::log(e));
    ly.push_back(0.5 * std::log(2.0 * s0 * s0 * std::pow(std::cos(w * T), 2) *
                                (1.0 - std::exp(-e * std::tan(w * T) / (2.0 * m * w * s0 * s0)))));
  }
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  o.detail << " hybrid_bohmian.ini: classical orbit dev=" << orbit << " slope=" << fitted_slope(bohm)
           << " (closed form " << (n * sxy - sx * sy) / (n * sxx - sx * sx) << ")";
  return o;
}

// A hybrid scenario does not spread, so its box can be far too small for the
// same initial state in the quantum class. Grow the box (at fixed spacing)
// until the largest width reached before the end of the run fits.
void widen_for_spreading(RunConfig& cfg) {
  if (cfg.grid.dims != 1 || cfg.scenario.kind != ScenarioKind::gaussian) return;
  const double s0 = cfg.scenario.sigma0, hbar = cfg.params.hbar, m = cfg.params.mass(0), T = cfg.run.duration;
  double widest = s0;
  for (int k = 0; k <= 1000; ++k) {
    const double t = T * k / 1000.0;
    double var = s0 * s0 * (1.0 + std::pow(hbar * t / (2.0 * m * s0 * s0), 2));
    if (const auto* h = std::get_if<HarmonicPotential>(&cfg.potential)) {
      const double w = h->omega.front(), c = std::cos(w * t), sn = std::sin(w * t);
      var = s0 * s0 * c * c + std::pow(hbar / (2.0 * m * w * s0), 2) * sn * sn;
    }
    widest = std::max(widest, std::sqrt(var));
  }
  const double need = 2.0 * (std::abs(cfg.scenario.x0) + hbar * std::abs(cfg.scenario.k0) * T / m + 10.0 * widest);
  while (cfg.grid.extent < need) {
    cfg.grid.extent *= 2.0;
    cfg.grid.points *= 2;
  }
}

// 8. Uncertainty relations on every recorded state, both classes, all epsilon.
Outcome criterion_8() {
  Outcome o;
  std::size_t states = 0, reports = 0;
  double worst_identity = 0.0, worst_cov = 0.0, min_slack = 1e300, min_ratio = 1e300;
  auto examine = [&](RunConfig cfg, const std::string& label) {
    const ModelParams base = cfg.params_for(cfg.epsilon_list().front());
    FieldEvolver ev(initial_state(cfg, base), base, cfg.potential, base.dt);
    const long steps = std::lround(cfg.run.duration / base.dt);
    const long cadence = std::lround(cfg.run.cadence / base.dt);
    for (long n = 0; n <= steps; ++n) {
      if (n > 0) {
        try {
          ev.step();
        } catch (const CausticError&) {
          break;
        }
      }
      if (n % cadence != 0) continue;
      const WaveState& s = ev.state();
      std::string first;
      for (double eps : cfg.epsilon_list()) {
        const UncertaintyReport r = uncertainty_report(s, cfg.params_for(eps));
        const std::string dump = to_json(r).dump();
        if (first.empty()) first = dump;
        o.need(dump == first, label + " report differs across epsilon");
        o.need(r.all_pass(), label + " t=" + std::to_string(s.time));
        const double quarter = 0.25 * r.hbar * r.hbar;
        for (std::size_t a = 0; a < r.var_x.size(); ++a) {
          worst_identity = std::max(worst_identity, r.variance_identity_error[a]);
          worst_cov = std::max(worst_cov, std::abs(r.cov_dlnrho_x[a][a] + 1.0));
          min_slack = std::min(min_slack, r.schrodinger_slack[a] / quarter);
          min_ratio = std::min(min_ratio, r.heisenberg_product[a] / quarter);
        }
        ++reports;
      }
      ++states;
    }
  };
  for (const char* file : {"free_packet.ini", "harmonic_coherent.ini", "interference.ini", "correlated_pair.ini",
                           "hybrid_harmonic.ini", "hybrid_free.ini"}) {
    RunConfig cfg = config(file);
    examine(cfg, file);
    // The same scenario in the other class.
    const bool quantum = cfg.params.dynamics_class() == DynamicsClass::quantum;
    cfg.params.xi = quantum ? 0.0 : cfg.params.hbar * cfg.params.hbar / 8.0;
    if (!quantum) widen_for_spreading(cfg);
    examine(cfg, std::string(file) + " (other class)");
  }
  o.need(worst_identity <= 1e-6, "variance relation");
  o.need(worst_cov <= 1e-9, "Cov(d ln rho, x) = -1");
  o.need(min_slack >= -1e-9, "Schrodinger slack");
  o.need(min_ratio >= 1.0 - 1e-9, "Heisenberg product");

  const RunConfig gcfg = config("free_packet.ini");
  const UncertaintyReport minimal = uncertainty_report(initial_state(gcfg, gcfg.params), gcfg.params);
  const double saturation = std::abs(minimal.heisenberg_product[0] / (0.25 * gcfg.params.hbar * gcfg.params.hbar) - 1.0);
  o.need(saturation <= 1e-9, "minimal Gaussian saturation");
  o.detail << "states=" << states << " reports=" << reports << " max variance-relation err=" << worst_identity
           << " max |Cov+1|=" << worst_cov << " min slack/(hbar^2/4)=" << min_slack
           << " min product/(hbar^2/4)=" << min_ratio << " saturation err=" << saturation;
  return o;
}

// 9. Quadratic variation (eps/m) tau over two decades of tau.
Outcome criterion_9() {
  Outcome o;
  RunConfig cfg = config("free_packet.ini");
  const ModelParams p = cfg.params_for(1.0);
  const WaveState init = initial_state(cfg, p);
  CoupledOptions opt = detail::coupled_options(cfg);
  opt.walkers = 10000;
  opt.recorded_walkers = opt.walkers;
  opt.cadence = p.dt;
  opt.keep_snapshots = false;
  const CoupledRun run = run_coupled(init, p, cfg.potential, opt);
  for (double tau : {0.01, 0.1, 1.0}) {
    const auto count = static_cast<std::size_t>(std::lround(tau / p.dt));
    const double qv = quadratic_variation(run.record, init.grid, 0, count);
    const double expected = p.epsilon / p.mass(0) * tau;
    const double rel = std::abs(qv - expected) / expected;
    o.need(rel < 0.02, "tau=" + std::to_string(tau));
    o.detail << " tau=" << tau << ": QV/(eps tau/m)=" << qv / expected << ';';
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edlab acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                                       criterion_6, criterion_7, criterion_8, criterion_9};
  bool all = true;
  for (int i = 1; i <= 9; ++i) {
    if (only != 0 && i != only) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "error: " << e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i << ": " << o.detail.str() << " ["
              << seconds_since(t0) << " s]" << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
