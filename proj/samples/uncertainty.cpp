// Uncertainty relations along a free evolution: the Heisenberg product grows
// from its minimum hbar^2/4 while the Schrodinger form stays saturated.

#include <cstdio>

#include "edlab/observables.hpp"

int main() {
  using namespace edlab;
  const Grid g = build_grid(1, 1024, 40.0);
  const ModelParams p = ModelParams::quantum(1.0, 1.0, 1.0, 1e-3);
  ScenarioSpec spec;
  spec.sigma0 = 1.0;
  spec.k0 = 0.5;
  FieldEvolver ev(init_scenario(spec, g, p), p, FreePotential{}, p.dt);

  std::printf("%6s %12s %12s %12s %12s\n", "t", "Var(x)", "Var(p^)", "Cov(p^,x)", "slack");
  for (int k = 0; k <= 4; ++k) {
    const UncertaintyReport r = uncertainty_report(ev.state(), p);
    std::printf("%6.2f %12.8f %12.8f %12.8f %12.3e  %s\n", r.time, r.var_x[0], r.var_p_operator[0],
                r.cov_p_x[0][0], r.schrodinger_slack[0], r.all_pass() ? "ok" : "VIOLATED");
    for (int n = 0; n < 500; ++n) ev.step();
  }
}
