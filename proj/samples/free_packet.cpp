// Spreading of a free Gaussian packet: the split-step solution against
// sigma(t)^2 = sigma0^2 (1 + (hbar t / 2 m sigma0^2)^2).

#include <cmath>
#include <cstdio>

#include "edlab/fields.hpp"

int main() {
  using namespace edlab;
  const Grid g = build_grid(1, 1024, 40.0);
  const ModelParams p = ModelParams::quantum(1.0, 1.0, 0.0, 1e-3);
  ScenarioSpec spec;
  spec.sigma0 = 1.0;
  FieldEvolver ev(init_scenario(spec, g, p), p, FreePotential{}, p.dt);

  std::printf("%6s %14s %14s\n", "t", "Var(x)", "analytic");
  for (int k = 0; k <= 8; ++k) {
    const WaveState& s = ev.state();
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.position(i, 0);
      m1 += s.rho[i] * x;
      m2 += s.rho[i] * x * x;
    }
    m1 *= g.spacing(0);
    m2 *= g.spacing(0);
    const double t = s.time;
    std::printf("%6.2f %14.10f %14.10f\n", t, m2 - m1 * m1, 1.0 + 0.25 * t * t);
    for (int n = 0; n < 250; ++n) ev.step();
  }
}
