// Prints a fan of epsilon = 0 (Bohmian) trajectories through a two-packet
// interference pattern, as "t x_0 x_1 ..." rows.

#include <cstdio>

#include "edlab/ensemble.hpp"

int main() {
  using namespace edlab;
  const Grid g = build_grid(1, 1024, 40.0);
  const ModelParams p = ModelParams::quantum(1.0, 1.0, 0.0, 1e-3);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::two_gaussian_superposition;
  spec.sigma0 = 0.5;
  spec.separation = 2.0;
  const WaveState init = init_scenario(spec, g, p);

  CoupledOptions opt;
  opt.duration = 2.0;
  opt.dt = p.dt;
  opt.cadence = 0.05;
  opt.walkers = 40;
  opt.keep_snapshots = false;
  const CoupledRun run = run_coupled(init, p, FreePotential{}, opt);

  for (std::size_t k = 0; k < run.record.times.size(); ++k) {
    std::printf("%.3f", run.record.times[k]);
    for (double x : run.record.positions[k]) std::printf(" %.5f", x);
    std::printf("\n");
  }
}
