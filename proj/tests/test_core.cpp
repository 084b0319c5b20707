#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "edlab/core.hpp"

using namespace edlab;

namespace {

double max_abs_diff(const RealField& a, const RealField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Grid, OneDimensionalSpacing) {
  const Grid g = build_grid(1, 1024, 40.0);
  EXPECT_EQ(g.size(), 1024u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.0390625);
  EXPECT_DOUBLE_EQ(g.coordinate(0, 0), -20.0);
}

TEST(Grid, TwoDimensionalSpacing) {
  const Grid g = build_grid(2, 256, 20.0);
  EXPECT_EQ(g.size(), 256u * 256u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.078125);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.078125);
  // Row-major: coordinate 1 varies fastest.
  EXPECT_EQ(g.index_along(257, 0), 1);
  EXPECT_EQ(g.index_along(257, 1), 1);
}

TEST(Grid, RejectsBadInput) {
  EXPECT_THROW(build_grid(1, 4, 10.0), Error);
  EXPECT_THROW(build_grid(1, 64, 0.0), Error);
  EXPECT_THROW(build_grid(1, 64, -1.0), Error);
  EXPECT_THROW(build_grid(3, 64, 1.0), Error);
}

TEST(Grid, WavenumbersInFftOrder) {
  const Grid g = build_grid(1, 8, 2.0 * std::numbers::pi);
  const std::vector<double> expected{0, 1, 2, 3, 4, -3, -2, -1};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(g.wavenumbers(0)[i], expected[i]);
}

TEST(Grid, PeriodicWrapAndMinimalImage) {
  const Grid g = build_grid(1, 64, 10.0);
  EXPECT_NEAR(g.wrap(0, 6.0), -4.0, 1e-12);
  EXPECT_NEAR(g.wrap(0, -5.5), 4.5, 1e-12);
  EXPECT_NEAR(g.minimal_image(0, 9.0), -1.0, 1e-12);
  EXPECT_NEAR(g.minimal_image(0, -6.0), 4.0, 1e-12);
}

TEST(ModelParams, Invariants) {
  EXPECT_NO_THROW(ModelParams::quantum(1.0, 1.0, 0.0));
  EXPECT_DOUBLE_EQ(ModelParams::quantum(2.0).xi, 0.5);
  EXPECT_EQ(ModelParams::hybrid().dynamics_class(), DynamicsClass::hybrid);
  EXPECT_THROW(ModelParams::quantum(1.0, -1.0), Error);
  EXPECT_THROW(ModelParams::quantum(0.0), Error);
  EXPECT_THROW(ModelParams::quantum(1.0, 1.0, -0.1), Error);
  EXPECT_THROW(ModelParams::quantum(1.0, 1.0, 1.0, 0.0), Error);
  ModelParams p = ModelParams::quantum();
  p.xi = 0.2;
  EXPECT_THROW(p.validate(), Error);
  p.xi = 0.0;
  EXPECT_NO_THROW(p.validate());
  p.masses = {1.0, 2.0};
  EXPECT_DOUBLE_EQ(p.mass(1), 2.0);
}

TEST(SpectralDerivative, SineIsExact) {
  const double l = 40.0;
  const Grid g = build_grid(1, 1024, l);
  const double k = 2.0 * std::numbers::pi / l;
  RealField f(g.size()), expect(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0);
    f[i] = std::sin(k * x);
    expect[i] = k * std::cos(k * x);
  }
  EXPECT_LT(max_abs_diff(spectral_derivative(f, g, 0), expect), 1e-12);
}

TEST(SpectralDerivative, ConstantGivesZero) {
  const Grid g = build_grid(1, 256, 10.0);
  const RealField f(g.size(), 3.7);
  for (double d : spectral_derivative(f, g, 0)) EXPECT_LT(std::abs(d), 1e-13);
}

TEST(SpectralDerivative, GaussianMatchesAnalytic) {
  const Grid g = build_grid(1, 1024, 40.0);
  RealField f(g.size()), expect(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0);
    f[i] = std::exp(-0.5 * x * x);
    expect[i] = -x * f[i];
  }
  EXPECT_LT(max_abs_diff(spectral_derivative(f, g, 0), expect), 1e-10);
}

TEST(SpectralDerivative, ProductOfHarmonicsIsExact) {
  const double l = 12.0;
  const Grid g = build_grid(2, 64, l);
  const double k = 2.0 * std::numbers::pi / l;
  RealField f(g.size()), dx(g.size()), dy(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0), y = g.position(i, 1);
    // sin(kx) cos(2kx) sin(3ky) cos(ky)
    const double a = std::sin(k * x), b = std::cos(2 * k * x), c = std::sin(3 * k * y), d = std::cos(k * y);
    f[i] = a * b * c * d;
    dx[i] = (k * std::cos(k * x) * b - 2 * k * a * std::sin(2 * k * x)) * c * d;
    dy[i] = a * b * (3 * k * std::cos(3 * k * y) * d - k * c * std::sin(k * y));
  }
  const auto grad = gradient(f, g);
  EXPECT_LT(max_abs_diff(grad[0], dx), 1e-10);
  EXPECT_LT(max_abs_diff(grad[1], dy), 1e-10);
}

TEST(FiniteDifference, SixthOrderCentralWeights) {
  const std::vector<double> xs{-3, -2, -1, 0, 1, 2, 3};
  const auto w = fornberg_first_derivative(0.0, xs);
  const std::vector<double> expected{-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
  ASSERT_EQ(w.size(), expected.size());
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], expected[i], 1e-14);
}

TEST(FiniteDifference, ConvergesAtSixthOrder) {
  const double l = 2.0 * std::numbers::pi;
  auto error = [&](int n) {
    const Grid g = build_grid(1, n, l);
    RealField f(g.size()), expect(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      f[i] = std::sin(g.position(i, 0));
      expect[i] = std::cos(g.position(i, 0));
    }
    return max_abs_diff(finite_difference_derivative(f, g, 0), expect);
  };
  const double order = std::log2(error(32) / error(64));
  EXPECT_NEAR(order, 6.0, 0.2);
}

TEST(Quadrature, IntegratesGaussian) {
  const Grid g = build_grid(1, 512, 30.0);
  RealField f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0);
    f[i] = std::exp(-0.5 * x * x);
  }
  EXPECT_NEAR(integrate(f, g), std::sqrt(2.0 * std::numbers::pi), 1e-12);
}

TEST(Potential, HarmonicValues) {
  const Grid g = build_grid(2, 16, 8.0);
  ModelParams p = ModelParams::quantum();
  p.masses = {1.0, 2.0};
  const RealField v = evaluate_potential(HarmonicPotential{{1.0, 3.0}}, g, p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0), y = g.position(i, 1);
    EXPECT_NEAR(v[i], 0.5 * x * x + 0.5 * 2.0 * 9.0 * y * y, 1e-12);
  }
}

TEST(Potential, Errors) {
  const Grid g1 = build_grid(1, 16, 8.0);
  const ModelParams p = ModelParams::quantum();
  EXPECT_THROW(evaluate_potential(DoubleSlitPotential{}, g1, p), Error);
  EXPECT_THROW(evaluate_potential(HarmonicPotential{}, g1, p), Error);
  EXPECT_THROW(evaluate_potential(TabulatedPotential{RealField(3, 0.0)}, g1, p), Error);
  EXPECT_THROW(evaluate_potential(TabulatedPotential{RealField(16, NAN)}, g1, p), Error);
  EXPECT_NO_THROW(evaluate_potential(DoubleSlitPotential{}, build_grid(2, 16, 8.0), p));
  EXPECT_EQ(potential_name(BarrierPotential{}), "barrier");
}

TEST(Scenario, GaussianIsNormalizedWithFlatPhase) {
  const Grid g = build_grid(1, 1024, 40.0);
  const ModelParams p = ModelParams::quantum();
  const WaveState s = init_scenario(ScenarioSpec{}, g, p);
  EXPECT_NEAR(total_probability(s), 1.0, 1e-12);
  for (double ph : s.phase) EXPECT_EQ(ph, 0.0);
  ASSERT_TRUE(s.psi.has_value());
  // Mean and variance by quadrature.
  double m = 0.0, v = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) m += s.rho[i] * g.position(i, 0);
  m *= g.cell_volume();
  for (std::size_t i = 0; i < g.size(); ++i) v += s.rho[i] * std::pow(g.position(i, 0) - m, 2);
  EXPECT_NEAR(m, 0.0, 1e-12);
  EXPECT_NEAR(v * g.cell_volume(), 1.0, 1e-12);
}

TEST(Scenario, HybridStateHasNoPsi) {
  const Grid g = build_grid(1, 256, 20.0);
  const WaveState s = init_scenario(ScenarioSpec{}, g, ModelParams::hybrid());
  EXPECT_FALSE(s.psi.has_value());
  EXPECT_NEAR(total_probability(s), 1.0, 1e-12);
}

TEST(Scenario, PlanePhaseGaussian) {
  const Grid g = build_grid(1, 1024, 40.0);
  const double hbar = 0.7;
  ScenarioSpec spec;
  spec.k0 = 2.0;
  const WaveState s = init_scenario(spec, g, ModelParams::quantum(hbar));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(s.phase[i], hbar * 2.0 * g.position(i, 0));
}

TEST(Scenario, CorrelatedPairCovariance) {
  const Grid g = build_grid(2, 256, 20.0);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::correlated_pair;
  spec.correlation = 0.5;
  spec.sigma0 = 1.0;
  const WaveState s = init_scenario(spec, g, ModelParams::quantum());
  EXPECT_NEAR(total_probability(s), 1.0, 1e-12);
  double cxy = 0.0, cxx = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    cxy += s.rho[i] * g.position(i, 0) * g.position(i, 1);
    cxx += s.rho[i] * g.position(i, 0) * g.position(i, 0);
  }
  EXPECT_NEAR(cxy * g.cell_volume(), 0.5, 1e-10);
  EXPECT_NEAR(cxx * g.cell_volume(), 1.0, 1e-10);
}

TEST(Scenario, CorrelatedPairNeedsTwoDimensions) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::correlated_pair;
  EXPECT_THROW(init_scenario(spec, build_grid(1, 256, 20.0), ModelParams::quantum()), Error);
  spec.correlation = 1.0;
  EXPECT_THROW(init_scenario(spec, build_grid(2, 64, 20.0), ModelParams::quantum()), Error);
}

TEST(Scenario, SuperpositionIsSymmetric) {
  const Grid g = build_grid(1, 1024, 40.0);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::two_gaussian_superposition;
  spec.separation = 2.0;
  spec.sigma0 = 0.5;
  const WaveState s = init_scenario(spec, g, ModelParams::quantum());
  EXPECT_NEAR(total_probability(s), 1.0, 1e-12);
  // x -> -x maps node i to node n - i.
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(s.rho[i], s.rho[g.size() - i], 1e-14);
}

TEST(Scenario, CoherentWidthFromOmega) {
  ScenarioSpec spec;
  spec.kind = ScenarioKind::coherent;
  spec.omega = 2.0;
  EXPECT_DOUBLE_EQ(scenario_width(spec, ModelParams::quantum()), 0.5);
}

TEST(Scenario, UnderResolvedIsRejected) {
  ScenarioSpec spec;
  spec.sigma0 = 0.1;
  EXPECT_THROW(init_scenario(spec, build_grid(1, 256, 40.0), ModelParams::quantum()), Error);
}

TEST(Scenario, ReinitializationIsBitIdentical) {
  const Grid g = build_grid(1, 512, 30.0);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::two_gaussian_superposition;
  spec.sigma0 = 0.5;
  const WaveState a = init_scenario(spec, g, ModelParams::quantum());
  const WaveState b = init_scenario(spec, g, ModelParams::quantum());
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_EQ(*a.psi, *b.psi);
}

TEST(Phase, UnwrapRecoversLinearPhase) {
  const Grid g = build_grid(1, 1024, 40.0);
  const double hbar = 1.0, k0 = 3.0;
  ComplexField psi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.position(i, 0);
    psi[i] = std::polar(std::exp(-0.25 * x * x), k0 * x);
  }
  const WaveState s = state_from_psi(g, psi, hbar, 0.0);
  const std::size_t c = argmax(s.rho);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (s.rho[i] < 1e-12 * s.rho[c]) continue;
    EXPECT_NEAR(s.phase[i] - s.phase[c], k0 * (g.position(i, 0) - g.position(c, 0)), 1e-9);
  }
  // k0 L / 2 pi is not an integer, so the loop around the box picks up the
  // nearest whole number of turns.
  EXPECT_EQ(phase_winding(psi, g), std::lround(k0 * 40.0 / (2.0 * std::numbers::pi)));
}

TEST(Phase, AssembleRoundTrip) {
  const Grid g = build_grid(1, 256, 20.0);
  ScenarioSpec spec;
  spec.k0 = 1.5;
  const WaveState s = init_scenario(spec, g, ModelParams::hybrid(0.5));
  const ComplexField psi = assemble_psi(s, 0.5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(std::norm(psi[i]), s.rho[i], 1e-15);
  }
}

TEST(Phase, WindingOfPlaneWave) {
  const double l = 10.0;
  const Grid g = build_grid(1, 128, l);
  ComplexField psi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    psi[i] = std::polar(1.0, 2.0 * std::numbers::pi * 3.0 * g.position(i, 0) / l);
  }
  EXPECT_EQ(std::abs(phase_winding(psi, g)), 3);
}
