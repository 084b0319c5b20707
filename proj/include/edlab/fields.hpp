// Macroscopic (rho, Phi) dynamics: the Schrodinger flow of the quantum class
// (xi = hbar^2/8), the classical Hamilton-Jacobi + continuity flow of the
// hybrid class (xi = 0), the conserved ensemble Hamiltonian and the current,
// osmotic and drift velocity fields.

#ifndef EDLAB_FIELDS_HPP_
#define EDLAB_FIELDS_HPP_

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "edlab/core.hpp"

namespace edlab {

/// Raised by the hybrid stepper when characteristics are about to cross.
class CausticError : public Error {
 public:
  CausticError(double time, double position, double rate)
      : Error(describe(time, position, rate)), time_(time), position_(position), rate_(rate) {}
  double time() const { return time_; }
  double position() const { return position_; }
  /// |dv/dx| * dt at the offending point.
  double rate() const { return rate_; }

 private:
  static std::string describe(double t, double x, double r) {
    std::ostringstream os;
    os << "caustic detected at t=" << t << " near x=" << x << " (|dv/dx| dt = " << r << ")";
    return os.str();
  }
  double time_, position_, rate_;
};

/// Density below this fraction of the maximum is outside the bulk support
/// watched by the caustic detector.
inline constexpr double kBulkSupport = 1e-8;
inline constexpr double kCausticThreshold = 0.5;

struct VelocityFields {
  Grid grid;
  double time = 0.0;
  double epsilon = 0.0;
  RealField rho;
  VectorField current;  // v = m^-1 grad Phi
  VectorField osmotic;  // u = -(epsilon / 2m) grad ln rho
  VectorField drift;    // b = v - u
  VectorField dlnrho;   // grad ln rho, zero at floored points
};

namespace detail {

// grad Phi and grad ln rho on the grid. Quantum states use Psi:
// grad Phi = hbar Im(psi* grad psi)/|psi|^2, grad ln rho = 2 Re(psi* grad psi)/|psi|^2.
// Hybrid states differentiate Phi by finite differences (it need not be
// periodic) and rho^1/2 spectrally.
struct PhaseAndLogDensityGradients {
  VectorField dphase;
  VectorField dlnrho;
};

inline PhaseAndLogDensityGradients phase_and_log_density_gradients(const WaveState& s,
                                                                   double hbar) {
  const Grid& g = s.grid;
  const std::size_t n = g.size();
  PhaseAndLogDensityGradients out;
  out.dphase.assign(g.dims(), RealField(n, 0.0));
  out.dlnrho.assign(g.dims(), RealField(n, 0.0));
  if (s.psi) {
    const ComplexField& psi = *s.psi;
    RealField dens(n);
    for (std::size_t i = 0; i < n; ++i) dens[i] = std::norm(psi[i]);
    const double floor = kRhoFloor * max_value(dens);
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const ComplexField d = spectral_derivative(psi, g, a);
      for (std::size_t i = 0; i < n; ++i) {
        const cplx w = std::conj(psi[i]) * d[i];
        const double r = std::max(dens[i], floor);
        out.dphase[a][i] = hbar * w.imag() / r;
        out.dlnrho[a][i] = dens[i] > floor ? 2.0 * w.real() / r : 0.0;
      }
    }
  } else {
    const double floor = kRhoFloor * max_value(s.rho);
    out.dphase = finite_difference_gradient(s.phase, g);
    // Through the amplitude, as for Psi: grad ln rho = 2 grad(rho^1/2) / rho^1/2,
    // which keeps rho (grad ln rho)^2 bounded where rho is at round-off level.
    RealField amp(n);
    for (std::size_t i = 0; i < n; ++i) amp[i] = std::sqrt(std::max(s.rho[i], 0.0));
    const VectorField damp = gradient(amp, g);
    for (std::size_t a = 0; a < g.dims(); ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        out.dlnrho[a][i] = s.rho[i] > floor ? 2.0 * damp[a][i] * amp[i] / s.rho[i] : 0.0;
      }
    }
  }
  return out;
}

}  // namespace detail

inline VelocityFields velocity_fields(const WaveState& s, const ModelParams& params) {
  params.validate();
  const Grid& g = s.grid;
  const auto grads = detail::phase_and_log_density_gradients(s, params.hbar);
  VelocityFields f{g, s.time, params.epsilon, s.rho, {}, {}, {}, grads.dlnrho};
  const std::size_t n = g.size();
  f.current.assign(g.dims(), RealField(n));
  f.osmotic.assign(g.dims(), RealField(n));
  f.drift.assign(g.dims(), RealField(n));
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const double m = params.mass(a);
    const double c = params.epsilon / (2.0 * m);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = grads.dphase[a][i] / m;
      const double u = -c * grads.dlnrho[a][i];
      f.current[a][i] = v;
      f.osmotic[a][i] = u;
      f.drift[a][i] = v - u;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Quantum class

/// Strang split-step propagator for i hbar dPsi/dt = -(hbar^2/2) m^AB d_A d_B Psi + V Psi.
class QuantumPropagator {
 public:
  QuantumPropagator(const Grid& g, const ModelParams& params, const PotentialSpec& potential,
                    double dt)
      : grid_(g), dt_(dt) {
    params.validate();
    if (params.dynamics_class() != DynamicsClass::quantum) {
      throw Error("step_quantum: xi = 0 is the hybrid class; use step_hybrid");
    }
    if (dt == 0.0 || !std::isfinite(dt)) throw Error("step_quantum: dt must be finite and non-zero");
    const RealField v = evaluate_potential(potential, g, params);
    const double hbar = params.hbar;
    half_potential_.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      half_potential_[i] = std::polar(1.0, -0.5 * v[i] * dt / hbar);
    }
    kinetic_.resize(g.size());
    const double scale = 1.0 / static_cast<double>(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      double e = 0.0;
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const double k = g.wavenumbers(a)[static_cast<std::size_t>(g.index_along(j, a))];
        e += hbar * k * k / (2.0 * params.mass(a));
      }
      kinetic_[j] = std::polar(scale, -e * dt);
    }
    scratch_.resize(g.size());
  }

  double dt() const { return dt_; }

  void advance(ComplexField& psi, int steps = 1) {
    if (psi.size() != grid_.size()) throw Error("step_quantum: psi/grid size mismatch");
    const auto& fft = grid_.fft();
    for (int s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half_potential_[i];
      fft.forward(psi, scratch_);
      for (std::size_t i = 0; i < psi.size(); ++i) scratch_[i] *= kinetic_[i];
      fft.backward(scratch_, psi);
      for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= half_potential_[i];
    }
  }

 private:
  Grid grid_;
  double dt_;
  ComplexField half_potential_;
  ComplexField kinetic_;
  ComplexField scratch_;
};

/// One Strang step. A negative dt steps backwards in time.
inline WaveState step_quantum(const WaveState& state, const ModelParams& params,
                              const PotentialSpec& potential, double dt) {
  QuantumPropagator prop(state.grid, params, potential, dt);
  ComplexField psi = assemble_psi(state, params.hbar);
  prop.advance(psi);
  return state_from_psi(state.grid, std::move(psi), params.hbar, state.time + dt);
}

/// Largest phase advance per step over the occupied support: the potential
/// part max |V| dt / hbar where rho > 1e-12 max(rho), and the kinetic part
/// max hbar k^2 dt / 2m over modes holding more than 1e-12 of the peak power.
struct PhaseAdvance {
  double potential = 0.0;
  double kinetic = 0.0;
};

inline PhaseAdvance max_phase_advance(const WaveState& state, const ModelParams& params,
                                      const PotentialSpec& potential, double dt) {
  const Grid& g = state.grid;
  const RealField v = evaluate_potential(potential, g, params);
  const double rmax = max_value(state.rho);
  PhaseAdvance pa;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (state.rho[i] > 1e-12 * rmax) {
      pa.potential = std::max(pa.potential, std::abs(v[i] * dt) / params.hbar);
    }
  }
  const ComplexField spec = to_fourier(assemble_psi(state, params.hbar), g);
  double pmax = 0.0;
  for (const auto& z : spec) pmax = std::max(pmax, std::norm(z));
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (std::norm(spec[j]) <= 1e-12 * pmax) continue;
    double e = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double k = g.wavenumbers(a)[static_cast<std::size_t>(g.index_along(j, a))];
      e += params.hbar * k * k / (2.0 * params.mass(a));
    }
    pa.kinetic = std::max(pa.kinetic, std::abs(e * dt));
  }
  return pa;
}

// ---------------------------------------------------------------------------
// Hybrid class

namespace detail {

struct HybridRates {
  RealField drho;
  RealField dphase;
};

// d rho/dt = -d_A(rho m^AB d_B Phi), d Phi/dt = -(1/2) m^AB d_A Phi d_B Phi - V.
inline HybridRates hybrid_rates(const RealField& rho, const RealField& phase, const Grid& g,
                                const ModelParams& params, const RealField& potential) {
  const std::size_t n = g.size();
  HybridRates r{RealField(n, 0.0), RealField(n, 0.0)};
  const VectorField dphi = finite_difference_gradient(phase, g);
  ComplexField flux_spec(n);
  ComplexField flux(n);
  ComplexField div_spec(n, 0.0);
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const double m = params.mass(a);
    for (std::size_t i = 0; i < n; ++i) {
      flux[i] = rho[i] * dphi[a][i] / m;
      r.dphase[i] -= 0.5 * dphi[a][i] * dphi[a][i] / m;
    }
    g.fft().forward(flux, flux_spec);
    apply_derivative_symbol(flux_spec, g, a, 1);
    for (std::size_t i = 0; i < n; ++i) div_spec[i] += flux_spec[i];
  }
  const ComplexField div = from_fourier(div_spec, g);
  for (std::size_t i = 0; i < n; ++i) {
    r.drho[i] = -div[i].real();
    r.dphase[i] -= potential[i];
  }
  return r;
}

}  // namespace detail

/// Largest |d v_a / d x_a| * dt over the bulk support, with its location
/// along coordinate 0.
struct CausticProbe {
  double rate = 0.0;
  double position = 0.0;
};

inline CausticProbe caustic_probe(const WaveState& state, const ModelParams& params, double dt) {
  const Grid& g = state.grid;
  const double rmax = max_value(state.rho);
  CausticProbe probe;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    RealField v = finite_difference_derivative(state.phase, g, a);
    for (auto& x : v) x /= params.mass(a);
    const RealField dv = finite_difference_derivative(v, g, a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (state.rho[i] <= kBulkSupport * rmax) continue;
      const double r = std::abs(dv[i] * dt);
      if (r > probe.rate) probe = {r, g.position(i, 0)};
    }
  }
  return probe;
}

/// One hybrid step: classical Hamilton-Jacobi for Phi and continuity for rho,
/// integrated together with RK4. The step is split internally into equal
/// substeps so that max|v| k_max dt_sub stays inside the RK4 stability region.
/// Throws CausticError if the caustic detector trips at the start of the step.
inline WaveState step_hybrid(const WaveState& state, const ModelParams& params,
                             const PotentialSpec& potential, double dt) {
  params.validate();
  if (params.dynamics_class() != DynamicsClass::hybrid) {
    throw Error("step_hybrid: requires xi = 0 (hybrid class)");
  }
  if (dt == 0.0 || !std::isfinite(dt)) throw Error("step_hybrid: dt must be finite and non-zero");
  const Grid& g = state.grid;
  if (state.phase.size() != g.size() || state.rho.size() != g.size()) {
    throw Error("step_hybrid: state/grid size mismatch");
  }
  const CausticProbe probe = caustic_probe(state, params, dt);
  if (probe.rate > kCausticThreshold) throw CausticError(state.time, probe.position, probe.rate);

  const RealField vpot = evaluate_potential(potential, g, params);
  double speed = 0.0;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const RealField d = finite_difference_derivative(state.phase, g, a);
    double vmax = 0.0;
    for (double x : d) vmax = std::max(vmax, std::abs(x) / params.mass(a));
    speed = std::max(speed, vmax * g.max_wavenumber(a));
  }
  const int substeps = std::max(1, static_cast<int>(std::ceil(std::abs(dt) * speed / 1.5)));
  const double h = dt / substeps;

  RealField rho = state.rho, phase = state.phase;
  const std::size_t n = g.size();
  RealField r_tmp(n), p_tmp(n);
  for (int s = 0; s < substeps; ++s) {
    const auto k1 = detail::hybrid_rates(rho, phase, g, params, vpot);
    for (std::size_t i = 0; i < n; ++i) {
      r_tmp[i] = rho[i] + 0.5 * h * k1.drho[i];
      p_tmp[i] = phase[i] + 0.5 * h * k1.dphase[i];
    }
    const auto k2 = detail::hybrid_rates(r_tmp, p_tmp, g, params, vpot);
    for (std::size_t i = 0; i < n; ++i) {
      r_tmp[i] = rho[i] + 0.5 * h * k2.drho[i];
      p_tmp[i] = phase[i] + 0.5 * h * k2.dphase[i];
    }
    const auto k3 = detail::hybrid_rates(r_tmp, p_tmp, g, params, vpot);
    for (std::size_t i = 0; i < n; ++i) {
      r_tmp[i] = rho[i] + h * k3.drho[i];
      p_tmp[i] = phase[i] + h * k3.dphase[i];
    }
    const auto k4 = detail::hybrid_rates(r_tmp, p_tmp, g, params, vpot);
    for (std::size_t i = 0; i < n; ++i) {
      rho[i] += h / 6.0 * (k1.drho[i] + 2.0 * k2.drho[i] + 2.0 * k3.drho[i] + k4.drho[i]);
      phase[i] += h / 6.0 * (k1.dphase[i] + 2.0 * k2.dphase[i] + 2.0 * k3.dphase[i] + k4.dphase[i]);
    }
  }
  // Spectral round-off can leave tiny negative tails.
  for (auto& r : rho) r = std::max(r, 0.0);
  return WaveState{g, std::move(rho), std::move(phase), state.time + dt, std::nullopt};
}

// ---------------------------------------------------------------------------
// Ensemble Hamiltonian

/// H = integral of rho [ (1/2) m^AB dPhi dPhi + V + xi m^AB (d rho)(d rho) / rho^2 ].
inline double ensemble_hamiltonian(const WaveState& state, const ModelParams& params,
                                   const PotentialSpec& potential) {
  params.validate();
  const Grid& g = state.grid;
  const RealField v = evaluate_potential(potential, g, params);
  const auto grads = detail::phase_and_log_density_gradients(state, params.hbar);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double e = v[i];
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double m = params.mass(a);
      e += 0.5 * grads.dphase[a][i] * grads.dphase[a][i] / m;
      e += params.xi * grads.dlnrho[a][i] * grads.dlnrho[a][i] / m;
    }
    total += state.rho[i] * e;
  }
  return total * g.cell_volume();
}

// ---------------------------------------------------------------------------
// Class-agnostic driver

/// Owns a field state and advances it with the stepper of its class. For the
/// quantum class Psi is propagated in place and (rho, Phi) are materialized
/// only on request.
class FieldEvolver {
 public:
  FieldEvolver(WaveState initial, ModelParams params, PotentialSpec potential, double dt)
      : state_(std::move(initial)), params_(std::move(params)), potential_(std::move(potential)),
        dt_(dt), start_time_(state_.time) {
    params_.validate();
    if (params_.dynamics_class() == DynamicsClass::quantum) {
      psi_ = assemble_psi(state_, params_.hbar);
      propagator_.emplace(state_.grid, params_, potential_, dt_);
    }
  }

  double time() const { return state_.time; }
  double dt() const { return dt_; }
  const Grid& grid() const { return state_.grid; }
  const ModelParams& params() const { return params_; }
  const PotentialSpec& potential() const { return potential_; }

  void step() {
    if (propagator_) {
      propagator_->advance(psi_);
      dirty_ = true;
    } else {
      state_ = step_hybrid(state_, params_, potential_, dt_);
    }
    ++steps_;
    state_.time = start_time_ + static_cast<double>(steps_) * dt_;
  }

  const WaveState& state() {
    if (dirty_) {
      state_ = state_from_psi(state_.grid, psi_, params_.hbar, state_.time);
      dirty_ = false;
    }
    return state_;
  }

  /// Velocity fields at the current time (cheap path for the quantum class:
  /// no phase unwrapping).
  VelocityFields fields() {
    if (propagator_ && dirty_) {
      WaveState light{state_.grid, RealField(psi_.size()), RealField{}, state_.time, psi_};
      for (std::size_t i = 0; i < psi_.size(); ++i) light.rho[i] = std::norm(psi_[i]);
      return velocity_fields(light, params_);
    }
    return velocity_fields(state(), params_);
  }

 private:
  WaveState state_;
  ModelParams params_;
  PotentialSpec potential_;
  double dt_;
  double start_time_;
  long steps_ = 0;
  ComplexField psi_;
  std::optional<QuantumPropagator> propagator_;
  bool dirty_ = false;
};

}  // namespace edlab

#endif  // EDLAB_FIELDS_HPP_
