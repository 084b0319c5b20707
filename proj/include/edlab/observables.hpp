// Momentum observables and the position-momentum uncertainty relations.
//
// Two momenta are compared: the local (current) momentum p = grad Phi, and
// the operator p^ = -i hbar grad acting on Psi = rho^{1/2} exp(i Phi / hbar).
// Their first moments agree and their variances differ by (hbar^2/4) times
// the Fisher information, which yields the Schrodinger and Heisenberg
// inequalities. Nothing here depends on epsilon.

#ifndef EDLAB_OBSERVABLES_HPP_
#define EDLAB_OBSERVABLES_HPP_

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "edlab/core.hpp"
#include "edlab/ensemble.hpp"
#include "edlab/fields.hpp"

namespace edlab {

using Matrix = std::vector<std::vector<double>>;

/// p_A(x) = d_A Phi(x). Quantum states read it from Psi, hybrid states
/// differentiate Phi directly.
inline VectorField local_momentum(const WaveState& s, double hbar) {
  return detail::phase_and_log_density_gradients(s, hbar).dphase;
}

struct MomentumDecomposition {
  VectorField drift;    // p_d = m b
  VectorField osmotic;  // p_o = m u = -(epsilon/2) grad ln rho
};

/// Splits p into drift and osmotic parts for a given epsilon.
inline MomentumDecomposition decompose_momentum(const WaveState& s, const ModelParams& params) {
  const auto f = velocity_fields(s, params);
  MomentumDecomposition d{f.drift, f.osmotic};
  for (std::size_t a = 0; a < f.drift.size(); ++a) {
    const double m = params.mass(a);
    for (auto& x : d.drift[a]) x *= m;
    for (auto& x : d.osmotic[a]) x *= m;
  }
  return d;
}

struct OperatorMomentumStats {
  std::vector<double> mean;      // <p^_a>
  std::vector<double> variance;  // Var(p^_a)
  Matrix cov_x;                  // symmetrized Cov(p^_a, x_b)
};

namespace detail {
inline std::vector<double> position_means(const WaveState& s, double norm) {
  const Grid& g = s.grid;
  std::vector<double> mean(g.dims(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t a = 0; a < g.dims(); ++a) mean[a] += s.rho[i] * g.position(i, a);
  }
  for (auto& m : mean) m *= g.cell_volume() / norm;
  return mean;
}
}  // namespace detail

/// <p^> and Var(p^) from the momentum-space density |Psi~(k)|^2; the
/// covariance with x from Re <Psi| x_b p^_a |Psi> with p^ applied spectrally.
inline OperatorMomentumStats operator_momentum_stats(const WaveState& s, const ModelParams& params) {
  const Grid& g = s.grid;
  const double hbar = params.hbar;
  const ComplexField psi = assemble_psi(s, hbar);
  const ComplexField spec = to_fourier(psi, g);
  OperatorMomentumStats st;
  st.mean.assign(g.dims(), 0.0);
  st.variance.assign(g.dims(), 0.0);
  st.cov_x.assign(g.dims(), std::vector<double>(g.dims(), 0.0));
  double total = 0.0;
  std::vector<double> m1(g.dims(), 0.0), m2(g.dims(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double w = std::norm(spec[j]);
    total += w;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double p = hbar * g.wavenumbers(a)[static_cast<std::size_t>(g.index_along(j, a))];
      m1[a] += w * p;
      m2[a] += w * p * p;
    }
  }
  for (std::size_t a = 0; a < g.dims(); ++a) {
    st.mean[a] = m1[a] / total;
    st.variance[a] = m2[a] / total - st.mean[a] * st.mean[a];
  }

  double norm = 0.0;
  for (const auto& z : psi) norm += std::norm(z);
  norm *= g.cell_volume();
  const std::vector<double> mx = detail::position_means(s, norm);
  for (std::size_t a = 0; a < g.dims(); ++a) {
    ComplexField ppsi = spec;
    const auto& k = g.wavenumbers(a);
    for (std::size_t j = 0; j < g.size(); ++j) {
      ppsi[j] *= hbar * k[static_cast<std::size_t>(g.index_along(j, a))];
    }
    ppsi = from_fourier(ppsi, g);
    for (std::size_t b = 0; b < g.dims(); ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        acc += g.position(i, b) * (std::conj(psi[i]) * ppsi[i]).real();
      }
      st.cov_x[a][b] = acc * g.cell_volume() / norm - st.mean[a] * mx[b];
    }
  }
  return st;
}

/// I_cd = integral of rho d_c ln rho d_d ln rho (floor-clamped log).
inline Matrix fisher_information(const WaveState& s) {
  const Grid& g = s.grid;
  WaveState density_only{g, s.rho, RealField(g.size(), 0.0), s.time, std::nullopt};
  const auto dl = detail::phase_and_log_density_gradients(density_only, 1.0).dlnrho;
  Matrix fim(g.dims(), std::vector<double>(g.dims(), 0.0));
  for (std::size_t c = 0; c < g.dims(); ++c) {
    for (std::size_t d = 0; d < g.dims(); ++d) {
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += s.rho[i] * dl[c][i] * dl[d][i];
      fim[c][d] = acc * g.cell_volume();
    }
  }
  return fim;
}

struct ReportCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct UncertaintyReport {
  double time = 0.0;
  double hbar = 1.0;
  std::vector<double> mean_x, var_x;
  std::vector<double> mean_p_local, var_p_local;
  std::vector<double> mean_p_operator, var_p_operator;
  std::vector<double> mean_p_osmotic;  // <-(hbar/2) d ln rho>
  std::vector<double> mean_dlnrho, var_dlnrho;
  Matrix fisher_I;
  Matrix cov_p_x;        // operator route, symmetrized
  Matrix cov_p_local_x;  // local-momentum route
  Matrix cov_dlnrho_x;
  std::vector<double> variance_identity_error;  // relative mismatch of the variance relation
  std::vector<double> schrodinger_lhs, schrodinger_rhs, schrodinger_slack;
  std::vector<double> heisenberg_product;
  std::optional<std::vector<double>> ensemble_mean_x, ensemble_var_x;
  std::vector<ReportCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.pass; });
  }
};

/// Tolerances for the report's invariants.
struct ReportTolerances {
  double identity = 1e-9;         // first moments and Cov(d ln rho, x)
  double variance_relation = 1e-6;  // relative
  double covariance_match = 1e-8;
  double inequality = 1e-9;       // relative to hbar^2/4
};

inline UncertaintyReport uncertainty_report(const WaveState& s, const ModelParams& params,
                                            const EnsembleState* ensemble = nullptr,
                                            ReportTolerances tol = {}) {
  const Grid& g = s.grid;
  const std::size_t dims = g.dims();
  const double hbar = params.hbar;
  const double vol = g.cell_volume();
  UncertaintyReport r;
  r.time = s.time;
  r.hbar = hbar;

  const double norm = integrate(s.rho, g);
  const auto grads = detail::phase_and_log_density_gradients(s, hbar);
  r.mean_x = detail::position_means(s, norm);
  r.var_x.assign(dims, 0.0);
  r.mean_p_local.assign(dims, 0.0);
  r.var_p_local.assign(dims, 0.0);
  r.mean_dlnrho.assign(dims, 0.0);
  r.var_dlnrho.assign(dims, 0.0);
  r.cov_p_local_x.assign(dims, std::vector<double>(dims, 0.0));
  r.cov_dlnrho_x.assign(dims, std::vector<double>(dims, 0.0));

  auto expect = [&](auto&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += s.rho[i] * f(i);
    return acc * vol / norm;
  };
  for (std::size_t a = 0; a < dims; ++a) {
    const auto& p = grads.dphase[a];
    const auto& dl = grads.dlnrho[a];
    r.var_x[a] = expect([&](std::size_t i) {
      const double d = g.position(i, a) - r.mean_x[a];
      return d * d;
    });
    r.mean_p_local[a] = expect([&](std::size_t i) { return p[i]; });
    r.var_p_local[a] = expect([&](std::size_t i) {
      const double d = p[i] - r.mean_p_local[a];
      return d * d;
    });
    r.mean_dlnrho[a] = expect([&](std::size_t i) { return dl[i]; });
    r.var_dlnrho[a] = expect([&](std::size_t i) {
      const double d = dl[i] - r.mean_dlnrho[a];
      return d * d;
    });
    for (std::size_t b = 0; b < dims; ++b) {
      r.cov_p_local_x[a][b] = expect([&](std::size_t i) {
        return (p[i] - r.mean_p_local[a]) * (g.position(i, b) - r.mean_x[b]);
      });
      r.cov_dlnrho_x[a][b] = expect([&](std::size_t i) {
        return (dl[i] - r.mean_dlnrho[a]) * (g.position(i, b) - r.mean_x[b]);
      });
    }
    r.mean_p_osmotic.push_back(-0.5 * hbar * r.mean_dlnrho[a]);
  }
  r.fisher_I = fisher_information(s);

  const OperatorMomentumStats op = operator_momentum_stats(s, params);
  r.mean_p_operator = op.mean;
  r.var_p_operator = op.variance;
  r.cov_p_x = op.cov_x;

  const double quarter = 0.25 * hbar * hbar;
  for (std::size_t a = 0; a < dims; ++a) {
    const double predicted = r.var_p_local[a] + quarter * r.var_dlnrho[a];
    r.variance_identity_error.push_back(std::abs(r.var_p_operator[a] - predicted) /
                                        std::max(r.var_p_operator[a], 1e-300));
    const double lhs = r.var_p_operator[a] * r.var_x[a];
    const double rhs = r.cov_p_x[a][a] * r.cov_p_x[a][a] + quarter;
    r.schrodinger_lhs.push_back(lhs);
    r.schrodinger_rhs.push_back(rhs);
    r.schrodinger_slack.push_back(lhs - rhs);
    r.heisenberg_product.push_back(lhs);
  }

  if (ensemble != nullptr && ensemble->size() > 0) {
    std::vector<double> em(dims, 0.0), ev(dims, 0.0);
    const auto m = static_cast<double>(ensemble->size());
    for (std::size_t w = 0; w < ensemble->size(); ++w) {
      for (std::size_t a = 0; a < dims; ++a) em[a] += ensemble->at(w, a);
    }
    for (auto& x : em) x /= m;
    for (std::size_t w = 0; w < ensemble->size(); ++w) {
      for (std::size_t a = 0; a < dims; ++a) {
        const double d = ensemble->at(w, a) - em[a];
        ev[a] += d * d;
      }
    }
    for (auto& x : ev) x /= (m - 1.0 > 0.0 ? m - 1.0 : 1.0);
    r.ensemble_mean_x = em;
    r.ensemble_var_x = ev;
  }

  auto add = [&](std::string name, double value, double tolerance, bool pass) {
    r.checks.push_back({std::move(name), value, tolerance, pass});
  };
  for (std::size_t a = 0; a < dims; ++a) {
    const std::string sfx = "[" + std::to_string(a) + "]";
    const double pscale = std::max(1.0, std::sqrt(r.var_p_operator[a]));
    add("osmotic_mean_zero" + sfx, std::abs(r.mean_p_osmotic[a]), tol.identity * pscale,
        std::abs(r.mean_p_osmotic[a]) <= tol.identity * pscale);
    const double dmean = std::abs(r.mean_p_operator[a] - r.mean_p_local[a]);
    add("operator_mean_equals_local" + sfx, dmean, tol.identity * pscale,
        dmean <= tol.identity * pscale);
    add("variance_relation" + sfx, r.variance_identity_error[a], tol.variance_relation,
        r.variance_identity_error[a] <= tol.variance_relation);
    for (std::size_t b = 0; b < dims; ++b) {
      const std::string ab = "[" + std::to_string(a) + "," + std::to_string(b) + "]";
      const double expected = a == b ? -1.0 : 0.0;
      const double dev = std::abs(r.cov_dlnrho_x[a][b] - expected);
      add("cov_dlnrho_x" + ab, dev, tol.identity, dev <= tol.identity);
      const double cscale = std::max(1.0, std::sqrt(r.var_p_operator[a] * r.var_x[b]));
      const double dc = std::abs(r.cov_p_x[a][b] - r.cov_p_local_x[a][b]);
      add("cov_operator_equals_local" + ab, dc, tol.covariance_match * cscale,
          dc <= tol.covariance_match * cscale);
    }
    // Cauchy-Schwarz step before the covariances are evaluated explicitly.
    const double chain_rhs = r.cov_p_local_x[a][a] * r.cov_p_local_x[a][a] +
                             quarter * r.cov_dlnrho_x[a][a] * r.cov_dlnrho_x[a][a];
    const double chain_slack = r.schrodinger_lhs[a] - chain_rhs;
    add("cauchy_schwarz_chain" + sfx, chain_slack, -tol.inequality * quarter,
        chain_slack >= -tol.inequality * quarter);
    add("schrodinger_slack" + sfx, r.schrodinger_slack[a], -tol.inequality * quarter,
        r.schrodinger_slack[a] >= -tol.inequality * quarter);
    add("heisenberg_bound" + sfx, r.heisenberg_product[a], quarter * (1.0 - tol.inequality),
        r.heisenberg_product[a] >= quarter * (1.0 - tol.inequality));
  }
  return r;
}

}  // namespace edlab

#endif  // EDLAB_OBSERVABLES_HPP_
