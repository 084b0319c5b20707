// Maximum-entropy short-step transition kernel.
//
// Maximizing -sum P log(P/Q) with a uniform prior under per-particle step
// constraints <|dx_n|^2> = kappa_n and the drift constraint
// <dx> . grad(phi) = kappa' gives P ~ exp(-sum_n alpha_n |dx_n|^2 / 2 +
// alpha' dx . grad(phi)). analytic_kernel() completes the square;
// numeric_maxent() finds the multipliers by brute force on a lattice and is
// the independent check of the closed form.

#ifndef EDLAB_MAXENT_HPP_
#define EDLAB_MAXENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "edlab/core.hpp"
#include "edlab/rng.hpp"

namespace edlab {

/// Gaussian short-step kernel. Coordinates are split evenly among the
/// particles: with N multipliers alpha_n over D coordinates, particle n owns
/// coordinates [n D/N, (n+1) D/N).
struct TransitionKernel {
  std::vector<double> mean_shift;  // <dx_A>
  std::vector<double> variance;    // diagonal of <dw_A dw_B>
  std::vector<double> alpha_n;
  double alpha_prime = 0.0;
};

namespace detail {
inline std::size_t particle_of(std::size_t coordinate, std::size_t dims, std::size_t particles) {
  return coordinate / (dims / particles);
}

inline void check_particle_layout(std::size_t dims, std::size_t particles) {
  if (dims == 0) throw Error("maxent: grad_phi must have at least one coordinate");
  if (particles == 0 || dims % particles != 0) {
    throw Error("maxent: number of multipliers must divide the number of coordinates");
  }
}
}  // namespace detail

inline TransitionKernel analytic_kernel(std::span<const double> grad_phi,
                                        std::span<const double> alpha_n, double alpha_prime) {
  detail::check_particle_layout(grad_phi.size(), alpha_n.size());
  for (double a : alpha_n) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error("analytic_kernel: alpha_n must be > 0");
  }
  TransitionKernel k;
  k.alpha_n.assign(alpha_n.begin(), alpha_n.end());
  k.alpha_prime = alpha_prime;
  for (std::size_t a = 0; a < grad_phi.size(); ++a) {
    const double an = alpha_n[detail::particle_of(a, grad_phi.size(), alpha_n.size())];
    k.mean_shift.push_back(alpha_prime / an * grad_phi[a]);
    k.variance.push_back(1.0 / an);
  }
  return k;
}

/// Constraint values (kappa_n per particle, kappa') that a kernel satisfies.
struct KernelMoments {
  std::vector<double> kappa_n;
  double kappa_prime = 0.0;
};

inline KernelMoments kernel_moments(const TransitionKernel& k, std::span<const double> grad_phi) {
  KernelMoments m;
  m.kappa_n.assign(k.alpha_n.size(), 0.0);
  for (std::size_t a = 0; a < grad_phi.size(); ++a) {
    const std::size_t n = detail::particle_of(a, grad_phi.size(), k.alpha_n.size());
    m.kappa_n[n] += k.variance[a] + k.mean_shift[a] * k.mean_shift[a];
    m.kappa_prime += k.mean_shift[a] * grad_phi[a];
  }
  return m;
}

/// Symmetric lattice of step vectors: per coordinate, points -half_width ..
/// half_width with the given spacing.
struct LatticeSpec {
  std::vector<double> half_width;
  std::vector<double> spacing;

  /// Lattice resolving `points_per_sigma` per standard deviation and
  /// covering |mean| + `sigmas` standard deviations in every coordinate.
  static LatticeSpec covering(const TransitionKernel& k, double sigmas = 8.0,
                              double points_per_sigma = 64.0) {
    LatticeSpec s;
    for (std::size_t a = 0; a < k.variance.size(); ++a) {
      const double sd = std::sqrt(k.variance[a]);
      s.spacing.push_back(sd / points_per_sigma);
      s.half_width.push_back(std::abs(k.mean_shift[a]) + sigmas * sd);
    }
    return s;
  }
};

struct DiscreteKernel {
  std::vector<std::vector<double>> axes;  // lattice coordinates per dimension
  std::vector<double> probabilities;      // row-major over axes
  std::vector<double> achieved_kappa_n;
  double achieved_kappa_prime = 0.0;
  std::vector<double> alpha_n;  // recovered multipliers
  double alpha_prime = 0.0;
  int iterations = 0;
  double max_moment_error = 0.0;
};

namespace detail {

// Enumerates the lattice of a DiscreteKernel: visitor(flat index, point).
template <class Visitor>
void for_each_lattice_point(const std::vector<std::vector<double>>& axes, Visitor&& visit) {
  const std::size_t dims = axes.size();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> point(dims);
  std::size_t total = 1;
  for (const auto& ax : axes) total *= ax.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t a = dims; a-- > 0;) {
      idx[a] = rem % axes[a].size();
      rem /= axes[a].size();
      point[a] = axes[a][idx[a]];
    }
    visit(flat, std::span<const double>(point));
  }
}

// Solves the small dense system A x = b; returns false when A is singular.
inline bool solve_dense(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                        std::vector<double>& x) {
  const auto n = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
  x.assign(sol.data(), sol.data() + n);
  return true;
}

}  // namespace detail

struct MaxentOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;  // on the moment residual, relative to kappa
};

/// Maximum-entropy distribution on a lattice with the prescribed moments,
/// found by damped Newton on the convex dual in multiplier space.
inline DiscreteKernel numeric_maxent(std::span<const double> grad_phi,
                                     std::span<const double> kappa_n, double kappa_prime,
                                     const LatticeSpec& lattice, MaxentOptions opt = {}) {
  const std::size_t dims = grad_phi.size();
  const std::size_t particles = kappa_n.size();
  detail::check_particle_layout(dims, particles);
  if (lattice.half_width.size() != dims || lattice.spacing.size() != dims) {
    throw Error("numeric_maxent: lattice spec must have one entry per coordinate");
  }
  for (double k : kappa_n) {
    if (!(k > 0.0) || !std::isfinite(k)) throw Error("numeric_maxent: kappa_n must be > 0");
  }
  double grad_norm2 = 0.0;
  for (double g : grad_phi) grad_norm2 += g * g;
  const bool drift_active = grad_norm2 > 0.0;
  // |kappa'| = |sum_n <dx_n>.g_n| < sum_n sqrt(kappa_n) |g_n| for any
  // distribution with finite spread.
  double reach = 0.0;
  for (std::size_t n = 0; n < particles; ++n) {
    double gn2 = 0.0;
    for (std::size_t a = 0; a < dims; ++a) {
      if (detail::particle_of(a, dims, particles) == n) gn2 += grad_phi[a] * grad_phi[a];
    }
    reach += std::sqrt(kappa_n[n] * gn2);
  }
  if ((!drift_active && kappa_prime != 0.0) || (drift_active && std::abs(kappa_prime) >= reach)) {
    throw Error("numeric_maxent: infeasible constraints (kappa' unreachable)");
  }

  DiscreteKernel out;
  for (std::size_t a = 0; a < dims; ++a) {
    const double h = lattice.spacing[a], w = lattice.half_width[a];
    if (!(h > 0.0) || !(w > h)) throw Error("numeric_maxent: invalid lattice spec");
    const auto half = static_cast<long>(std::llround(w / h));
    std::vector<double> ax;
    ax.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long i = -half; i <= half; ++i) ax.push_back(static_cast<double>(i) * h);
    out.axes.push_back(std::move(ax));
  }

  // Feature vectors: f_n = -|dx_n|^2 / 2 and f' = dx . grad(phi).
  const std::size_t nfeat = particles + (drift_active ? 1 : 0);
  std::size_t total = 1;
  for (const auto& ax : out.axes) total *= ax.size();
  std::vector<double> features(total * nfeat);
  detail::for_each_lattice_point(out.axes, [&](std::size_t j, std::span<const double> x) {
    double* f = &features[j * nfeat];
    for (std::size_t n = 0; n < nfeat; ++n) f[n] = 0.0;
    for (std::size_t a = 0; a < dims; ++a) {
      f[detail::particle_of(a, dims, particles)] += -0.5 * x[a] * x[a];
      if (drift_active) f[particles] += x[a] * grad_phi[a];
    }
  });
  std::vector<double> target(nfeat);
  for (std::size_t n = 0; n < particles; ++n) target[n] = -0.5 * kappa_n[n];
  if (drift_active) target[particles] = kappa_prime;

  std::vector<double> lambda(nfeat, 0.0);
  for (std::size_t n = 0; n < particles; ++n) {
    lambda[n] = static_cast<double>(dims / particles) / kappa_n[n];
  }

  std::vector<double> logw(total), prob(total);
  // Dual objective log Z(lambda) - lambda . target; fills prob as a side effect.
  auto dual = [&](const std::vector<double>& lam) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < total; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < nfeat; ++n) s += lam[n] * features[j * nfeat + n];
      logw[j] = s;
      mx = std::max(mx, s);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      prob[j] = std::exp(logw[j] - mx);
      z += prob[j];
    }
    for (auto& p : prob) p /= z;
    double obj = mx + std::log(z);
    for (std::size_t n = 0; n < nfeat; ++n) obj -= lam[n] * target[n];
    return obj;
  };
  auto moments = [&](std::vector<double>& mean, std::vector<std::vector<double>>& cov) {
    mean.assign(nfeat, 0.0);
    cov.assign(nfeat, std::vector<double>(nfeat, 0.0));
    for (std::size_t j = 0; j < total; ++j) {
      const double* f = &features[j * nfeat];
      for (std::size_t n = 0; n < nfeat; ++n) mean[n] += prob[j] * f[n];
    }
    for (std::size_t j = 0; j < total; ++j) {
      const double* f = &features[j * nfeat];
      for (std::size_t n = 0; n < nfeat; ++n) {
        const double dn = f[n] - mean[n];
        for (std::size_t m = 0; m <= n; ++m) cov[n][m] += prob[j] * dn * (f[m] - mean[m]);
      }
    }
    for (std::size_t n = 0; n < nfeat; ++n) {
      for (std::size_t m = 0; m < n; ++m) cov[m][n] = cov[n][m];
    }
  };
  auto residual_norm = [&](const std::vector<double>& mean) {
    double r = 0.0;
    for (std::size_t n = 0; n < nfeat; ++n) {
      const double scale = n < particles ? std::abs(target[n]) : std::max(std::abs(target[n]), reach);
      r = std::max(r, std::abs(mean[n] - target[n]) / scale);
    }
    return r;
  };

  double obj = dual(lambda);
  std::vector<double> mean;
  std::vector<std::vector<double>> cov;
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    moments(mean, cov);
    if (residual_norm(mean) < opt.tolerance) {
      converged = true;
      break;
    }
    std::vector<double> grad(nfeat), step;
    for (std::size_t n = 0; n < nfeat; ++n) grad[n] = mean[n] - target[n];
    std::vector<double> rhs(nfeat);
    for (std::size_t n = 0; n < nfeat; ++n) rhs[n] = -grad[n];
    if (!detail::solve_dense(cov, rhs, step)) break;
    double slope = 0.0;
    for (std::size_t n = 0; n < nfeat; ++n) slope += grad[n] * step[n];
    // Backtracking (Armijo) on the dual.
    double t = 1.0;
    std::vector<double> trial(nfeat);
    double trial_obj = obj;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t n = 0; n < nfeat; ++n) trial[n] = lambda[n] + t * step[n];
      bool positive = true;
      for (std::size_t n = 0; n < particles; ++n) positive = positive && trial[n] > 0.0;
      if (positive) {
        trial_obj = dual(trial);
        // Near the optimum the objective change drops below round-off of |obj|.
        if (trial_obj <= obj + 1e-4 * t * slope ||
            std::abs(trial_obj - obj) <= 1e-13 * std::max(1.0, std::abs(obj))) {
          break;
        }
      }
      t *= 0.5;
    }
    lambda = trial;
    obj = dual(lambda);
  }
  if (!converged) {
    moments(mean, cov);
    if (residual_norm(mean) >= opt.tolerance * 100.0) {
      throw Error("numeric_maxent: dual Newton did not converge");
    }
  }

  out.probabilities = prob;
  out.iterations = it;
  out.alpha_n.assign(lambda.begin(), lambda.begin() + static_cast<long>(particles));
  out.alpha_prime = drift_active ? lambda[particles] : 0.0;
  out.achieved_kappa_n.resize(particles);
  for (std::size_t n = 0; n < particles; ++n) out.achieved_kappa_n[n] = -2.0 * mean[n];
  out.achieved_kappa_prime = drift_active ? mean[particles] : 0.0;
  out.max_moment_error = residual_norm(mean);

  // The lattice must resolve the solved distribution out to 6 sigma.
  for (std::size_t a = 0; a < dims; ++a) {
    const double an = out.alpha_n[detail::particle_of(a, dims, particles)];
    const double mu = out.alpha_prime / an * grad_phi[a];
    if (std::abs(mu) + 6.0 / std::sqrt(an) > lattice.half_width[a] * (1.0 + 1e-12)) {
      throw Error("numeric_maxent: lattice does not cover 6 standard deviations");
    }
  }
  return out;
}

/// Analytic kernel sampled on the lattice of `d` and normalized there.
inline std::vector<double> discretize(const TransitionKernel& k, const DiscreteKernel& d) {
  std::vector<double> q;
  detail::for_each_lattice_point(d.axes, [&](std::size_t, std::span<const double> x) {
    double e = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      const double z = x[a] - k.mean_shift[a];
      e += -0.5 * z * z / k.variance[a];
    }
    q.push_back(std::exp(e));
  });
  double s = 0.0;
  for (double v : q) s += v;
  for (auto& v : q) v /= s;
  return q;
}

/// KL(p || q) on a common lattice.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

/// Drift velocity and diagonal fluctuation covariance per unit time with
/// eta = eta_tilde / alpha' so that alpha' only sets epsilon.
struct StepStatistics {
  std::vector<double> drift;
  std::vector<double> fluctuation;  // diagonal of <dw dw> / dt
};

inline StepStatistics step_statistics(const ModelParams& params, std::span<const double> grad_phi) {
  params.validate();
  StepStatistics s;
  for (std::size_t a = 0; a < grad_phi.size(); ++a) {
    if (!std::isfinite(grad_phi[a])) throw Error("step_statistics: grad_phi must be finite");
    s.drift.push_back(params.eta_tilde * grad_phi[a] / params.mass(a));
    s.fluctuation.push_back(params.epsilon / params.mass(a));
  }
  return s;
}

/// Draws `count` one-coordinate short steps dx = drift dt + sqrt(fluct dt) N(0,1).
inline std::vector<double> sample_short_steps(const StepStatistics& stats, double dt,
                                              std::size_t count, std::uint64_t seed) {
  std::vector<double> out(count);
  const double sd = std::sqrt(stats.fluctuation.at(0) * dt);
  for (std::size_t i = 0; i < count; ++i) {
    const WalkerStream stream(seed, i, StreamPurpose::test);
    out[i] = stats.drift.at(0) * dt + sd * stream.normals(0)[0];
  }
  return out;
}

}  // namespace edlab

#endif  // EDLAB_MAXENT_HPP_
