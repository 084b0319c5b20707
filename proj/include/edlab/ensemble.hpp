// Walker ensembles riding the (rho, Phi) fields.
//
// Each walker moves by dx = b dt + sqrt(epsilon dt / m) N(0, 1) with
// b = v + (epsilon / 2m) grad ln rho. epsilon = 0 reduces to the Bohmian ODE
// dx/dt = v, which has its own RK4 integrator.

#ifndef EDLAB_ENSEMBLE_HPP_
#define EDLAB_ENSEMBLE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edlab/core.hpp"
#include "edlab/fields.hpp"
#include "edlab/rng.hpp"

namespace edlab {

/// Density (relative to the maximum) below which a Bohmian walker is
/// considered to have left the resolvable support and is frozen.
inline constexpr double kResolvableDensity = 1e-24;

struct EnsembleState {
  std::size_t dims = 1;
  std::vector<double> positions;  // walker-major: positions[w * dims + a]
  double time = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t step_counter = 0;  // shared stream counter of all walkers
  std::vector<std::uint8_t> frozen;

  std::size_t size() const { return dims == 0 ? 0 : positions.size() / dims; }
  double at(std::size_t walker, std::size_t a) const { return positions[walker * dims + a]; }
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<std::vector<double>> positions;  // per time, walker-major
  std::size_t walkers = 0;
  std::size_t dims = 1;
  double epsilon = 0.0;
  std::string scenario;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Interpolated densities: piecewise-linear along every coordinate (periodic)

namespace detail {

// Samples the piecewise-linear density with node values `w` (periodic, n
// nodes, spacing h, first node at `lower`) at uniform u in (0, 1].
class LinearDensitySampler {
 public:
  LinearDensitySampler(std::vector<double> weights, double lower, double h)
      : w_(std::move(weights)), lower_(lower), h_(h) {
    const std::size_t n = w_.size();
    cdf_.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      cdf_[i + 1] = cdf_[i] + 0.5 * (w_[i] + w_[(i + 1) % n]) * h_;
    }
    total_ = cdf_.back();
    if (!(total_ > 0.0)) throw Error("sampler: density has no mass");
  }

  double total() const { return total_; }

  /// Cumulative mass from `lower` to x (x inside the box).
  double cdf(double x) const {
    const std::size_t n = w_.size();
    const double s = (x - lower_) / h_;
    auto i = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(n - 1)));
    const double f = std::clamp(s - static_cast<double>(i), 0.0, 1.0);
    const double a = w_[i], b = w_[(i + 1) % n];
    return cdf_[i] + h_ * (a * f + 0.5 * (b - a) * f * f);
  }

  double sample(double u) const {
    const std::size_t n = w_.size();
    const double target = u * total_;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    std::size_t i = it == cdf_.begin() ? 0 : static_cast<std::size_t>(it - cdf_.begin()) - 1;
    if (i >= n) i = n - 1;
    // Skip empty cells (target sitting exactly on a plateau).
    const double rem = std::max(0.0, target - cdf_[i]) / h_;
    const double a = w_[i], b = w_[(i + 1) % n];
    // Solve a f + (b - a) f^2 / 2 = rem for f in [0, 1].
    double f;
    const double c = b - a;
    if (std::abs(c) < 1e-14 * std::max(a, b)) {
      f = a > 0.0 ? rem / a : 0.5;
    } else {
      const double disc = std::max(0.0, a * a + 2.0 * c * rem);
      f = 2.0 * rem / (a + std::sqrt(disc));
    }
    f = std::clamp(f, 0.0, 1.0);
    return lower_ + (static_cast<double>(i) + f) * h_;
  }

 private:
  std::vector<double> w_;
  std::vector<double> cdf_;
  double lower_, h_;
  double total_ = 0.0;
};

// Node values of the marginal of rho along coordinate a (sum over the others).
inline std::vector<double> marginal_nodes(const RealField& rho, const Grid& g, std::size_t a) {
  std::vector<double> m(static_cast<std::size_t>(g.points(a)), 0.0);
  double other = 1.0;
  for (std::size_t b = 0; b < g.dims(); ++b) {
    if (b != a) other *= g.spacing(b);
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    m[static_cast<std::size_t>(g.index_along(j, a))] += rho[j] * other;
  }
  return m;
}

}  // namespace detail

/// M walkers drawn i.i.d. from the (bi)linear interpolant of rho by inverse
/// CDF (conditional inverse CDF in 2-D).
inline EnsembleState sample_initial(const RealField& rho, const Grid& g, std::size_t count,
                                    std::uint64_t seed, double time = 0.0) {
  if (count == 0) throw Error("sample_initial: M must be >= 1");
  if (rho.size() != g.size()) throw Error("sample_initial: rho/grid size mismatch");
  if (g.dims() > 2) throw Error("sample_initial: only 1-D and 2-D grids are supported");
  EnsembleState ens;
  ens.dims = g.dims();
  ens.positions.resize(count * g.dims());
  ens.time = time;
  ens.seed = seed;
  ens.frozen.assign(count, 0);
  const detail::LinearDensitySampler first(detail::marginal_nodes(rho, g, 0), g.lower(0),
                                           g.spacing(0));
  for (std::size_t w = 0; w < count; ++w) {
    const WalkerStream stream(seed, w, StreamPurpose::initial_sampling);
    const auto u = stream.uniforms(0);
    const double x0 = first.sample(u[0]);
    ens.positions[w * g.dims()] = g.wrap(0, x0);
    if (g.dims() == 2) {
      // Conditional density along coordinate 1 on the line x0 = const.
      const int n0 = g.points(0);
      const double s = (x0 - g.lower(0)) / g.spacing(0);
      const int i = std::clamp(static_cast<int>(std::floor(s)), 0, n0 - 1);
      const double f = std::clamp(s - i, 0.0, 1.0);
      const int i1 = (i + 1) % n0;
      std::vector<double> line(static_cast<std::size_t>(g.points(1)));
      for (int c = 0; c < g.points(1); ++c) {
        const std::size_t ja = static_cast<std::size_t>(i) * g.stride(0) + static_cast<std::size_t>(c);
        const std::size_t jb = static_cast<std::size_t>(i1) * g.stride(0) + static_cast<std::size_t>(c);
        line[static_cast<std::size_t>(c)] = (1.0 - f) * rho[ja] + f * rho[jb];
      }
      const detail::LinearDensitySampler second(std::move(line), g.lower(1), g.spacing(1));
      // The second uniform is in [0, 1); map to (0, 1].
      ens.positions[w * 2 + 1] = g.wrap(1, second.sample(1.0 - u[1]));
    }
  }
  return ens;
}

/// Kolmogorov-Smirnov distance between the walkers' marginal along
/// coordinate a and the marginal of the interpolated grid density.
inline double ks_distance(const EnsembleState& ens, const RealField& rho, const Grid& g,
                          std::size_t a) {
  const detail::LinearDensitySampler marginal(detail::marginal_nodes(rho, g, a), g.lower(a),
                                              g.spacing(a));
  std::vector<double> xs(ens.size());
  for (std::size_t w = 0; w < xs.size(); ++w) xs[w] = g.wrap(a, ens.at(w, a));
  std::sort(xs.begin(), xs.end());
  const double m = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = marginal.cdf(xs[i]) / marginal.total();
    d = std::max({d, std::abs(f - static_cast<double>(i) / m),
                  std::abs(static_cast<double>(i + 1) / m - f)});
  }
  return d;
}

/// Largest KS distance over all coordinates.
inline double ks_distance(const EnsembleState& ens, const RealField& rho, const Grid& g) {
  double d = 0.0;
  for (std::size_t a = 0; a < g.dims(); ++a) d = std::max(d, ks_distance(ens, rho, g, a));
  return d;
}

/// Kolmogorov 1% critical value for M samples.
inline double ks_critical_1pct(std::size_t m) { return 1.63 / std::sqrt(static_cast<double>(m)); }

// ---------------------------------------------------------------------------
// Field interpolation at walker positions

namespace detail {

struct Stencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> cubic{};   // Lagrange weights on nodes i-1 .. i+2
  std::array<double, 2> linear{};  // weights on nodes i, i+1
};

inline Stencil stencil_along(const Grid& g, std::size_t a, double x) {
  const int n = g.points(a);
  const double s = (x - g.lower(a)) / g.spacing(a);
  const double fl = std::floor(s);
  const double t = s - fl;
  int i = static_cast<int>(fl);
  if (i < 0 || i >= n) {
    i %= n;
    if (i < 0) i += n;
  }
  Stencil st;
  const int im = i == 0 ? n - 1 : i - 1;
  const int ip = i + 1 == n ? 0 : i + 1;
  const int ipp = ip + 1 == n ? 0 : ip + 1;
  st.index = {static_cast<std::size_t>(im), static_cast<std::size_t>(i), static_cast<std::size_t>(ip),
              static_cast<std::size_t>(ipp)};
  st.cubic = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
              -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
  st.linear = {1.0 - t, t};
  return st;
}

/// Stencils of one point along every coordinate; shared by all fields on the
/// same grid.
struct Location {
  Stencil s0, s1;
};

inline Location locate(const Grid& g, const double* x) {
  Location l;
  l.s0 = stencil_along(g, 0, x[0]);
  if (g.dims() == 2) l.s1 = stencil_along(g, 1, x[1]);
  return l;
}

// Interpolator bound to one VelocityFields snapshot.
class FieldSampler {
 public:
  explicit FieldSampler(const VelocityFields& f)
      : f_(f), floor_(kRhoFloor * max_value(f.rho)), rmax_(max_value(f.rho)) {}

  const Grid& grid() const { return f_.grid; }

  /// Current velocity (cubic) and grad ln rho (linear, zero if any node is at
  /// the floor) at x.
  void sample(const double* x, double* v, double* dlnrho) const { sample(locate(f_.grid, x), v, dlnrho); }

  void sample(const Location& l, double* v, double* dlnrho) const {
    const Grid& g = f_.grid;
    const Stencil& s0 = l.s0;
    if (g.dims() == 1) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += s0.cubic[k] * f_.current[0][s0.index[k]];
      v[0] = acc;
      const std::size_t i0 = s0.index[1], i1 = s0.index[2];
      dlnrho[0] = (f_.rho[i0] > floor_ && f_.rho[i1] > floor_)
                      ? s0.linear[0] * f_.dlnrho[0][i0] + s0.linear[1] * f_.dlnrho[0][i1]
                      : 0.0;
      return;
    }
    const Stencil& s1 = l.s1;
    const std::size_t st0 = g.stride(0);
    for (std::size_t a = 0; a < 2; ++a) {
      double acc = 0.0;
      for (int p = 0; p < 4; ++p) {
        double row = 0.0;
        for (int q = 0; q < 4; ++q) row += s1.cubic[q] * f_.current[a][s0.index[p] * st0 + s1.index[q]];
        acc += s0.cubic[p] * row;
      }
      v[a] = acc;
      bool ok = true;
      double lin = 0.0;
      for (int p = 0; p < 2; ++p) {
        for (int q = 0; q < 2; ++q) {
          const std::size_t j = s0.index[1 + p] * st0 + s1.index[1 + q];
          ok = ok && f_.rho[j] > floor_;
          lin += s0.linear[p] * s1.linear[q] * f_.dlnrho[a][j];
        }
      }
      dlnrho[a] = ok ? lin : 0.0;
    }
  }

  /// Linearly interpolated density relative to the maximum.
  double relative_density(const double* x) const { return relative_density(locate(f_.grid, x)); }

  double relative_density(const Location& l) const {
    const Grid& g = f_.grid;
    const Stencil& s0 = l.s0;
    if (g.dims() == 1) {
      return (s0.linear[0] * f_.rho[s0.index[1]] + s0.linear[1] * f_.rho[s0.index[2]]) / rmax_;
    }
    const Stencil& s1 = l.s1;
    double r = 0.0;
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        r += s0.linear[p] * s1.linear[q] * f_.rho[s0.index[1 + p] * g.stride(0) + s1.index[1 + q]];
      }
    }
    return r / rmax_;
  }

 private:
  const VelocityFields& f_;
  double floor_;
  double rmax_;
};

inline bool same_time(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

}  // namespace detail

/// Advances every walker by dt with `substeps` equal Euler-Maruyama substeps
/// (fields held fixed). Noise for walker w at substep s comes from the stream
/// (seed, w, step_counter + s).
inline EnsembleState step_walkers(const EnsembleState& ens, const VelocityFields& fields,
                                  const ModelParams& params, double dt, int substeps = 1) {
  if (!(params.epsilon >= 0.0)) throw Error("step_walkers: epsilon must be >= 0");
  if (!detail::same_time(ens.time, fields.time)) {
    throw Error("step_walkers: field and ensemble times differ");
  }
  if (substeps < 1 || substeps > 16) throw Error("step_walkers: substeps must be in [1, 16]");
  const Grid& g = fields.grid;
  if (ens.dims != g.dims()) throw Error("step_walkers: ensemble/grid dimension mismatch");
  const std::size_t dims = ens.dims;
  const double h = dt / substeps;
  std::array<double, 2> noise_scale{}, osmotic_coef{};
  for (std::size_t a = 0; a < dims; ++a) {
    noise_scale[a] = std::sqrt(params.epsilon * h / params.mass(a));
    osmotic_coef[a] = params.epsilon / (2.0 * params.mass(a));
  }
  const bool noisy = params.epsilon > 0.0;
  const detail::FieldSampler sampler(fields);
  EnsembleState out = ens;
  const auto count = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t wi = 0; wi < count; ++wi) {
    const auto w = static_cast<std::size_t>(wi);
    double* x = &out.positions[w * dims];
    const WalkerStream stream(ens.seed, w, StreamPurpose::stepping);
    std::array<double, 2> v{}, dl{}, pair{}, z{};
    for (int s = 0; s < substeps; ++s) {
      sampler.sample(x, v.data(), dl.data());
      if (noisy) {
        if (dims == 1) {
          // One Box-Muller pair serves two consecutive substeps.
          if (s % 2 == 0) pair = stream.normals(ens.step_counter + static_cast<std::uint64_t>(s));
          z[0] = pair[static_cast<std::size_t>(s % 2)];
        } else {
          z = stream.normals(ens.step_counter + static_cast<std::uint64_t>(s));
        }
      }
      for (std::size_t a = 0; a < dims; ++a) {
        const double b = v[a] + osmotic_coef[a] * dl[a];
        x[a] = g.wrap(a, x[a] + b * h + noise_scale[a] * z[a]);
      }
    }
  }
  out.time = ens.time + dt;
  out.step_counter = ens.step_counter + static_cast<std::uint64_t>(substeps);
  return out;
}

/// RK4 step of dx/dt = v(x, t), with v interpolated cubically in space and
/// linearly in time between the snapshots `start` (at ens.time) and `end`.
/// Walkers whose path leaves the resolvable support are frozen.
inline EnsembleState step_bohmian(const EnsembleState& ens, const VelocityFields& start,
                                  const VelocityFields& end, double dt) {
  if (!detail::same_time(ens.time, start.time)) {
    throw Error("step_bohmian: field and ensemble times differ");
  }
  const Grid& g = start.grid;
  const std::size_t dims = ens.dims;
  if (dims != g.dims()) throw Error("step_bohmian: ensemble/grid dimension mismatch");
  const double span = end.time - start.time;
  const detail::FieldSampler s0(start), s1(end);
  EnsembleState out = ens;
  if (out.frozen.size() != ens.size()) out.frozen.assign(ens.size(), 0);
  const auto count = static_cast<std::ptrdiff_t>(ens.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t wi = 0; wi < count; ++wi) {
    const auto w = static_cast<std::size_t>(wi);
    if (out.frozen[w]) continue;
    double* x = &out.positions[w * dims];
    bool lost = false;
    auto velocity = [&](const std::array<double, 2>& p, double tau, std::array<double, 2>& v) {
      std::array<double, 2> va{}, vb{}, dl{};
      const detail::Location l = detail::locate(g, p.data());
      s0.sample(l, va.data(), dl.data());
      s1.sample(l, vb.data(), dl.data());
      const double th = span != 0.0 ? tau / span : 0.0;
      for (std::size_t a = 0; a < dims; ++a) v[a] = (1.0 - th) * va[a] + th * vb[a];
      const double r = (1.0 - th) * s0.relative_density(l) + th * s1.relative_density(l);
      if (!(r > kResolvableDensity)) lost = true;
    };
    std::array<double, 2> p{}, k1{}, k2{}, k3{}, k4{}, q{};
    for (std::size_t a = 0; a < dims; ++a) p[a] = x[a];
    velocity(p, 0.0, k1);
    for (std::size_t a = 0; a < dims; ++a) q[a] = p[a] + 0.5 * dt * k1[a];
    velocity(q, 0.5 * dt, k2);
    for (std::size_t a = 0; a < dims; ++a) q[a] = p[a] + 0.5 * dt * k2[a];
    velocity(q, 0.5 * dt, k3);
    for (std::size_t a = 0; a < dims; ++a) q[a] = p[a] + dt * k3[a];
    velocity(q, dt, k4);
    if (lost) {
      out.frozen[w] = 1;
      continue;
    }
    for (std::size_t a = 0; a < dims; ++a) {
      x[a] = g.wrap(a, p[a] + dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]));
    }
  }
  out.time = ens.time + dt;
  return out;
}

// ---------------------------------------------------------------------------
// Coupled evolution

struct CoupledOptions {
  double duration = 1.0;
  double dt = 1e-3;
  double cadence = 0.25;
  int substeps = 1;  // minimum; raised per step while the drift is stiff
  /// Target for h * max|d b_a / d x_a| over the bulk support, h = dt / substeps.
  /// Zero keeps `substeps` fixed.
  double stiffness_target = 0.02;
  std::size_t walkers = 1000;
  std::uint64_t seed = 1;
  /// Walkers kept in the TrajectoryRecord (all of them are stepped).
  std::size_t recorded_walkers = std::numeric_limits<std::size_t>::max();
  bool keep_snapshots = true;
  std::string scenario = "scenario";
};

struct CoupledRun {
  TrajectoryRecord record;
  std::vector<WaveState> snapshots;  // at record.times
  std::vector<double> ks;            // KS(walkers, rho) at record.times
  std::vector<double> norm;          // integral of rho at record.times
  std::vector<double> energy;        // ensemble Hamiltonian at record.times
  std::optional<std::string> halted;  // caustic diagnostic, if the run stopped early
  std::size_t frozen_walkers = 0;
  int max_substeps = 0;
  EnsembleState final_ensemble;
};

namespace detail {
/// Largest |d b_a / d x_a| between neighbouring nodes that are both inside
/// the bulk support.
inline double drift_stiffness(const VelocityFields& f) {
  const Grid& g = f.grid;
  const double cut = kBulkSupport * max_value(f.rho);
  double worst = 0.0;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const std::size_t st = g.stride(a);
    const int n = g.points(a);
    const double h = g.spacing(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const int k = g.index_along(i, a);
      const std::size_t j = k + 1 == n ? i - static_cast<std::size_t>(k) * st : i + st;
      if (f.rho[i] <= cut || f.rho[j] <= cut) continue;
      worst = std::max(worst, std::abs(f.drift[a][j] - f.drift[a][i]) / h);
    }
  }
  return worst;
}

inline long steps_for(double span, double dt, const char* what) {
  const double r = span / dt;
  const long n = std::lround(r);
  if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-6 * std::max(1.0, r)) {
    throw Error(std::string("run_coupled: ") + what + " must be a positive multiple of dt");
  }
  return n;
}
}  // namespace detail

/// Interleaved evolution: each step advances the fields by dt, then the
/// walkers by dt using the fields at the start of the step (epsilon = 0 uses
/// the Bohmian RK4 with both end-point snapshots). Starts from `initial` with
/// walkers optionally supplied (otherwise sampled from initial rho).
inline CoupledRun run_coupled(const WaveState& initial, const ModelParams& params,
                              const PotentialSpec& potential, const CoupledOptions& opt,
                              std::optional<EnsembleState> walkers = std::nullopt) {
  params.validate();
  const long steps = detail::steps_for(opt.duration, opt.dt, "duration");
  const long cadence = detail::steps_for(opt.cadence, opt.dt, "cadence");
  FieldEvolver evolver(initial, params, potential, opt.dt);
  EnsembleState ens =
      walkers ? std::move(*walkers) : sample_initial(initial.rho, initial.grid, opt.walkers, opt.seed, initial.time);
  ens.time = initial.time;

  CoupledRun run;
  run.record.walkers = std::min(opt.recorded_walkers, ens.size());
  run.record.dims = ens.dims;
  run.record.epsilon = params.epsilon;
  run.record.scenario = opt.scenario;
  run.record.seed = ens.seed;

  auto record = [&]() {
    const WaveState& s = evolver.state();
    run.record.times.push_back(s.time);
    run.record.positions.emplace_back(ens.positions.begin(),
                                      ens.positions.begin() + static_cast<long>(run.record.walkers * ens.dims));
    run.ks.push_back(ks_distance(ens, s.rho, s.grid));
    run.norm.push_back(total_probability(s));
    run.energy.push_back(ensemble_hamiltonian(s, params, potential));
    if (opt.keep_snapshots) run.snapshots.push_back(s);
  };

  record();
  VelocityFields current = evolver.fields();
  for (long n = 1; n <= steps; ++n) {
    try {
      evolver.step();
    } catch (const CausticError& e) {
      run.halted = e.what();
      break;
    }
    VelocityFields next = evolver.fields();
    if (params.epsilon == 0.0) {
      ens = step_bohmian(ens, current, next, opt.dt);
    } else {
      int k = opt.substeps;
      if (opt.stiffness_target > 0.0) {
        const double need = std::ceil(detail::drift_stiffness(current) * opt.dt / opt.stiffness_target);
        k = static_cast<int>(std::clamp(need, static_cast<double>(k), 16.0));
      }
      run.max_substeps = std::max(run.max_substeps, k);
      ens = step_walkers(ens, current, params, opt.dt, k);
    }
    // Keep the ensemble clock tied to the field clock.
    ens.time = evolver.time();
    current = std::move(next);
    if (n % cadence == 0) record();
  }
  for (auto f : ens.frozen) run.frozen_walkers += f;
  run.final_ensemble = std::move(ens);
  return run;
}

/// Mean over walkers of the summed squared increments between consecutive
/// recorded times within [t0, t0 + tau] (minimal-image displacements).
inline double quadratic_variation(const TrajectoryRecord& rec, const Grid& g, std::size_t first,
                                  std::size_t count, std::size_t coordinate = 0) {
  if (first + count >= rec.times.size()) throw Error("quadratic_variation: window out of range");
  double total = 0.0;
  for (std::size_t w = 0; w < rec.walkers; ++w) {
    double acc = 0.0;
    for (std::size_t k = first; k < first + count; ++k) {
      const double d = g.minimal_image(coordinate, rec.positions[k + 1][w * rec.dims + coordinate] -
                                                       rec.positions[k][w * rec.dims + coordinate]);
      acc += d * d;
    }
    total += acc;
  }
  return total / static_cast<double>(rec.walkers);
}

}  // namespace edlab

#endif  // EDLAB_ENSEMBLE_HPP_
