// Domain types and numerical primitives shared by every edlab module:
// model parameters, the periodic configuration-space grid, spectral and
// finite-difference derivatives, quadrature, potentials and initial states.

#ifndef EDLAB_CORE_HPP_
#define EDLAB_CORE_HPP_

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace edlab {

using cplx = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<cplx>;
/// One real field per configuration-space coordinate.
using VectorField = std::vector<RealField>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative density below which log rho and the phase are clamped.
inline constexpr double kRhoFloor = 1e-300;

// ---------------------------------------------------------------------------
// ModelParams

enum class DynamicsClass { quantum, hybrid };

struct ModelParams {
  std::vector<double> masses{1.0};  // one per coordinate, or a single shared value
  double hbar = 1.0;
  double xi = 0.125;
  double epsilon = 1.0;
  double eta_tilde = 1.0;
  double dt = 1e-3;

  /// Quantum-class parameters with xi = hbar^2/8.
  static ModelParams quantum(double hbar = 1.0, double mass = 1.0, double epsilon = 1.0,
                             double dt = 1e-3) {
    ModelParams p;
    p.masses = {mass};
    p.hbar = hbar;
    p.xi = hbar * hbar / 8.0;
    p.epsilon = epsilon;
    p.dt = dt;
    p.validate();
    return p;
  }

  /// Hybrid class: xi = 0, hbar kept only as the unit needed to build Psi.
  static ModelParams hybrid(double hbar = 1.0, double mass = 1.0, double epsilon = 1.0,
                            double dt = 1e-3) {
    ModelParams p = quantum(hbar, mass, epsilon, dt);
    p.xi = 0.0;
    return p;
  }

  DynamicsClass dynamics_class() const {
    return xi > 0.0 ? DynamicsClass::quantum : DynamicsClass::hybrid;
  }

  double mass(std::size_t coordinate) const {
    return masses.size() == 1 ? masses.front() : masses.at(coordinate);
  }

  /// Throws Error if any invariant is violated.
  void validate() const {
    if (masses.empty()) throw Error("ModelParams: at least one mass is required");
    for (double m : masses) {
      if (!(m > 0.0) || !std::isfinite(m)) throw Error("ModelParams: masses must be > 0");
    }
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw Error("ModelParams: hbar must be > 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("ModelParams: dt must be > 0");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw Error("ModelParams: epsilon must be >= 0");
    }
    if (!(eta_tilde > 0.0) || !std::isfinite(eta_tilde)) {
      throw Error("ModelParams: eta_tilde must be > 0");
    }
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw Error("ModelParams: xi must be >= 0");
    if (xi > 0.0) {
      const double expected = hbar * hbar / 8.0;
      if (std::abs(xi - expected) > 4.0 * std::numeric_limits<double>::epsilon() * expected) {
        throw Error("ModelParams: quantum class requires xi = hbar^2/8");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Grid

namespace detail {

// FFTW planning is not thread-safe; execution with fftw_execute_dft is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlans {
 public:
  explicit FftPlans(const std::vector<int>& shape) {
    std::size_t total = 1;
    for (int n : shape) total *= static_cast<std::size_t>(n);
    std::vector<cplx> scratch_in(total), scratch_out(total);
    auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
    auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
    std::lock_guard lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), in, out,
                             FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), in, out,
                              FFTW_BACKWARD, flags);
    if (forward_ == nullptr || backward_ == nullptr) throw Error("FFTW planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(std::span<const cplx> in, std::span<cplx> out) const {
    fftw_execute_dft(forward_, const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }
  // Unnormalized.
  void backward(std::span<const cplx> in, std::span<cplx> out) const {
    fftw_execute_dft(backward_, const_cast<fftw_complex*>(reinterpret_cast<const fftw_complex*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace detail

/// Periodic lattice over [-extent/2, extent/2) per coordinate, row-major
/// (coordinate 0 varies slowest).
class Grid {
 public:
  Grid(std::vector<int> points, std::vector<double> extent)
      : points_(std::move(points)), extent_(std::move(extent)) {
    if (points_.empty() || points_.size() != extent_.size()) {
      throw Error("Grid: points and extent must have one entry per dimension");
    }
    for (std::size_t a = 0; a < points_.size(); ++a) {
      if (points_[a] < 8) throw Error("Grid: points per dimension must be >= 8");
      if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a])) {
        throw Error("Grid: extent must be positive");
      }
    }
    size_ = 1;
    for (int n : points_) size_ *= static_cast<std::size_t>(n);
    strides_.assign(points_.size(), 1);
    for (std::size_t a = points_.size() - 1; a > 0; --a) {
      strides_[a - 1] = strides_[a] * static_cast<std::size_t>(points_[a]);
    }
    wavenumbers_.resize(points_.size());
    for (std::size_t a = 0; a < points_.size(); ++a) {
      const int n = points_[a];
      auto& k = wavenumbers_[a];
      k.resize(static_cast<std::size_t>(n));
      const double dk = 2.0 * std::numbers::pi / extent_[a];
      for (int i = 0; i < n; ++i) {
        const int m = i <= n / 2 ? i : i - n;
        k[static_cast<std::size_t>(i)] = dk * m;
      }
    }
    plans_ = std::make_shared<const detail::FftPlans>(points_);
  }

  std::size_t dims() const { return points_.size(); }
  std::size_t size() const { return size_; }
  int points(std::size_t a) const { return points_.at(a); }
  const std::vector<int>& shape() const { return points_; }
  double extent(std::size_t a) const { return extent_.at(a); }
  double spacing(std::size_t a) const { return extent_.at(a) / points_.at(a); }
  double lower(std::size_t a) const { return -0.5 * extent_.at(a); }
  double coordinate(std::size_t a, int i) const { return lower(a) + i * spacing(a); }
  std::size_t stride(std::size_t a) const { return strides_[a]; }
  double cell_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dims(); ++a) v *= spacing(a);
    return v;
  }
  /// Angular wavenumbers in FFT order, per coordinate.
  const std::vector<double>& wavenumbers(std::size_t a) const { return wavenumbers_.at(a); }
  double max_wavenumber(std::size_t a) const { return std::numbers::pi / spacing(a); }

  int index_along(std::size_t flat, std::size_t a) const {
    return static_cast<int>((flat / strides_[a]) % static_cast<std::size_t>(points_[a]));
  }
  /// Coordinate a of the lattice point with flat index `flat`.
  double position(std::size_t flat, std::size_t a) const {
    return coordinate(a, index_along(flat, a));
  }
  /// Wrap a coordinate into the periodic box.
  double wrap(std::size_t a, double x) const {
    const double l = extent_[a];
    if (x >= lower(a) && x < lower(a) + l) return x;
    double y = std::fmod(x - lower(a), l);
    if (y < 0.0) y += l;
    if (y >= l) y -= l;
    return lower(a) + y;
  }
  /// Shortest periodic displacement.
  double minimal_image(std::size_t a, double dx) const {
    const double l = extent_[a];
    return dx - l * std::round(dx / l);
  }

  const detail::FftPlans& fft() const { return *plans_; }

  bool same_layout(const Grid& other) const {
    return points_ == other.points_ && extent_ == other.extent_;
  }

 private:
  std::vector<int> points_;
  std::vector<double> extent_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<std::vector<double>> wavenumbers_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

inline Grid build_grid(int dims, int points, double extent) {
  if (dims < 1 || dims > 2) throw Error("build_grid: dims must be 1 or 2");
  return Grid(std::vector<int>(static_cast<std::size_t>(dims), points),
              std::vector<double>(static_cast<std::size_t>(dims), extent));
}

// ---------------------------------------------------------------------------
// Spectral calculus

inline ComplexField to_fourier(const ComplexField& f, const Grid& g) {
  ComplexField out(g.size());
  g.fft().forward(f, out);
  return out;
}

/// Inverse transform including the 1/N normalization.
inline ComplexField from_fourier(const ComplexField& f, const Grid& g) {
  ComplexField out(g.size());
  g.fft().backward(f, out);
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& z : out) z *= scale;
  return out;
}

namespace detail {
// Multiply Fourier coefficients by (i k_a)^order; the Nyquist mode is
// dropped for odd orders so real fields stay real.
inline void apply_derivative_symbol(ComplexField& spectrum, const Grid& g, std::size_t a,
                                    int order) {
  const auto& k = g.wavenumbers(a);
  const int n = g.points(a);
  for (std::size_t j = 0; j < spectrum.size(); ++j) {
    const int i = g.index_along(j, a);
    if ((order % 2 == 1) && n % 2 == 0 && i == n / 2) {
      spectrum[j] = 0.0;
      continue;
    }
    const cplx ik(0.0, k[static_cast<std::size_t>(i)]);
    cplx factor = 1.0;
    for (int o = 0; o < order; ++o) factor *= ik;
    spectrum[j] *= factor;
  }
}
}  // namespace detail

/// Fourier-collocation derivative d/dx_a of a complex periodic field.
inline ComplexField spectral_derivative(const ComplexField& f, const Grid& g, std::size_t a,
                                        int order = 1) {
  if (f.size() != g.size()) throw Error("spectral_derivative: field/grid size mismatch");
  ComplexField spec = to_fourier(f, g);
  detail::apply_derivative_symbol(spec, g, a, order);
  return from_fourier(spec, g);
}

/// Spectral derivative of a real periodic field.
inline RealField spectral_derivative(const RealField& f, const Grid& g, std::size_t a) {
  ComplexField z(f.begin(), f.end());
  const ComplexField d = spectral_derivative(z, g, a);
  RealField out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = d[i].real();
  return out;
}

/// Spectral gradient of a real periodic field: one component per coordinate.
inline VectorField gradient(const RealField& f, const Grid& g) {
  if (f.size() != g.size()) throw Error("gradient: field/grid size mismatch");
  ComplexField z(f.begin(), f.end());
  const ComplexField spec = to_fourier(z, g);
  VectorField out(g.dims(), RealField(g.size()));
  for (std::size_t a = 0; a < g.dims(); ++a) {
    ComplexField s = spec;
    detail::apply_derivative_symbol(s, g, a, 1);
    const ComplexField d = from_fourier(s, g);
    for (std::size_t i = 0; i < d.size(); ++i) out[a][i] = d[i].real();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite differences for non-periodic fields (the phase)

/// Fornberg's algorithm: weights of the first derivative at x0 on nodes xs.
inline std::vector<double> fornberg_first_derivative(double x0, std::span<const double> xs) {
  const std::size_t n = xs.size();
  // c[j][k]: weight of node j for derivative order k (k = 0, 1).
  std::vector<std::array<double, 2>> c(n, {0.0, 0.0});
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min<std::size_t>(i, 1);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[i][k] = c1 * (static_cast<double>(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        }
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[j][k] = (c4 * c[j][k] - static_cast<double>(k) * c[j][k - 1]) / c3;
      }
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = c[j][1];
  return w;
}

namespace detail {
struct FdStencils {
  // stencils[i] = (first node offset, weights) for the i-th point from the
  // left edge; interior stencil is stencils[half].
  std::vector<std::pair<int, std::vector<double>>> left;
  std::vector<double> central;
  int half = 0;
};

inline const FdStencils& sixth_order_stencils() {
  static const FdStencils s = [] {
    FdStencils st;
    st.half = 3;
    const int width = 7;
    std::vector<double> nodes(width);
    for (int j = 0; j < width; ++j) nodes[static_cast<std::size_t>(j)] = j;
    for (int i = 0; i < st.half; ++i) {
      st.left.emplace_back(0, fornberg_first_derivative(static_cast<double>(i), nodes));
    }
    st.central = fornberg_first_derivative(3.0, nodes);
    return st;
  }();
  return s;
}
}  // namespace detail

/// Sixth-order finite-difference derivative along coordinate a that does NOT
/// wrap around the box; one-sided stencils are used near both edges. Exact
/// for polynomials up to degree six, so linear and quadratic phases
/// differentiate without error.
inline RealField finite_difference_derivative(const RealField& f, const Grid& g, std::size_t a) {
  if (f.size() != g.size()) throw Error("finite_difference_derivative: size mismatch");
  const auto& st = detail::sixth_order_stencils();
  const int n = g.points(a);
  const double inv_h = 1.0 / g.spacing(a);
  const std::size_t stride = g.stride(a);
  RealField out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const int i = g.index_along(j, a);
    const std::size_t base = j - static_cast<std::size_t>(i) * stride;
    auto at = [&](int m) { return f[base + static_cast<std::size_t>(m) * stride]; };
    double acc = 0.0;
    if (i < st.half) {
      const auto& w = st.left[static_cast<std::size_t>(i)].second;
      for (int m = 0; m < 7; ++m) acc += w[static_cast<std::size_t>(m)] * at(m);
    } else if (i >= n - st.half) {
      // Mirror of the left stencil: derivative flips sign.
      const auto& w = st.left[static_cast<std::size_t>(n - 1 - i)].second;
      for (int m = 0; m < 7; ++m) acc -= w[static_cast<std::size_t>(m)] * at(n - 1 - m);
    } else {
      for (int m = -3; m <= 3; ++m) acc += st.central[static_cast<std::size_t>(m + 3)] * at(i + m);
    }
    out[j] = acc * inv_h;
  }
  return out;
}

inline VectorField finite_difference_gradient(const RealField& f, const Grid& g) {
  VectorField out;
  out.reserve(g.dims());
  for (std::size_t a = 0; a < g.dims(); ++a) out.push_back(finite_difference_derivative(f, g, a));
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature (fixed summation order, so results are reproducible)

inline double integrate(std::span<const double> f, const Grid& g) {
  double s = 0.0;
  for (double v : f) s += v;
  return s * g.cell_volume();
}

/// Integral of w * f over the grid.
inline double integrate_weighted(std::span<const double> w, std::span<const double> f,
                                 const Grid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f[i];
  return s * g.cell_volume();
}

inline double max_value(std::span<const double> f) {
  return f.empty() ? 0.0 : *std::max_element(f.begin(), f.end());
}

// ---------------------------------------------------------------------------
// Potentials

struct FreePotential {};
struct HarmonicPotential {
  std::vector<double> omega;  // per coordinate; a single value applies to all
};
/// Smooth Gaussian bump of the given height along coordinate 0.
struct BarrierPotential {
  double height = 1.0;
  double width = 0.5;
  double center = 0.0;
};
/// Two-dimensional wall along x0 = center with two Gaussian openings at
/// x1 = +/- separation/2.
struct DoubleSlitPotential {
  double height = 50.0;
  double wall_width = 0.2;
  double center = 0.0;
  double separation = 2.0;
  double slit_width = 0.3;
};
struct TabulatedPotential {
  RealField values;
};

using PotentialSpec = std::variant<FreePotential, HarmonicPotential, BarrierPotential,
                                   DoubleSlitPotential, TabulatedPotential>;

inline std::string potential_name(const PotentialSpec& p) {
  static constexpr std::array<const char*, 5> names{"free", "harmonic", "barrier",
                                                    "double-gaussian-slit", "tabulated"};
  return names[p.index()];
}

/// Potential V sampled at every lattice point.
inline RealField evaluate_potential(const PotentialSpec& spec, const Grid& g,
                                    const ModelParams& params) {
  RealField v(g.size(), 0.0);
  if (const auto* h = std::get_if<HarmonicPotential>(&spec)) {
    if (h->omega.empty()) throw Error("harmonic potential needs omega");
    for (std::size_t j = 0; j < g.size(); ++j) {
      double s = 0.0;
      for (std::size_t a = 0; a < g.dims(); ++a) {
        const double w = h->omega.size() == 1 ? h->omega[0] : h->omega.at(a);
        const double x = g.position(j, a);
        s += 0.5 * params.mass(a) * w * w * x * x;
      }
      v[j] = s;
    }
  } else if (const auto* b = std::get_if<BarrierPotential>(&spec)) {
    if (!(b->width > 0.0)) throw Error("barrier width must be > 0");
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double z = (g.position(j, 0) - b->center) / b->width;
      v[j] = b->height * std::exp(-0.5 * z * z);
    }
  } else if (const auto* s = std::get_if<DoubleSlitPotential>(&spec)) {
    if (g.dims() != 2) throw Error("double-gaussian-slit requires a 2-D grid");
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double zw = (g.position(j, 0) - s->center) / s->wall_width;
      const double y = g.position(j, 1);
      const double z1 = (y - 0.5 * s->separation) / s->slit_width;
      const double z2 = (y + 0.5 * s->separation) / s->slit_width;
      const double openings = std::exp(-0.5 * z1 * z1) + std::exp(-0.5 * z2 * z2);
      v[j] = s->height * std::exp(-0.5 * zw * zw) * std::max(0.0, 1.0 - openings);
    }
  } else if (const auto* t = std::get_if<TabulatedPotential>(&spec)) {
    if (t->values.size() != g.size()) throw Error("tabulated potential has wrong size");
    v = t->values;
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw Error("potential is not finite on the grid");
  }
  return v;
}

// ---------------------------------------------------------------------------
// WaveState

/// Macroscopic state (rho, Phi). Quantum-class states additionally carry Psi,
/// which is then the canonical storage; rho and Phi are derived from it.
struct WaveState {
  Grid grid;
  RealField rho;
  RealField phase;
  double time = 0.0;
  std::optional<ComplexField> psi;
};

/// Index of the largest entry.
inline std::size_t argmax(std::span<const double> f) {
  return static_cast<std::size_t>(std::distance(f.begin(), std::max_element(f.begin(), f.end())));
}

inline double wrap_angle(double a) {
  return a - 2.0 * std::numbers::pi * std::round(a / (2.0 * std::numbers::pi));
}

/// Phase Phi = hbar * arg(Psi), unwrapped along grid lines starting from the
/// density maximum. Below the density floor the last good value is held.
inline RealField unwrap_phase(const ComplexField& psi, const Grid& g, double hbar) {
  const std::size_t n = g.size();
  RealField dens(n);
  for (std::size_t i = 0; i < n; ++i) dens[i] = std::norm(psi[i]);
  const double floor = kRhoFloor * max_value(dens);
  RealField angle(n, 0.0);
  std::vector<bool> ok(n);
  for (std::size_t i = 0; i < n; ++i) ok[i] = dens[i] > floor;

  auto unwrap_line = [&](std::size_t start, std::size_t a) {
    const int len = g.points(a);
    const int i0 = g.index_along(start, a);
    const std::size_t stride = g.stride(a);
    const std::size_t base = start - static_cast<std::size_t>(i0) * stride;
    for (int dir : {+1, -1}) {
      double prev_raw = std::arg(psi[start]);
      double prev = angle[start];
      for (int i = i0 + dir; i >= 0 && i < len; i += dir) {
        const std::size_t j = base + static_cast<std::size_t>(i) * stride;
        if (!ok[j]) {
          angle[j] = prev;
          continue;
        }
        const double raw = std::arg(psi[j]);
        prev = prev + wrap_angle(raw - prev_raw);
        prev_raw = raw;
        angle[j] = prev;
      }
    }
  };

  const std::size_t start = argmax(dens);
  angle[start] = std::arg(psi[start]);
  if (g.dims() == 1) {
    unwrap_line(start, 0);
  } else {
    // Row through the maximum along coordinate 1, then every column along 0.
    unwrap_line(start, 1);
    const int i0 = g.index_along(start, 0);
    for (int c = 0; c < g.points(1); ++c) {
      const std::size_t j = static_cast<std::size_t>(i0) * g.stride(0) + static_cast<std::size_t>(c);
      unwrap_line(j, 0);
    }
  }
  for (auto& v : angle) v *= hbar;
  return angle;
}

/// Net number of 2*pi windings of arg(Psi) around the periodic box along
/// coordinate 0 (through the density maximum). Diagnostic only.
inline long phase_winding(const ComplexField& psi, const Grid& g) {
  RealField dens(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) dens[i] = std::norm(psi[i]);
  const std::size_t start = argmax(dens);
  const int i0 = g.index_along(start, 0);
  const std::size_t base = start - static_cast<std::size_t>(i0) * g.stride(0);
  const int n = g.points(0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::size_t j0 = base + static_cast<std::size_t>(i) * g.stride(0);
    const std::size_t j1 = base + static_cast<std::size_t>((i + 1) % n) * g.stride(0);
    total += wrap_angle(std::arg(psi[j1]) - std::arg(psi[j0]));
  }
  return std::lround(total / (2.0 * std::numbers::pi));
}

/// Quantum-class state from Psi.
inline WaveState state_from_psi(const Grid& g, ComplexField psi, double hbar, double time) {
  WaveState s{g, RealField(g.size()), RealField{}, time, std::nullopt};
  for (std::size_t i = 0; i < psi.size(); ++i) s.rho[i] = std::norm(psi[i]);
  s.phase = unwrap_phase(psi, g, hbar);
  s.psi = std::move(psi);
  return s;
}

/// Psi = rho^{1/2} exp(i Phi / hbar); returns the stored Psi when present.
inline ComplexField assemble_psi(const WaveState& s, double hbar) {
  if (s.psi) return *s.psi;
  ComplexField psi(s.rho.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = std::polar(std::sqrt(std::max(s.rho[i], 0.0)), s.phase[i] / hbar);
  }
  return psi;
}

inline double total_probability(const WaveState& s) { return integrate(s.rho, s.grid); }

// ---------------------------------------------------------------------------
// Scenarios

enum class ScenarioKind { gaussian, coherent, two_gaussian_superposition, correlated_pair };

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::gaussian;
  double x0 = 0.0;      // centre (gaussian, coherent)
  double sigma0 = 1.0;  // width (gaussian, superposition, correlated pair)
  double k0 = 0.0;      // wavenumber of the plane phase Phi = hbar k0 x
  double omega = 1.0;   // coherent-state frequency
  double separation = 2.0;   // packets at +/- separation (superposition)
  double correlation = 0.0;  // correlated pair

  std::string name() const {
    switch (kind) {
      case ScenarioKind::gaussian: return "gaussian";
      case ScenarioKind::coherent: return "coherent";
      case ScenarioKind::two_gaussian_superposition: return "two-gaussian-superposition";
      case ScenarioKind::correlated_pair: return "two-particle-correlated-gaussian";
    }
    return "unknown";
  }

  static ScenarioKind parse_kind(const std::string& name) {
    if (name == "gaussian") return ScenarioKind::gaussian;
    if (name == "coherent") return ScenarioKind::coherent;
    if (name == "two-gaussian-superposition") return ScenarioKind::two_gaussian_superposition;
    if (name == "two-particle-correlated-gaussian") return ScenarioKind::correlated_pair;
    throw Error("unknown scenario: " + name);
  }
};

/// Width of the scenario's initial packet (per coordinate).
inline double scenario_width(const ScenarioSpec& spec, const ModelParams& params) {
  if (spec.kind == ScenarioKind::coherent) {
    if (!(spec.omega > 0.0)) throw Error("coherent scenario needs omega > 0");
    return std::sqrt(params.hbar / (2.0 * params.mass(0) * spec.omega));
  }
  return spec.sigma0;
}

namespace detail {
inline void normalize(WaveState& s) {
  const double norm = integrate(s.rho, s.grid);
  if (!(norm > 0.0)) throw Error("scenario density vanishes on the grid");
  for (auto& r : s.rho) r /= norm;
  if (s.psi) {
    const double f = 1.0 / std::sqrt(norm);
    for (auto& z : *s.psi) z *= f;
    // Recompute rho from the scaled Psi so both views agree bit-for-bit.
    for (std::size_t i = 0; i < s.rho.size(); ++i) s.rho[i] = std::norm((*s.psi)[i]);
  }
}
}  // namespace detail

/// Normalized initial state. Quantum-class params attach Psi; hybrid ones
/// keep (rho, Phi) only.
inline WaveState init_scenario(const ScenarioSpec& spec, const Grid& g, const ModelParams& params) {
  params.validate();
  const double sigma = scenario_width(spec, params);
  if (!(sigma > 0.0)) throw Error("scenario width must be > 0");
  for (std::size_t a = 0; a < g.dims(); ++a) {
    if (sigma < 3.0 * g.spacing(a)) {
      throw Error("scenario under-resolved: sigma0 < 3 * grid spacing");
    }
  }
  const bool quantum = params.dynamics_class() == DynamicsClass::quantum;
  const double hbar = params.hbar;
  WaveState s{g, RealField(g.size()), RealField(g.size(), 0.0), 0.0, std::nullopt};

  switch (spec.kind) {
    case ScenarioKind::gaussian:
    case ScenarioKind::coherent: {
      const double k0 = spec.kind == ScenarioKind::coherent ? 0.0 : spec.k0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        double e = 0.0, ph = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a) {
          const double x = g.position(j, a);
          const double z = (x - (a == 0 ? spec.x0 : 0.0)) / sigma;
          e += -0.5 * z * z;
          if (a == 0) ph = hbar * k0 * x;
        }
        s.rho[j] = std::exp(e);
        s.phase[j] = ph;
      }
      if (quantum) {
        ComplexField psi(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) {
          psi[j] = std::polar(std::sqrt(s.rho[j]), s.phase[j] / hbar);
        }
        s.psi = std::move(psi);
      }
      break;
    }
    case ScenarioKind::two_gaussian_superposition: {
      ComplexField psi(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) {
        double amp1 = 0.0, amp2 = 0.0;
        for (std::size_t a = 0; a < g.dims(); ++a) {
          const double x = g.position(j, a);
          const double shift = a == 0 ? spec.separation : 0.0;
          const double z1 = (x - shift) / sigma, z2 = (x + shift) / sigma;
          amp1 += -0.25 * z1 * z1;
          amp2 += -0.25 * z2 * z2;
        }
        psi[j] = std::exp(amp1) + std::exp(amp2);
      }
      for (std::size_t j = 0; j < g.size(); ++j) s.rho[j] = std::norm(psi[j]);
      // Both packets are real and positive: Phi vanishes identically.
      if (quantum) s.psi = std::move(psi);
      break;
    }
    case ScenarioKind::correlated_pair: {
      if (g.dims() != 2) throw Error("two-particle-correlated-gaussian needs a 2-D grid");
      const double c = spec.correlation;
      if (!(std::abs(c) < 1.0)) throw Error("correlation must lie in (-1, 1)");
      const double det = 1.0 - c * c;
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.position(j, 0) / sigma, y = g.position(j, 1) / sigma;
        s.rho[j] = std::exp(-0.5 * (x * x - 2.0 * c * x * y + y * y) / det);
      }
      if (quantum) {
        ComplexField psi(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) psi[j] = std::sqrt(s.rho[j]);
        s.psi = std::move(psi);
      }
      break;
    }
  }
  detail::normalize(s);
  return s;
}

}  // namespace edlab

#endif  // EDLAB_CORE_HPP_
