#pragma once

// Self-similar frames of the heat flow with diffusivity 1/2:
//   physical u(y, tau) -> Fokker-Planck v(x, t), v = s^N u(s x, tau),
//   s = (1 + tau)^{1/2}, t = log(s)
//   -> Ornstein-Uhlenbeck w = v / G -> Hamiltonian z = v / G^{1/2},
// with G the stationary Gaussian. Also the frame operators and the
// quadratic / entropy functionals.

#include <cmath>
#include <limits>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/numeric.hpp"
#include "heatlab/semigroup.hpp"

namespace heatlab {

inline double fp_time_from_heat(double tau) { return 0.5 * std::log1p(tau); }
inline double heat_time_from_fp(double t) { return std::expm1(2.0 * t); }

enum class Frame { Physical, FokkerPlanck, OrnsteinUhlenbeck, Hamiltonian };

/// A field tagged with its frame; field.time() is heat time tau in the
/// physical frame and log-time t in the others.
struct RenormFrame {
  Frame frame;
  Field field;
};

// ---- frame maps -----------------------------------------------------------

/// Exact lattice form: node i of the result sits at y_i / s.
inline Field to_fokker_planck(const Field& u) {
  require(u.diffusivity() == Diffusivity::Half, ErrorKind::DiffusivityMismatch,
          "the Fokker-Planck map expects the diffusivity-1/2 heat flow");
  const double tau = u.time();
  const double s = std::sqrt(1.0 + tau);
  const GridSpec g = scale_grid(u.grid(), 1.0 / s);
  const double amplitude = std::pow(s, u.grid().dim);
  std::vector<double> v(u.values().begin(), u.values().end());
  for (double& x : v) x *= amplitude;
  return Field(g, std::move(v), fp_time_from_heat(tau));
}

inline Field from_fokker_planck(const Field& v) {
  const double tau = heat_time_from_fp(v.time());
  const double s = std::sqrt(1.0 + tau);
  const GridSpec g = scale_grid(v.grid(), s);
  const double amplitude = std::pow(s, -v.grid().dim);
  std::vector<double> u(v.values().begin(), v.values().end());
  for (double& x : u) x *= amplitude;
  return Field(g, std::move(u), tau, Diffusivity::Half);
}

/// Sampled form: v(., t) on `target` from the solution handle at heat time tau.
inline Field to_fokker_planck(const Solution& u, double tau, const GridSpec& target) {
  require(u.data().diffusivity() == Diffusivity::Half, ErrorKind::DiffusivityMismatch,
          "the Fokker-Planck map expects the diffusivity-1/2 heat flow");
  require(tau >= 0.0, ErrorKind::NonPositiveTime, "heat time must be nonnegative");
  const double t = fp_time_from_heat(tau);
  const Field sampled = tau == 0.0 ? u.sample(target, 0.0) : u.rescale(std::sqrt(1.0 + tau)).sample(target, tau / (1.0 + tau));
  return Field(target, {sampled.values().begin(), sampled.values().end()}, t);
}

namespace detail {

inline Field gauss_scaled(const Field& f, double power) {
  // f * G^power, with log G evaluated analytically
  const int dim = f.grid().dim;
  const double log_norm = -0.5 * dim * std::log(2.0 * kPi);
  return map_nodes(f, [&](const Point& x, double v) { return v * std::exp(power * (log_norm - 0.5 * norm2(x))); });
}

}  // namespace detail

inline Field to_ou(const Field& v) {
  require_inverse_gauss_safe(v.grid());
  return detail::gauss_scaled(v, -1.0);
}
inline Field fp_from_ou(const Field& w) { return detail::gauss_scaled(w, 1.0); }
inline Field to_hamiltonian(const Field& v) {
  require_inverse_gauss_safe(v.grid());
  return detail::gauss_scaled(v, -0.5);
}
inline Field fp_from_hamiltonian(const Field& z) { return detail::gauss_scaled(z, 0.5); }

inline RenormFrame convert(const RenormFrame& f, Frame target) {
  if (f.frame == target) return f;
  Field v = f.field;
  switch (f.frame) {
    case Frame::Physical: v = to_fokker_planck(f.field); break;
    case Frame::OrnsteinUhlenbeck: v = fp_from_ou(f.field); break;
    case Frame::Hamiltonian: v = fp_from_hamiltonian(f.field); break;
    case Frame::FokkerPlanck: break;
  }
  switch (target) {
    case Frame::Physical: return {target, from_fokker_planck(v)};
    case Frame::OrnsteinUhlenbeck: return {target, to_ou(v)};
    case Frame::Hamiltonian: return {target, to_hamiltonian(v)};
    case Frame::FokkerPlanck: break;
  }
  return {target, v};
}

// ---- finite differences ---------------------------------------------------

inline constexpr std::size_t kStencilRing = 2;

/// Fourth-order central first derivative along `axis`; the two outer node
/// rings are set to zero.
inline Field gradient(const Field& f, int axis) {
  const GridSpec& g = f.grid();
  const std::size_t st = g.stride(axis);
  const double h = g.spacing;
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!g.is_interior(i, kStencilRing)) continue;
    out[i] = (-f[i + 2 * st] + 8.0 * f[i + st] - 8.0 * f[i - st] + f[i - 2 * st]) / (12.0 * h);
  }
  return f.with_values(std::move(out));
}

inline Field laplacian(const Field& f) {
  const GridSpec& g = f.grid();
  const double h2 = g.spacing * g.spacing;
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!g.is_interior(i, kStencilRing)) continue;
    double acc = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const std::size_t st = g.stride(a);
      acc += (-f[i + 2 * st] + 16.0 * f[i + st] - 30.0 * f[i] + 16.0 * f[i - st] - f[i - 2 * st]) / (12.0 * h2);
    }
    out[i] = acc;
  }
  return f.with_values(std::move(out));
}

namespace detail {

/// sum_a x_a d_a f
inline Field radial_derivative(const Field& f) {
  std::vector<double> acc(f.size(), 0.0);
  for (int a = 0; a < f.grid().dim; ++a) {
    const Field da = gradient(f, a);
    for (std::size_t i = 0; i < f.size(); ++i) acc[i] += f.grid().node(i)[a] * da[i];
  }
  return f.with_values(std::move(acc));
}

inline Field zero_ring(const Field& f) {
  std::vector<double> out(f.values().begin(), f.values().end());
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!f.grid().is_interior(i, kStencilRing)) out[i] = 0.0;
  return f.with_values(std::move(out));
}

}  // namespace detail

/// Lap v + x . grad v + N v
inline Field fp_operator(const Field& v) {
  const double n = v.grid().dim;
  return detail::zero_ring(laplacian(v) + detail::radial_derivative(v) + n * v);
}

/// Lap w - x . grad w
inline Field ou_operator(const Field& w) { return laplacian(w) - detail::radial_derivative(w); }

inline double hamiltonian_potential(const Point& x, int dim) { return 0.25 * norm2(x) - 0.5 * dim; }

/// -Lap z + V z
inline Field hamiltonian(const Field& z) {
  const int dim = z.grid().dim;
  const Field potential_term = map_nodes(z, [dim](const Point& x, double v) { return hamiltonian_potential(x, dim) * v; });
  return detail::zero_ring(potential_term - laplacian(z));
}

// ---- Gaussian-measure functionals ----------------------------------------

inline double mu_inner(const Field& a, const Field& b) {
  require_compatible(a, b);
  const Field prod = combine(a, b, [](double x, double y) { return x * y; });
  return quadrature(prod, [&](const Point& x) { return stationary_gaussian(x, a.grid().dim); });
}

inline double mu_mean(const Field& w) {
  return quadrature(w, [&](const Point& x) { return stationary_gaussian(x, w.grid().dim); });
}

/// integral of grad a . grad b dmu
inline double dirichlet_form(const Field& a, const Field& b) {
  double acc = 0.0;
  for (int axis = 0; axis < a.grid().dim; ++axis) acc += mu_inner(gradient(a, axis), gradient(b, axis));
  return acc;
}

struct SymmetryDefect {
  double defect = 0.0;              // |<L w1, w2> - <w1, L w2>|
  double dirichlet_form_gap = 0.0;  // |<L w1, w2> + int grad w1 . grad w2 dmu|
  double pairing = 0.0;             // <L w1, w2>
};

inline SymmetryDefect ou_symmetry_defect(const Field& w1, const Field& w2) {
  SymmetryDefect d;
  d.pairing = mu_inner(ou_operator(w1), w2);
  d.defect = std::abs(d.pairing - mu_inner(w1, ou_operator(w2)));
  d.dirichlet_form_gap = std::abs(d.pairing + dirichlet_form(w1, w2));
  return d;
}

/// integral of |w - 1|^2 dmu
inline double ou_energy(const Field& w) {
  const Field d = map_nodes(w, [](const Point&, double v) { return v - 1.0; });
  return mu_inner(d, d);
}

/// 2 integral of |grad w|^2 dmu, the decay rate of ou_energy.
inline double ou_dissipation(const Field& w) { return 2.0 * dirichlet_form(w, w); }

inline double gaussian_poincare_gap(const Field& w) {
  const double mean = mu_mean(w);
  return dirichlet_form(w, w) - (mu_inner(w, w) - mean * mean);
}

// ---- entropy --------------------------------------------------------------

inline constexpr double kDensityFloor = 1e-300;

namespace detail {

inline void require_probability_density(const Field& v) {
  double peak = 0.0;
  for (double x : v.values()) peak = std::max(peak, std::abs(x));
  for (std::size_t i = 0; i < v.size(); ++i)
    // convolution roundoff may leave values of order 1e-17 * peak below zero
    require(v[i] >= -1e-14 * peak, ErrorKind::NegativeDensity,
            "density is negative (" + std::to_string(v[i]) + ") at node " + std::to_string(i));
  const double mass = quadrature(v);
  require(std::abs(mass - 1.0) <= 1e-6, ErrorKind::MassMismatch,
          "density has mass " + std::to_string(mass) + ", expected 1");
}

inline double log_stationary_gaussian(const Point& x, int dim) {
  return -0.5 * dim * std::log(2.0 * kPi) - 0.5 * norm2(x);
}

}  // namespace detail

/// integral of v log(v / G), nodes below kDensityFloor contributing 0.
inline double entropy(const Field& v) {
  detail::require_probability_density(v);
  const int dim = v.grid().dim;
  return quadrature(map_nodes(v, [dim](const Point& x, double value) {
    if (value < kDensityFloor) return 0.0;
    return value * (std::log(value) - detail::log_stationary_gaussian(x, dim));
  }));
}

/// integral of |grad v + x v|^2 / v over the stencil interior.
inline double fisher(const Field& v) {
  detail::require_probability_density(v);
  const GridSpec& g = v.grid();
  std::vector<double> flux2(v.size(), 0.0);
  for (int a = 0; a < g.dim; ++a) {
    const Field da = gradient(v, a);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double f = da[i] + g.node(i)[a] * v[i];
      flux2[i] += f * f;
    }
  }
  for (std::size_t i = 0; i < v.size(); ++i)
    flux2[i] = (g.is_interior(i, kStencilRing) && v[i] >= kDensityFloor) ? flux2[i] / v[i] : 0.0;
  return quadrature(v.with_values(std::move(flux2)));
}

inline double logsob_gap(const Field& v) { return 0.5 * fisher(v) - entropy(v); }

inline double ck_gap(const Field& v) {
  const double l1 = norm(map_nodes(v, [&](const Point& x, double value) {
                           return value - stationary_gaussian(x, v.grid().dim);
                         }),
                         kL1);
  return 2.0 * entropy(v) - l1 * l1;
}

// ---- flows through the physical frame -------------------------------------

/// f on a box `factor` times wider with the same nodes, zero outside.
inline Field embed(const Field& f, std::size_t factor) {
  require(factor >= 1, ErrorKind::InvalidArgument, "embedding factor must be >= 1");
  if (factor == 1) return f;
  const GridSpec& g = f.grid();
  const GridSpec big = make_grid(g.dim, g.half_width * static_cast<double>(factor), g.points_per_axis * factor);
  const std::size_t offset = (big.points_per_axis - g.points_per_axis) / 2;
  std::vector<double> out(big.size(), 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto idx = g.index(i);
    std::size_t flat = 0;
    for (int a = 0; a < g.dim; ++a) flat += (idx[a] + offset) * big.stride(a);
    out[flat] = f[i];
  }
  return Field(big, std::move(out), f.time(), f.diffusivity());
}

/// v(t) on the grid of v0 (taken at log-time 0), through the physical heat
/// flow and the sampled Fokker-Planck map.
inline Field fp_evolve(const Field& v0, double t) {
  require(t >= 0.0, ErrorKind::NonPositiveTime, "log-time must be nonnegative");
  if (t == 0.0) return v0.with_time(0.0);
  const double tau = heat_time_from_fp(t);
  const double s = std::exp(t);
  std::size_t factor = 1;
  while (static_cast<double>(factor) < s) factor *= 2;
  const Field u0 = embed(Field(v0.grid(), {v0.values().begin(), v0.values().end()}, 0.0, Diffusivity::Half), factor);
  return to_fokker_planck(Solution(u0), tau, v0.grid());
}

inline Field ou_evolve(const Field& w0, double t) { return to_ou(fp_evolve(fp_from_ou(w0), t)); }

}  // namespace heatlab
