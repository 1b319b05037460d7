#pragma once

// Long-time behaviour: errors against Gaussian-type attractors and their
// rates, higher-order correctors, the slow-convergence counterexample, tail
// profiles, the sign-change front, the half-line dipole and the rescaling
// experiment.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "heatlab/diagnostics.hpp"
#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/numeric.hpp"
#include "heatlab/semigroup.hpp"

namespace heatlab {

inline constexpr double kMassMismatchTol = 1e-6;

/// alpha -> integral of u0 x^alpha, complete up to `order`.
struct MomentTable {
  int dim = 1;
  int order = 0;
  std::map<MultiIndex, double> entries;

  double at(const MultiIndex& a) const {
    const auto it = entries.find(a);
    require(it != entries.end(), ErrorKind::OrderTooHigh, "moment " + describe(a) + " is not in the table");
    return it->second;
  }
};

inline double monomial(const Point& x, const MultiIndex& a) {
  return std::pow(x[0], a[0]) * std::pow(x[1], a[1]) * std::pow(x[2], a[2]);
}

inline MomentTable moment_table(const Field& u0, int order) {
  MomentTable t{u0.grid().dim, order, {}};
  for (const MultiIndex& a : multi_indices(t.dim, order))
    t.entries[a] = quadrature(u0, [&a](const Point& x) { return monomial(x, a); });
  return t;
}

struct GaussianAttractor {
  double mass = 1.0;
};
struct GaussianTimeShift {
  double mass = 1.0;
  double t0 = 1.0;
};
struct GaussianCentered {
  double mass = 1.0;
  Point center{};
};
/// strength * D(x, t) on the half-line x > 0.
struct DipoleAttractor {
  double strength = 1.0;
};
struct Corrector {
  MomentTable moments;
};
using AttractorSpec = std::variant<GaussianAttractor, GaussianTimeShift, GaussianCentered, DipoleAttractor, Corrector>;

inline std::string attractor_name(const AttractorSpec& a) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GaussianAttractor>) return "gaussian";
        else if constexpr (std::is_same_v<K, GaussianTimeShift>) return "gaussian_time_shift";
        else if constexpr (std::is_same_v<K, GaussianCentered>) return "gaussian_centered";
        else if constexpr (std::is_same_v<K, DipoleAttractor>) return "dipole";
        else return "corrector_k" + std::to_string(k.moments.order);
      },
      a);
}

/// sum over |alpha| <= order of ((-1)^|alpha| / alpha!) m_alpha D^alpha G_t(x).
inline double corrector_attractor(const MomentTable& m, const Point& x, double t) {
  double acc = 0.0;
  for (const auto& [alpha, moment] : m.entries) {
    if (moment == 0.0) continue;
    if (alpha.total() == 0) {
      acc += gaussian(x, t, m.dim, moment);
      continue;
    }
    const double sign = alpha.total() % 2 == 0 ? 1.0 : -1.0;
    acc += sign / factorial(alpha) * moment * gaussian_derivative(x, t, alpha, m.dim);
  }
  return acc;
}

inline double attractor_value(const AttractorSpec& a, const Point& x, double t, int dim) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GaussianAttractor>) {
          return gaussian(x, t, dim, k.mass);
        } else if constexpr (std::is_same_v<K, GaussianTimeShift>) {
          return gaussian(x, t + k.t0, dim, k.mass);
        } else if constexpr (std::is_same_v<K, GaussianCentered>) {
          return gaussian(x, t, dim, k.mass, k.center);
        } else if constexpr (std::is_same_v<K, DipoleAttractor>) {
          return x[0] > 0.0 ? dipole(x[0], t, k.strength) : 0.0;
        } else {
          return corrector_attractor(k.moments, x, t);
        }
      },
      a);
}

/// The factor turning a raw error into the renormalized one: the inverse of
/// the attractor's own decay in that norm.
inline double renormalization_factor(const NormKind& kind, int dim, double t, const AttractorSpec& a) {
  const bool dipole_sup = std::holds_alternative<DipoleAttractor>(a) && std::holds_alternative<Lp>(kind) &&
                          std::isinf(std::get<Lp>(kind).p);
  if (dipole_sup) return std::sqrt(t);
  if (const Lp* lp = std::get_if<Lp>(&kind)) {
    if (std::isinf(lp->p)) return std::pow(t, 0.5 * dim);
    return std::pow(t, dim * (lp->p - 1.0) / (2.0 * lp->p));
  }
  return 1.0;
}

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> raw;
  std::vector<double> renormalized;
  NormKind norm = kSup;
  std::string attractor;
};

inline void require_increasing_times(const std::vector<double>& times) {
  require(!times.empty(), ErrorKind::TooFewPoints, "no sample times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] > 0.0 && std::isfinite(times[i]), ErrorKind::NonPositiveTime, "sample times must be positive");
    if (i > 0) require(times[i] > times[i - 1], ErrorKind::InvalidArgument, "sample times must increase strictly");
  }
}

namespace detail {

inline void check_relative(double expected, double got, const std::string& what) {
  const double scale = std::max(std::abs(expected), std::abs(got));
  require(std::abs(expected - got) <= kMassMismatchTol * std::max(scale, 1e-300), ErrorKind::MassMismatch,
          what + ": attractor has " + std::to_string(expected) + ", data has " + std::to_string(got));
}

inline void check_attractor(const AttractorSpec& a, const Field& u0) {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, DipoleAttractor>) {
          const double n1 = quadrature(u0, [](const Point& x) { return x[0] > 0.0 ? x[0] : 0.0; });
          check_relative(k.strength, 2.0 * n1, "dipole strength vs 2 N_1");
        } else if constexpr (std::is_same_v<K, Corrector>) {
          require(k.moments.dim == u0.grid().dim, ErrorKind::GridMismatch, "moment table dimension differs");
          check_relative(k.moments.at(MultiIndex{}), quadrature(u0), "mass");
        } else {
          check_relative(k.mass, quadrature(u0), "mass");
        }
      },
      a);
}

inline ErrorSeries error_series_from(const std::vector<double>& times, const NormKind& kind,
                                     const AttractorSpec& a, int dim,
                                     const std::function<Field(double)>& difference) {
  ErrorSeries s;
  s.norm = kind;
  s.attractor = attractor_name(a);
  for (double t : times) {
    const double raw = norm(difference(t), kind);
    s.times.push_back(t);
    s.raw.push_back(raw);
    s.renormalized.push_back(raw * renormalization_factor(kind, dim, t, a));
  }
  return s;
}

}  // namespace detail

/// Per-time ||u(t) - attractor(t)|| along the evolution of `data`.
/// The dipole attractor implies the Dirichlet half-line problem.
inline ErrorSeries attractor_error(const InitialData& data, const GridSpec& grid, const AttractorSpec& attractor,
                                   const NormKind& kind, const std::vector<double>& times,
                                   BoundaryKind boundary = BoundaryKind::WholeSpace,
                                   const EvolveOptions& options = {}) {
  require_increasing_times(times);
  if (std::holds_alternative<DipoleAttractor>(attractor))
    require(boundary == BoundaryKind::HalfLineDirichlet, ErrorKind::InvalidArgument,
            "the dipole attractor lives on the Dirichlet half-line");
  const Field u0 = realize(data, grid);
  detail::check_attractor(attractor, u0);
  const auto difference = [&](double t) {
    const Field u = boundary == BoundaryKind::WholeSpace ? evolve(u0, t, options)
                                                         : evolve_halfline(GridSamples{u0}, boundary, grid, t, options).restricted;
    return map_nodes(u, [&](const Point& x, double v) {
      if (boundary != BoundaryKind::WholeSpace && x[0] <= 0.0) return 0.0;
      return v - attractor_value(attractor, x, t, grid.dim);
    });
  };
  return detail::error_series_from(times, kind, attractor, grid.dim, difference);
}

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
  std::size_t dropped = 0;  // zero-error entries left out of the fit
};

inline constexpr double kDefaultRateWindowLo = 4.0;
inline constexpr double kDefaultRateWindowHi = 256.0;
inline constexpr std::size_t kDefaultRatePoints = 8;

inline std::vector<double> default_rate_times() {
  return geometric_times(kDefaultRateWindowLo, kDefaultRateWindowHi, kDefaultRatePoints);
}

/// Least squares of log(renormalized) against log(t) over the window.
inline RateFit fit_rate(const ErrorSeries& s, std::optional<std::pair<double, double>> window = std::nullopt) {
  std::vector<double> lx, ly;
  std::size_t in_window = 0, zeros = 0;
  for (std::size_t i = 0; i < s.times.size(); ++i) {
    const double t = s.times[i];
    if (window && (t < window->first * (1 - 1e-12) || t > window->second * (1 + 1e-12))) continue;
    ++in_window;
    if (!(s.renormalized[i] > 0.0)) {
      ++zeros;
      continue;
    }
    lx.push_back(std::log(t));
    ly.push_back(std::log(s.renormalized[i]));
  }
  require(in_window >= 3, ErrorKind::TooFewPoints,
          "rate fit needs >= 3 points in the window, got " + std::to_string(in_window));
  require(lx.size() >= 3, ErrorKind::ZeroErrorEntry,
          std::to_string(zeros) + " zero error entries leave fewer than 3 points to fit");
  const LineFit f = fit_line(lx, ly);
  return {f.slope, f.intercept, f.slope_stderr, f.r_squared, f.n_points, zeros};
}

/// ||u(t) - v(t)||_1 for two data of equal mass (no renormalization).
inline ErrorSeries mixing_error(const InitialData& data_u, const InitialData& data_v, const GridSpec& grid,
                                const std::vector<double>& times, const EvolveOptions& options = {}) {
  require_increasing_times(times);
  const Field u0 = realize(data_u, grid), v0 = realize(data_v, grid);
  const double mu = quadrature(u0), mv = quadrature(v0);
  require(std::abs(mu - mv) <= 1e-8, ErrorKind::MassMismatch,
          "mixing needs equal masses, got " + std::to_string(mu) + " and " + std::to_string(mv));
  const Field diff0 = u0 - v0;
  ErrorSeries s;
  s.norm = kL1;
  s.attractor = "mixing";
  for (double t : times) {
    const double e = norm(evolve(diff0, t, options), kL1);
    s.times.push_back(t);
    s.raw.push_back(e);
    s.renormalized.push_back(e);
  }
  return s;
}

// ---- counterexample -------------------------------------------------------

struct Counterexample {
  std::vector<double> masses;  // m_n = 2^{-n}
  std::vector<double> times;   // witness times t_n
  std::vector<double> radii;   // |x_n|
  std::vector<PointMass> data; // (1 - sum m) at 0 plus m_n at r_n e_1
};

inline constexpr int kMaxCounterexampleTerms = 6;
inline constexpr double kCounterexampleMargin = 0.1;

/// Data converging to M G_t slower than the prescribed rate phi: each mass
/// m_n sits far enough out that at t_n half of it is still missing from the
/// origin.
template <class Rate>
Counterexample build_counterexample(Rate&& phi, int n_terms) {
  require(n_terms >= 1 && n_terms <= kMaxCounterexampleTerms, ErrorKind::InvalidArgument,
          "counterexample supports 1.." + std::to_string(kMaxCounterexampleTerms) + " terms");
  // search grid t = 2^j
  constexpr int kMaxExponent = 80;
  double previous = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= kMaxExponent; ++j) {
    const double v = phi(std::ldexp(1.0, j));
    require(std::isfinite(v) && v > 0.0 && v < previous, ErrorKind::RateNotDecreasing,
            "rate must be positive and strictly decreasing on the search grid (fails at t = 2^" +
                std::to_string(j) + ")");
    previous = v;
  }
  Counterexample ce;
  double last_t = 0.0, total = 0.0;
  for (int n = 1; n <= n_terms; ++n) {
    const double m = std::ldexp(1.0, -n);
    std::optional<double> tn;
    for (int j = 0; j <= kMaxExponent && !tn; ++j) {
      const double t = std::ldexp(1.0, j);
      if (t >= 4.0 * last_t && phi(t) <= m / (2.0 * n)) tn = t;
    }
    require(tn.has_value(), ErrorKind::RateNotDecreasing, "rate does not fall below m_n / 2n on the search grid");
    const double r = 2.0 * std::sqrt(*tn * std::log(2.0)) * (1.0 + kCounterexampleMargin);
    ce.masses.push_back(m);
    ce.times.push_back(*tn);
    ce.radii.push_back(r);
    last_t = *tn;
    total += m;
  }
  ce.data.push_back({Point{}, 1.0 - total});
  for (std::size_t i = 0; i < ce.masses.size(); ++i) ce.data.push_back({Point{ce.radii[i], 0.0, 0.0}, ce.masses[i]});
  return ce;
}

struct WitnessCheck {
  double lhs = 0.0;          // sum_j m_j (1 - exp(-r_j^2 / 4 t_n))
  double closed_form = 0.0;  // (4 pi t_n)^{N/2} |u(0, t_n) - G_{t_n}(0)| from the Gaussian sum
  double rhs = 0.0;          // n phi(t_n)
  bool holds = false;
};

template <class Rate>
WitnessCheck counterexample_witness(const Counterexample& ce, Rate&& phi, std::size_t n, int dim = 1) {
  require(n >= 1 && n <= ce.times.size(), ErrorKind::InvalidArgument, "witness index out of range");
  const double t = ce.times[n - 1];
  WitnessCheck w;
  for (std::size_t j = 0; j < ce.masses.size(); ++j)
    w.lhs += ce.masses[j] * (1.0 - std::exp(-ce.radii[j] * ce.radii[j] / (4.0 * t)));
  double u_at_0 = 0.0;
  for (const PointMass& pm : ce.data) u_at_0 += gaussian(Point{} - pm.center, t, dim, pm.mass);
  w.closed_form = std::pow(4.0 * kPi * t, 0.5 * dim) * std::abs(u_at_0 - gaussian(Point{}, t, dim));
  w.rhs = static_cast<double>(n) * phi(t);
  w.holds = w.lhs >= w.rhs;
  return w;
}

// ---- tails ----------------------------------------------------------------

struct TailProfile {
  std::vector<double> radius;
  std::vector<double> ratio;  // -log(u/M) / |x|^2
  std::vector<double> lower;  // bracket on -log(u/M)
  std::vector<double> value;  // -log(u/M)
  std::vector<double> upper;
  bool inside = true;
  double worst_violation = 0.0;  // largest distance outside the bracket
  double outer_deviation = 0.0;  // sup |ratio - 1/4t| over the outer half of the annulus
};

/// Samples -log(u/M) over nodes with r_min <= |x| <= r_max and checks it
/// against the bounds for nonnegative data supported in the ball B_R(center).
inline TailProfile tail_profile(const Field& u, double mass, const Point& center, double support_radius,
                                double r_min, double r_max) {
  require(mass > 0.0, ErrorKind::InvalidArgument, "tail profile needs positive mass");
  const double t = u.time();
  require_positive_time(t);
  const GridSpec& g = u.grid();
  const double log_prefactor = 0.5 * g.dim * std::log(4.0 * kPi * t);
  TailProfile p;
  const double outer_from = 0.5 * (r_min + r_max);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Point x = g.node(i);
    const double r = std::sqrt(norm2(x));
    if (r < r_min || r > r_max) continue;
    require(u[i] > 0.0, ErrorKind::NonPositiveField, "u <= 0 at |x| = " + std::to_string(r));
    const double dist = std::sqrt(norm2(x - center));
    const double q = -std::log(u[i] / mass);
    const double lo = log_prefactor + std::pow(std::max(0.0, dist - support_radius), 2) / (4.0 * t);
    const double hi = log_prefactor + std::pow(dist + support_radius, 2) / (4.0 * t);
    p.radius.push_back(r);
    p.value.push_back(q);
    p.ratio.push_back(q / (r * r));
    p.lower.push_back(lo);
    p.upper.push_back(hi);
    const double violation = std::max(lo - q, q - hi);
    // relative slack for rounding in the log
    if (violation > 1e-12 * std::abs(q)) p.inside = false;
    p.worst_violation = std::max(p.worst_violation, violation);
    if (r >= outer_from) p.outer_deviation = std::max(p.outer_deviation, std::abs(q / (r * r) - 0.25 / t));
  }
  require(!p.radius.empty(), ErrorKind::GridTooSmall, "no node in the requested annulus");
  return p;
}

/// Slope of -log u against x over [x_lo, x_hi] (1D).
inline RateFit tail_log_slope(const Field& u, double x_lo, double x_hi) {
  require(u.grid().dim == 1, ErrorKind::UnsupportedDimension, "tail slope is one-dimensional");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = u.grid().coord(i);
    if (x < x_lo || x > x_hi) continue;
    require(u[i] > 0.0, ErrorKind::NonPositiveField, "u <= 0 at x = " + std::to_string(x));
    xs.push_back(x);
    ys.push_back(-std::log(u[i]));
  }
  const LineFit f = fit_line(xs, ys);
  return {f.slope, f.intercept, f.slope_stderr, f.r_squared, f.n_points, 0};
}

// ---- sign-change front ----------------------------------------------------

/// Closed-form crossing of G_t(x) = eps G_t(x - h).
inline double front_closed_form(double eps, double separation, double t) {
  return 0.5 * separation + 2.0 * t * std::log(1.0 / eps) / separation;
}

/// Zero crossings r(t) of the solution with data delta_0 - eps delta_h,
/// by linear interpolation between the bracketing nodes. The direct sum is
/// used so far-field values keep their relative accuracy.
inline std::vector<double> sign_change_front(double eps, double separation, const std::vector<double>& times,
                                             const GridSpec& grid) {
  require(grid.dim == 1, ErrorKind::UnsupportedDimension, "the sign-change front is one-dimensional");
  require(eps > 0.0 && eps <= 1.0, ErrorKind::InvalidArgument, "eps must lie in (0, 1]");
  require_increasing_times(times);
  const Field u0 = realize(PointMasses{{{Point{}, 1.0}, {Point{separation, 0.0, 0.0}, -eps}}}, grid);
  std::vector<double> front;
  for (double t : times) {
    const Field u = evolve(u0, t, {Method::Direct, 1.0});
    std::optional<double> r;
    for (std::size_t i = 0; i + 1 < u.size() && !r; ++i) {
      if (u[i] > 0.0 && u[i + 1] <= 0.0) {
        const double x0 = grid.coord(i), x1 = grid.coord(i + 1);
        r = x0 + (x1 - x0) * u[i] / (u[i] - u[i + 1]);
      }
    }
    require(r.has_value(), ErrorKind::NoSignChangeOnGrid,
            "no sign change on " + describe(grid) + " at t = " + std::to_string(t));
    front.push_back(*r);
  }
  return front;
}

// ---- half-line dipole -----------------------------------------------------

inline double halfline_first_moment(const Field& u0) {
  return quadrature(u0, [](const Point& x) { return x[0] > 0.0 ? x[0] : 0.0; });
}

/// ||u(t) - 2 N_1 D(., t)|| on the Dirichlet half-line.
inline ErrorSeries dipole_error(const InitialData& data, const GridSpec& grid, const std::vector<double>& times,
                                const NormKind& kind, const EvolveOptions& options = {}) {
  const double n1 = halfline_first_moment(realize(data, grid));
  return attractor_error(data, grid, DipoleAttractor{2.0 * n1}, kind, times, BoundaryKind::HalfLineDirichlet,
                         options);
}

/// Mass on (0, inf) along the half-line evolution.
inline std::vector<double> halfline_mass_series(const InitialData& data, BoundaryKind kind, const GridSpec& grid,
                                                const std::vector<double>& times, const EvolveOptions& options = {}) {
  require_increasing_times(times);
  std::vector<double> out;
  for (double t : times) out.push_back(quadrature(evolve_halfline(data, kind, grid, t, options).restricted));
  return out;
}

// ---- rescaling ------------------------------------------------------------

struct ScalingRow {
  double k = 1.0;
  double sup_distance = 0.0;  // sup |(T_k u)(., 1) - M G_1| on the target box
  double l1_distance = 0.0;
  double renormalized_sup = 0.0;  // t^{N/2} sup |u(t) - M G_t| at t = k^2 on the scaled box
  double renormalized_l1 = 0.0;
};

/// Compares (T_k u)(., 1) with M G_1 on `target`, and independently the
/// renormalized error at t = k^2 on the target box scaled by k.
inline std::vector<ScalingRow> scaling_experiment(const InitialData& data, const GridSpec& grid,
                                                  const std::vector<double>& ks, const GridSpec& target) {
  const Field u0 = realize(data, grid);
  const double mass = quadrature(u0);
  const Solution u(u0);
  const int dim = grid.dim;
  std::vector<ScalingRow> rows;
  for (double k : ks) {
    ScalingRow row;
    row.k = k;
    const Field rescaled = u.rescale(k).sample(target, 1.0);
    const Field d1 = map_nodes(rescaled, [&](const Point& x, double v) { return v - gaussian(x, 1.0, dim, mass); });
    row.sup_distance = norm(d1, kSup);
    row.l1_distance = norm(d1, kL1);

    const double t = k * k;
    const Field physical = u.sample(scale_grid(target, k), t);
    const Field d2 = map_nodes(physical, [&](const Point& x, double v) { return v - gaussian(x, t, dim, mass); });
    row.renormalized_sup = std::pow(t, 0.5 * dim) * norm(d2, kSup);
    row.renormalized_l1 = norm(d2, kL1);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace heatlab
