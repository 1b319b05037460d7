#pragma once

// Truncated-box discretization of R^N (N <= 3): midpoint lattice, sampled
// fields, quadrature and the norms used throughout the library.

#include <array>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/numeric.hpp"

namespace heatlab {

/// A point of R^N stored in three slots; unused trailing coordinates are 0,
/// so |x|^2 and dot products can always run over all three.
using Point = std::array<double, 3>;

inline double norm2(const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }

inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

inline Point scaled(const Point& a, double k) { return {k * a[0], k * a[1], k * a[2]}; }

struct GridSpec {
  int dim = 1;
  double half_width = 1.0;
  std::size_t points_per_axis = 8;
  double spacing = 0.25;

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= points_per_axis;
    return n;
  }

  /// Node coordinate along any axis; never hits 0 or the box edge.
  double coord(std::size_t i) const {
    return -half_width + (static_cast<double>(i) + 0.5) * spacing;
  }

  /// Row-major layout, last axis fastest.
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = dim - 1; a > axis; --a) s *= points_per_axis;
    return s;
  }

  std::array<std::size_t, 3> index(std::size_t flat) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (int a = dim - 1; a >= 0; --a) {
      idx[a] = flat % points_per_axis;
      flat /= points_per_axis;
    }
    return idx;
  }

  Point node(std::size_t flat) const {
    const auto idx = index(flat);
    Point x{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) x[a] = coord(idx[a]);
    return x;
  }

  double cell_volume() const { return std::pow(spacing, dim); }

  /// True when the node is at least `ring` nodes away from every face.
  bool is_interior(std::size_t flat, std::size_t ring) const {
    const auto idx = index(flat);
    for (int a = 0; a < dim; ++a)
      if (idx[a] < ring || idx[a] + ring >= points_per_axis) return false;
    return true;
  }

  bool contains(const Point& x) const {
    for (int a = 0; a < dim; ++a)
      if (std::abs(x[a]) > half_width) return false;
    return true;
  }

  bool operator==(const GridSpec&) const = default;
};

inline std::string describe(const GridSpec& g) {
  std::ostringstream os;
  os << "grid(dim=" << g.dim << ", L=" << g.half_width << ", n=" << g.points_per_axis << ")";
  return os.str();
}

inline GridSpec make_grid(int dim, double half_width, std::size_t points_per_axis) {
  require(dim >= 1 && dim <= 3, ErrorKind::UnsupportedDimension,
          "dimension must be 1, 2 or 3, got " + std::to_string(dim));
  require(half_width > 0.0 && std::isfinite(half_width), ErrorKind::NonPositiveExtent,
          "half_width must be positive");
  require(points_per_axis % 2 == 0, ErrorKind::OddPointCount,
          "points_per_axis must be even, got " + std::to_string(points_per_axis));
  require(points_per_axis >= 8, ErrorKind::TooFewNodes, "points_per_axis must be >= 8");
  GridSpec g;
  g.dim = dim;
  g.half_width = half_width;
  g.points_per_axis = points_per_axis;
  g.spacing = 2.0 * half_width / static_cast<double>(points_per_axis);
  return g;
}

/// Same node count, box scaled by `factor`: node i maps to factor * node i.
inline GridSpec scale_grid(const GridSpec& g, double factor) {
  return make_grid(g.dim, g.half_width * factor, g.points_per_axis);
}

/// Box-size heuristic: half_width >= |center| + 2 sqrt(4 a t_max log(1/tail_tol)).
inline double box_half_width(double center_abs, double t_max, double tail_tol,
                             double diffusivity = 1.0) {
  require(tail_tol > 0.0 && tail_tol < 1.0, ErrorKind::InvalidArgument, "tail_tol must be in (0,1)");
  return std::abs(center_abs) + 2.0 * std::sqrt(4.0 * diffusivity * t_max * std::log(1.0 / tail_tol));
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Heat-equation convention: 1 for u_t = Lap u, 1/2 for u_t = Lap u / 2.
enum class Diffusivity { Unit, Half };

constexpr double value(Diffusivity d) { return d == Diffusivity::Unit ? 1.0 : 0.5; }

/// Sampled real function on a GridSpec, stamped with diffusion time.
class Field {
 public:
  Field(GridSpec grid, std::vector<double> values, double time = 0.0,
        Diffusivity diffusivity = Diffusivity::Unit)
      : grid_(grid), values_(std::move(values)), time_(time), diffusivity_(diffusivity) {
    require(values_.size() == grid_.size(), ErrorKind::GridMismatch,
            "value count does not match " + describe(grid_));
    require(time_ >= 0.0, ErrorKind::InvalidArgument, "field time must be nonnegative");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        const Point x = grid_.node(i);
        std::ostringstream os;
        os << "non-finite value at node " << i << " (" << x[0] << ", " << x[1] << ", " << x[2] << ")";
        fail(ErrorKind::NonFiniteSample, os.str());
      }
    }
  }

  static Field zeros(const GridSpec& grid, double time = 0.0, Diffusivity d = Diffusivity::Unit) {
    return Field(grid, std::vector<double>(grid.size(), 0.0), time, d);
  }

  const GridSpec& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double time() const { return time_; }
  Diffusivity diffusivity() const { return diffusivity_; }

  Field with_values(std::vector<double> v) const { return Field(grid_, std::move(v), time_, diffusivity_); }
  Field with_time(double t) const { return Field(grid_, values_, t, diffusivity_); }

 private:
  GridSpec grid_;
  std::vector<double> values_;
  double time_;
  Diffusivity diffusivity_;
};

inline void require_compatible(const Field& a, const Field& b) {
  require(a.grid() == b.grid(), ErrorKind::GridMismatch,
          describe(a.grid()) + " vs " + describe(b.grid()));
  require(a.diffusivity() == b.diffusivity(), ErrorKind::DiffusivityMismatch,
          "fields carry different diffusivity");
}

template <class Op>
Field combine(const Field& a, const Field& b, Op op) {
  require_compatible(a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return a.with_values(std::move(out));
}

inline Field operator+(const Field& a, const Field& b) {
  return combine(a, b, [](double x, double y) { return x + y; });
}
inline Field operator-(const Field& a, const Field& b) {
  return combine(a, b, [](double x, double y) { return x - y; });
}
inline Field operator*(double k, const Field& a) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= k;
  return a.with_values(std::move(out));
}

/// Pointwise map f(x, value) -> value, keeping grid, time and diffusivity.
template <class F>
Field map_nodes(const Field& a, F&& f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.grid().node(i), a[i]);
  return a.with_values(std::move(out));
}

template <class F>
Field sample(const GridSpec& grid, F&& f, double time = 0.0, Diffusivity d = Diffusivity::Unit) {
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = f(grid.node(i));
  return Field(grid, std::move(values), time, d);
}

/// Midpoint rule spacing^N * sum w(x_i) u_i with pairwise summation.
inline double quadrature(const Field& field) {
  return field.grid().cell_volume() * pairwise_sum(field.values());
}

template <class W>
double quadrature(const Field& field, W&& weight) {
  std::vector<double> terms(field.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double w = weight(field.grid().node(i));
    require(std::isfinite(w), ErrorKind::GridMismatch, "weight is not finite at node " + std::to_string(i));
    terms[i] = w * field[i];
  }
  return field.grid().cell_volume() * pairwise_sum(terms);
}

/// Stationary Gaussian (2 pi)^{-N/2} exp(-|x|^2/2) of the renormalized frames.
inline double stationary_gaussian(const Point& x, int dim) {
  return std::pow(2.0 * kPi, -0.5 * dim) * std::exp(-0.5 * norm2(x));
}

/// Largest |x|^2 for which exp(|x|^2/2)^2 stays representable.
inline double inverse_gauss_limit() { return std::log(DBL_MAX); }

inline void require_inverse_gauss_safe(const GridSpec& g) {
  double corner2 = 0.0;
  const double edge = g.coord(g.points_per_axis - 1);
  for (int a = 0; a < g.dim; ++a) corner2 += edge * edge;
  require(corner2 <= inverse_gauss_limit(), ErrorKind::OverflowInInverseGaussWeight,
          "box corner |x|^2 = " + std::to_string(corner2) + " overflows exp(|x|^2/2)");
}

struct Lp {
  double p = 1.0;
};
struct WeightedL1 {};
struct L2Gauss {};
struct L2InvGauss {};
using NormKind = std::variant<Lp, WeightedL1, L2Gauss, L2InvGauss>;

inline const NormKind kL1 = Lp{1.0};
inline const NormKind kL2 = Lp{2.0};
inline const NormKind kSup = Lp{std::numeric_limits<double>::infinity()};

inline std::string norm_name(const NormKind& kind) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Lp>) {
          if (std::isinf(k.p)) return "sup";
          if (k.p == 1.0) return "l1";
          if (k.p == 2.0) return "l2";
          std::ostringstream os;
          os << "l" << k.p;
          return os.str();
        } else if constexpr (std::is_same_v<K, WeightedL1>) {
          return "l1w";
        } else if constexpr (std::is_same_v<K, L2Gauss>) {
          return "l2mu";
        } else {
          return "l2invmu";
        }
      },
      kind);
}

namespace detail {

template <class Pred>
double sup_abs(const Field& f, Pred&& keep) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (keep(i)) m = std::max(m, std::abs(f[i]));
  return m;
}

}  // namespace detail

inline double norm(const Field& field, const NormKind& kind) {
  const GridSpec& g = field.grid();
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Lp>) {
          require(k.p >= 1.0, ErrorKind::InvalidArgument, "Lp norm needs p >= 1");
          if (std::isinf(k.p)) return detail::sup_abs(field, [](std::size_t) { return true; });
          std::vector<double> terms(field.size());
          for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::pow(std::abs(field[i]), k.p);
          return std::pow(g.cell_volume() * pairwise_sum(terms), 1.0 / k.p);
        } else if constexpr (std::is_same_v<K, WeightedL1>) {
          std::vector<double> terms(field.size());
          for (std::size_t i = 0; i < terms.size(); ++i)
            terms[i] = std::sqrt(norm2(g.node(i))) * std::abs(field[i]);
          return g.cell_volume() * pairwise_sum(terms);
        } else if constexpr (std::is_same_v<K, L2Gauss>) {
          std::vector<double> terms(field.size());
          for (std::size_t i = 0; i < terms.size(); ++i)
            terms[i] = field[i] * field[i] * stationary_gaussian(g.node(i), g.dim);
          return std::sqrt(g.cell_volume() * pairwise_sum(terms));
        } else {
          require_inverse_gauss_safe(g);
          std::vector<double> terms(field.size());
          for (std::size_t i = 0; i < terms.size(); ++i) {
            const Point x = g.node(i);
            // v^2 / G computed as (v e^{|x|^2/4})^2 (2 pi)^{N/2}
            const double scaled_v = field[i] * std::exp(0.25 * norm2(x));
            terms[i] = scaled_v * scaled_v * std::pow(2.0 * kPi, 0.5 * g.dim);
          }
          return std::sqrt(g.cell_volume() * pairwise_sum(terms));
        }
      },
      kind);
}

/// Sup norm over nodes at least `ring` nodes from the box faces.
inline double interior_sup(const Field& field, std::size_t ring) {
  return detail::sup_abs(field, [&](std::size_t i) { return field.grid().is_interior(i, ring); });
}

}  // namespace heatlab
