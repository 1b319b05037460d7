#pragma once

// The heat semigroup on the box: single-shot convolution with the Gaussian
// kernel (direct or FFT), Duhamel forcing, the linear reaction gauge,
// half-line problems by reflection, and the scaling transform T_k.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/fft_convolution.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/numeric.hpp"

namespace heatlab {

struct GridSamples {
  Field field;
};
/// A catalog solution sampled at start_time > 0.
struct Catalog {
  SpecialSolution kind;
  double start_time = 1.0;
};
struct PointMass {
  Point center{};
  double mass = 1.0;
};
/// Dirac masses, realized as Gaussians of width 2 * spacing.
struct PointMasses {
  std::vector<PointMass> masses;
};
/// exp(-rate x) for x >= 0, zero for x < 0 (dim 1).
struct OneSidedExponential {
  double rate = 1.0;
};
/// amplitude (1 + |x|^2)^{-exponent}, integrable iff 2 exponent > N.
struct PowerTail {
  double exponent = 1.0;
  double amplitude = 1.0;
};
/// Constant on the cube [lo, hi]^N, scaled so the discrete mass is exactly `mass`.
struct Box {
  double lo = -1.0;
  double hi = 1.0;
  double mass = 1.0;
};

using InitialData = std::variant<GridSamples, Catalog, PointMasses, OneSidedExponential, PowerTail, Box>;

inline double dirac_surrogate_width(const GridSpec& g) { return 2.0 * g.spacing; }

inline Field realize(const InitialData& data, const GridSpec& g, Diffusivity d = Diffusivity::Unit) {
  return std::visit(
      [&](const auto& k) -> Field {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GridSamples>) {
          require(k.field.grid() == g, ErrorKind::GridMismatch, "sampled data lives on another grid");
          return Field(g, {k.field.values().begin(), k.field.values().end()}, 0.0, d);
        } else if constexpr (std::is_same_v<K, Catalog>) {
          require_positive_time(k.start_time);
          return sample(g, [&](const Point& x) { return special(k.kind, x, k.start_time, g.dim); }, 0.0, d);
        } else if constexpr (std::is_same_v<K, PointMasses>) {
          const double s2 = std::pow(dirac_surrogate_width(g), 2);
          return sample(
              g,
              [&](const Point& x) {
                double v = 0.0;
                for (const auto& pm : k.masses) {
                  double d2 = 0.0;  // coordinates past dim are ignored
                  for (int a = 0; a < g.dim; ++a) d2 += (x[a] - pm.center[a]) * (x[a] - pm.center[a]);
                  v += pm.mass * std::pow(2.0 * kPi * s2, -0.5 * g.dim) * std::exp(-d2 / (2.0 * s2));
                }
                return v;
              },
              0.0, d);
        } else if constexpr (std::is_same_v<K, OneSidedExponential>) {
          require(g.dim == 1, ErrorKind::UnsupportedDimension, "one-sided exponential data is 1D");
          require(k.rate > 0.0, ErrorKind::InvalidArgument, "decay rate must be positive");
          return sample(g, [&](const Point& x) { return x[0] >= 0.0 ? std::exp(-k.rate * x[0]) : 0.0; }, 0.0, d);
        } else if constexpr (std::is_same_v<K, PowerTail>) {
          require(2.0 * k.exponent > g.dim, ErrorKind::NonIntegrableData,
                  "power tail needs 2a > N for integrability");
          return sample(g, [&](const Point& x) { return k.amplitude * std::pow(1.0 + norm2(x), -k.exponent); }, 0.0, d);
        } else {
          require(k.hi > k.lo, ErrorKind::InvalidArgument, "box needs lo < hi");
          auto inside = [&](const Point& x) {
            for (int a = 0; a < g.dim; ++a)
              if (x[a] < k.lo || x[a] > k.hi) return false;
            return true;
          };
          std::size_t count = 0;
          for (std::size_t i = 0; i < g.size(); ++i) count += inside(g.node(i)) ? 1 : 0;
          require(count > 0, ErrorKind::GridTooSmall, "box contains no grid node");
          const double height = k.mass / (static_cast<double>(count) * g.cell_volume());
          return sample(g, [&](const Point& x) { return inside(x) ? height : 0.0; }, 0.0, d);
        }
      },
      data);
}

enum class Method { Direct, FFT };

struct EvolveOptions {
  Method method = Method::FFT;
  /// Largest tolerated fraction of |mass| leaving the box (data or kernel).
  double tail_tol = 1e-10;
};

/// Fraction of |u0| mass whose kernel at time t reaches beyond the box
/// (union bound over axes).
inline double kernel_escape_fraction(const Field& data, double t) {
  const GridSpec& g = data.grid();
  const double width = std::sqrt(4.0 * value(data.diffusivity()) * t);
  std::vector<double> escaped(data.size()), total(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Point x = g.node(i);
    double p = 0.0;
    for (int a = 0; a < g.dim; ++a)
      p += 0.5 * std::erfc((g.half_width - x[a]) / width) + 0.5 * std::erfc((g.half_width + x[a]) / width);
    total[i] = std::abs(data[i]);
    escaped[i] = std::min(1.0, p) * total[i];
  }
  const double m = pairwise_sum(total);
  return m > 0.0 ? pairwise_sum(escaped) / m : 0.0;
}

/// Fraction of |u0| mass carried by the outermost node ring: a proxy for
/// data mass that was already cut off by the box.
inline double data_edge_fraction(const Field& data) {
  const GridSpec& g = data.grid();
  double ring = 0.0, total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += std::abs(data[i]);
    if (!g.is_interior(i, 1)) ring += std::abs(data[i]);
  }
  return total > 0.0 ? ring / total : 0.0;
}

inline void check_tails(const Field& data, double t, double tail_tol) {
  const auto sci = [](double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  };
  const double edge = data_edge_fraction(data);
  require(edge <= tail_tol, ErrorKind::TailEscape,
          "data mass fraction " + sci(edge) + " on the box edge exceeds tail_tol " + sci(tail_tol));
  const double escape = kernel_escape_fraction(data, t);
  require(escape <= tail_tol, ErrorKind::TailEscape,
          "kernel mass fraction " + sci(escape) + " leaves " + describe(data.grid()) + " by t = " + sci(t) +
              " (tail_tol " + sci(tail_tol) + ")");
}

namespace detail {

/// K1(d h) for integer offsets d in [-(n-1), n-1], stored at d + n - 1.
inline std::vector<double> kernel_table(const GridSpec& g, double t, Diffusivity d) {
  const std::size_t n = g.points_per_axis;
  std::vector<double> k(2 * n - 1);
  for (std::size_t j = 0; j < k.size(); ++j) {
    const double offset = (static_cast<double>(j) - static_cast<double>(n - 1)) * g.spacing;
    k[j] = gaussian_1d(offset, t, d);
  }
  return k;
}

/// The O(n^{2N}) reference sum.
inline std::vector<double> direct_convolve(const Field& data, double t) {
  const GridSpec& g = data.grid();
  const std::size_t n = g.points_per_axis;
  const auto k = kernel_table(g, t, data.diffusivity());
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < data.size(); ++j)
    if (data[j] != 0.0) support.push_back(j);
  std::vector<double> out(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const auto ii = g.index(i);
    double acc = 0.0;
    for (std::size_t j : support) {
      const auto jj = g.index(j);
      double w = 1.0;
      for (int a = 0; a < g.dim; ++a) w *= k[ii[a] + n - 1 - jj[a]];
      acc += w * data[j];
    }
    out[i] = g.cell_volume() * acc;
  });
  return out;
}

}  // namespace detail

/// u(t) = G_t * u0 on the box nodes.
inline Field evolve(const Field& data, double t, const EvolveOptions& options = {}) {
  require_positive_time(t);
  check_tails(data, t, options.tail_tol);
  std::vector<double> out = options.method == Method::Direct
                                ? detail::direct_convolve(data, t)
                                : detail::fft_convolve(data.grid(), data.values(),
                                                       detail::kernel_table(data.grid(), t, data.diffusivity()));
  return Field(data.grid(), std::move(out), t, data.diffusivity());
}

inline Field evolve(const InitialData& data, const GridSpec& grid, double t, const EvolveOptions& options = {},
                    Diffusivity d = Diffusivity::Unit) {
  return evolve(realize(data, grid, d), t, options);
}

/// u_t = a Lap u + f: S_t u0 + sum_k (t/n) S_{t-s_k} f(., s_k) at midpoint
/// nodes s_k = (k + 1/2) t / n.
template <class Forcing>
Field evolve_forced(const InitialData& data, Forcing&& forcing, const GridSpec& grid, double t,
                    std::size_t n_duhamel = 64, const EvolveOptions& options = {},
                    Diffusivity d = Diffusivity::Unit) {
  require_positive_time(t);
  require(n_duhamel >= 1, ErrorKind::InvalidArgument, "n_duhamel must be >= 1");
  std::vector<double> acc(grid.size());
  {
    const Field base = evolve(data, grid, t, options, d);
    std::copy(base.values().begin(), base.values().end(), acc.begin());
  }
  const double dt = t / static_cast<double>(n_duhamel);
  for (std::size_t k = 0; k < n_duhamel; ++k) {
    const double s = (static_cast<double>(k) + 0.5) * dt;
    const Field source = sample(grid, [&](const Point& x) { return forcing(x, s); }, 0.0, d);
    bool all_zero = true;
    for (double v : source.values()) all_zero = all_zero && v == 0.0;
    if (all_zero) continue;
    const Field pushed = evolve(source, t - s, options);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += dt * pushed[i];
  }
  return Field(grid, std::move(acc), t, d);
}

/// u_t = Lap u + kappa u through the gauge u = e^{kappa t} v.
inline Field evolve_reaction(const InitialData& data, double kappa, const GridSpec& grid, double t,
                             const EvolveOptions& options = {}) {
  return std::exp(kappa * t) * evolve(data, grid, t, options);
}

enum class BoundaryKind { WholeSpace, HalfLineDirichlet, HalfLineNeumann };

struct HalfLineSolution {
  Field extended;    // odd/even extension evolved on the symmetric box
  Field restricted;  // extended with every x < 0 node set to zero
  double boundary_value = 0.0;  // linear interpolation of the extension at x = 0
};

/// Reflect data supported in (0, inf) oddly (Dirichlet) or evenly (Neumann).
inline Field reflect(const Field& data, BoundaryKind kind) {
  const GridSpec& g = data.grid();
  require(g.dim == 1, ErrorKind::UnsupportedDimension, "half-line problems are one-dimensional");
  require(kind != BoundaryKind::WholeSpace, ErrorKind::InvalidArgument, "reflection needs a half-line boundary");
  const std::size_t n = g.points_per_axis;
  for (std::size_t i = 0; i < n / 2; ++i)
    require(data[i] == 0.0, ErrorKind::DataNotSupportedInHalfLine,
            "data is nonzero at x = " + std::to_string(g.coord(i)));
  const double sign = kind == BoundaryKind::HalfLineDirichlet ? -1.0 : 1.0;
  std::vector<double> ext(n);
  for (std::size_t i = n / 2; i < n; ++i) {
    ext[i] = data[i];
    ext[n - 1 - i] = sign * data[i];
  }
  return data.with_values(std::move(ext));
}

inline Field restrict_positive(const Field& f) {
  return map_nodes(f, [](const Point& x, double v) { return x[0] > 0.0 ? v : 0.0; });
}

inline HalfLineSolution evolve_halfline(const InitialData& data, BoundaryKind kind, const GridSpec& grid, double t,
                                        const EvolveOptions& options = {}) {
  const Field extended = evolve(reflect(realize(data, grid), kind), t, options);
  const std::size_t n = grid.points_per_axis;
  const double at_zero = 0.5 * (extended[n / 2 - 1] + extended[n / 2]);
  return {extended, restrict_positive(extended), at_zero};
}

/// Space-time solution handle built from the representation formula over
/// the data nodes. Evaluates anywhere, and composes with the scaling
/// transform (T_k u)(x, t) = k^N u(k x, k^2 t).
class Solution {
 public:
  explicit Solution(Field data) : data_(std::move(data)) {}

  const Field& data() const { return data_; }
  double scale() const { return scale_; }
  int dim() const { return data_.grid().dim; }

  Solution rescale(double k) const {
    require(k > 0.0 && std::isfinite(k), ErrorKind::InvalidArgument, "scaling factor must be positive");
    Solution s = *this;
    s.scale_ *= k;
    return s;
  }

  double operator()(const Point& x, double t) const {
    const GridSpec& g = data_.grid();
    const Point y = scaled(x, scale_);
    require(g.contains(y), ErrorKind::RescaledArgumentOffGrid, "rescaled point leaves the source box");
    const double s = scale_ * scale_ * t;
    require_positive_time(s);
    std::vector<double> terms(data_.size());
    for (std::size_t j = 0; j < data_.size(); ++j) {
      const Point xj = g.node(j);
      double w = 1.0;
      for (int a = 0; a < g.dim; ++a) w *= gaussian_1d(y[a] - xj[a], s, data_.diffusivity());
      terms[j] = w * data_[j];
    }
    return std::pow(scale_, g.dim) * g.cell_volume() * pairwise_sum(terms);
  }

  /// All target nodes at once; separable, O(n_target n_source) per axis line.
  Field sample(const GridSpec& target, double t) const {
    const GridSpec& g = data_.grid();
    require(target.dim == g.dim, ErrorKind::GridMismatch, "target grid dimension differs");
    if (t == 0.0 && scale_ == 1.0 && target == g) return data_;
    const double s = scale_ * scale_ * t;
    require_positive_time(s);
    require(target.half_width * scale_ <= g.half_width * (1.0 + 1e-12), ErrorKind::RescaledArgumentOffGrid,
            "rescaled target box " + std::to_string(target.half_width * scale_) + " exceeds source half-width " +
                std::to_string(g.half_width));
    const std::size_t ns = g.points_per_axis, nt = target.points_per_axis;
    std::vector<double> matrix(nt * ns);
    for (std::size_t p = 0; p < nt; ++p)
      for (std::size_t j = 0; j < ns; ++j)
        matrix[p * ns + j] = g.spacing * gaussian_1d(scale_ * target.coord(p) - g.coord(j), s, data_.diffusivity());

    std::vector<double> current(data_.values().begin(), data_.values().end());
    std::vector<std::size_t> shape(g.dim, ns);
    for (int axis = 0; axis < g.dim; ++axis) {
      std::size_t outer = 1, inner = 1;
      for (int b = 0; b < axis; ++b) outer *= shape[b];
      for (int b = axis + 1; b < g.dim; ++b) inner *= shape[b];
      std::vector<double> next(outer * nt * inner, 0.0);
      parallel_for(outer * nt, [&](std::size_t op) {
        const std::size_t o = op / nt, p = op % nt;
        double* dst = next.data() + (o * nt + p) * inner;
        for (std::size_t j = 0; j < ns; ++j) {
          const double w = matrix[p * ns + j];
          const double* src = current.data() + (o * ns + j) * inner;
          for (std::size_t q = 0; q < inner; ++q) dst[q] += w * src[q];
        }
      });
      current = std::move(next);
      shape[axis] = nt;
    }
    const double amplitude = std::pow(scale_, g.dim);
    for (double& v : current) v *= amplitude;
    return Field(target, std::move(current), t, data_.diffusivity());
  }

 private:
  Field data_;
  double scale_ = 1.0;
};

/// Lattice form of T_k: given u(., k^2 t) on a grid, returns T_k u(., t) on
/// the grid shrunk by 1/k (node i of the result sits at x_i / k).
inline Field rescale_field(const Field& u, double k) {
  require(k > 0.0, ErrorKind::InvalidArgument, "scaling factor must be positive");
  const GridSpec target = scale_grid(u.grid(), 1.0 / k);
  std::vector<double> v(u.values().begin(), u.values().end());
  const double amplitude = std::pow(k, u.grid().dim);
  for (double& x : v) x *= amplitude;
  return Field(target, std::move(v), u.time() / (k * k), u.diffusivity());
}

}  // namespace heatlab
