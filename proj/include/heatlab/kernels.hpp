#pragma once

// Closed-form caloric functions: the Gaussian kernel and its derivatives,
// the dipole, and the special solutions used as exact references.

#include <array>
#include <cmath>
#include <compare>
#include <string>
#include <variant>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/numeric.hpp"

namespace heatlab {

constexpr int kMaxDerivativeOrder = 12;

struct MultiIndex {
  std::array<int, 3> order{0, 0, 0};

  constexpr int total() const { return order[0] + order[1] + order[2]; }
  constexpr int operator[](int axis) const { return order[axis]; }
  auto operator<=>(const MultiIndex&) const = default;
};

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

/// alpha! = prod alpha_i!
inline double factorial(const MultiIndex& alpha) {
  return factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2]);
}

inline std::string describe(const MultiIndex& a) {
  return "(" + std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]) + ")";
}

/// All multi-indices in `dim` variables with total order <= max_order, by
/// increasing total order, lexicographic within an order.
inline std::vector<MultiIndex> multi_indices(int dim, int max_order) {
  require(dim >= 1 && dim <= 3, ErrorKind::UnsupportedDimension, "dimension must be 1, 2 or 3");
  require(max_order >= 0 && max_order <= kMaxDerivativeOrder, ErrorKind::OrderTooHigh,
          "order " + std::to_string(max_order) + " exceeds " + std::to_string(kMaxDerivativeOrder));
  std::vector<MultiIndex> out;
  for (int total = 0; total <= max_order; ++total) {
    for (int a = total; a >= 0; --a) {
      if (dim == 1) {
        if (a == total) out.push_back(MultiIndex{{a, 0, 0}});
        continue;
      }
      for (int b = total - a; b >= 0; --b) {
        const int c = total - a - b;
        if (dim == 2 && c != 0) continue;
        out.push_back(MultiIndex{{a, b, c}});
      }
    }
  }
  return out;
}

namespace detail {

// Physicists' Hermite coefficients h_k(y) = sum_j c[k][j] y^j from
// h_{k+1} = 2y h_k - 2k h_{k-1}; exact in 64-bit integers up to k = 12.
struct PhysHermiteTable {
  long long c[kMaxDerivativeOrder + 1][kMaxDerivativeOrder + 1]{};
  constexpr PhysHermiteTable() {
    c[0][0] = 1;
    c[1][1] = 2;
    for (int k = 1; k < kMaxDerivativeOrder; ++k)
      for (int j = 0; j <= k + 1; ++j)
        c[k + 1][j] = (j > 0 ? 2 * c[k][j - 1] : 0) - 2 * k * c[k - 1][j];
  }
};

inline constexpr PhysHermiteTable kPhysHermite{};

inline double phys_hermite(int k, double y) {
  double acc = 0.0;
  for (int j = k; j >= 0; --j) acc = acc * y + static_cast<double>(kPhysHermite.c[k][j]);
  return acc;
}

}  // namespace detail

inline void require_positive_time(double t) {
  require(t > 0.0 && std::isfinite(t), ErrorKind::NonPositiveTime, "time must be positive, got " + std::to_string(t));
}

/// mass (4 pi a t)^{-N/2} exp(-|x-center|^2 / (4 a t)) for diffusivity a.
inline double gaussian(const Point& x, double t, int dim, double mass = 1.0, const Point& center = {},
                       Diffusivity d = Diffusivity::Unit) {
  require_positive_time(t);
  const double at = value(d) * t;
  return mass * std::pow(4.0 * kPi * at, -0.5 * dim) * std::exp(-norm2(x - center) / (4.0 * at));
}

/// One-dimensional heat kernel, used by the separable evaluators.
inline double gaussian_1d(double x, double t, Diffusivity d = Diffusivity::Unit) {
  const double at = value(d) * t;
  return std::exp(-x * x / (4.0 * at)) / std::sqrt(4.0 * kPi * at);
}

/// D^alpha G_t(x), factorized per axis through the Hermite form of the
/// derivatives of exp(-x^2/4at).
inline double gaussian_derivative(const Point& x, double t, const MultiIndex& alpha, int dim,
                                  Diffusivity d = Diffusivity::Unit) {
  require_positive_time(t);
  require(alpha.total() <= kMaxDerivativeOrder, ErrorKind::OrderTooHigh,
          "derivative order " + std::to_string(alpha.total()) + " exceeds table");
  for (int a = dim; a < 3; ++a)
    require(alpha[a] == 0, ErrorKind::InvalidArgument, "multi-index uses an axis beyond dim");
  const double at = value(d) * t;
  const double width = std::sqrt(4.0 * at);
  double result = 1.0;
  for (int a = 0; a < dim; ++a) {
    const int k = alpha[a];
    const double y = x[a] / width;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    result *= sign * std::pow(width, -k) * detail::phys_hermite(k, y) * std::exp(-y * y) /
              std::sqrt(4.0 * kPi * at);
  }
  return result;
}

/// strength * (-d/dx G_t)(x) in one dimension, constants included.
inline double dipole(double x, double t, double strength = 1.0) {
  require_positive_time(t);
  return strength * (x / (2.0 * t)) * std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
}

struct GaussianSolution {
  double mass = 1.0;
  Point center{};
  double time_shift = 0.0;
};
struct GaussianDerivativeSolution {
  MultiIndex alpha;
  double scale = 1.0;
};
struct DipoleSolution {
  double strength = 1.0;
};
/// C exp(c^2 t + c x), dim 1 only.
struct TravellingWave {
  double amplitude = 1.0;
  double speed = 1.0;
};
/// C (T-t)^{-N/2} exp(|x|^2 / 4(T-t)), valid for t < T.
struct BlowUpSolution {
  double amplitude = 1.0;
  double blowup_time = 1.0;
};
enum class CaloricPolynomial { One, SquarePlus2Nt };

using SpecialSolution = std::variant<GaussianSolution, GaussianDerivativeSolution, DipoleSolution,
                                     TravellingWave, BlowUpSolution, CaloricPolynomial>;

inline double special(const SpecialSolution& kind, const Point& x, double t, int dim) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GaussianSolution>) {
          return gaussian(x, t + k.time_shift, dim, k.mass, k.center);
        } else if constexpr (std::is_same_v<K, GaussianDerivativeSolution>) {
          return k.scale * gaussian_derivative(x, t, k.alpha, dim);
        } else if constexpr (std::is_same_v<K, DipoleSolution>) {
          require(dim == 1, ErrorKind::UnsupportedDimension, "dipole is one-dimensional");
          return dipole(x[0], t, k.strength);
        } else if constexpr (std::is_same_v<K, TravellingWave>) {
          require(dim == 1, ErrorKind::UnsupportedDimension, "travelling wave is one-dimensional");
          return k.amplitude * std::exp(k.speed * k.speed * t + k.speed * x[0]);
        } else if constexpr (std::is_same_v<K, BlowUpSolution>) {
          const double left = k.blowup_time - t;
          require(left > 0.0, ErrorKind::EvaluationPastBlowUp,
                  "t = " + std::to_string(t) + " is not before T = " + std::to_string(k.blowup_time));
          return k.amplitude * std::pow(left, -0.5 * dim) * std::exp(norm2(x) / (4.0 * left));
        } else {
          return k == CaloricPolynomial::One ? 1.0 : norm2(x) + 2.0 * dim * t;
        }
      },
      kind);
}

struct ResidualSteps {
  double space = 1e-3;
  double time = 1e-4;
};

/// d_t u - a Lap u by centered differences; ~0 iff u is caloric near (x, t).
template <class U>
double heat_residual(U&& u, const Point& x, double t, int dim, Diffusivity d = Diffusivity::Unit,
                     ResidualSteps steps = {}) {
  const double ht = std::min(steps.time, 0.5 * t > 0.0 ? 0.5 * t : steps.time);
  const double ut = (u(x, t + ht) - u(x, t - ht)) / (2.0 * ht);
  const double center = u(x, t);
  double lap = 0.0;
  for (int a = 0; a < dim; ++a) {
    Point xp = x, xm = x;
    xp[a] += steps.space;
    xm[a] -= steps.space;
    lap += (u(xp, t) - 2.0 * center + u(xm, t)) / (steps.space * steps.space);
  }
  return ut - value(d) * lap;
}

}  // namespace heatlab
