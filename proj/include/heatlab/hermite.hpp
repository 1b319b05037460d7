#pragma once

// Probabilists' Hermite polynomials and the spectral form of the
// Ornstein-Uhlenbeck flow: w(x, t) = sum_alpha c_alpha H_alpha(x) e^{-|alpha| t}.

#include <cmath>
#include <map>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/renormalized.hpp"

namespace heatlab {

/// Integer coefficients in the monomial basis, coeffs[j] multiplying x^j.
struct HermitePoly {
  int degree = 0;
  std::vector<long long> coeffs{1};

  double operator()(double x) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + static_cast<double>(*it);
    return acc;
  }
  bool operator==(const HermitePoly&) const = default;
};

namespace detail {

inline std::vector<long long> derivative(const std::vector<long long>& p) {
  if (p.size() <= 1) return {0};
  std::vector<long long> d(p.size() - 1);
  for (std::size_t j = 1; j < p.size(); ++j) d[j - 1] = static_cast<long long>(j) * p[j];
  return d;
}

/// x p - p'
inline std::vector<long long> raise(const std::vector<long long>& p) {
  std::vector<long long> out(p.size() + 1, 0);
  for (std::size_t j = 0; j < p.size(); ++j) out[j + 1] += p[j];
  const auto d = derivative(p);
  for (std::size_t j = 0; j < d.size(); ++j) out[j] -= d[j];
  return out;
}

inline void require_hermite_order(int k) {
  require(k >= 0 && k <= kMaxDerivativeOrder, ErrorKind::OrderTooHigh,
          "Hermite degree " + std::to_string(k) + " outside 0.." + std::to_string(kMaxDerivativeOrder));
}

}  // namespace detail

/// H_{k+1} = x H_k - H_k'.
inline HermitePoly hermite_1d(int k) {
  detail::require_hermite_order(k);
  HermitePoly h;
  for (int j = 0; j < k; ++j) h.coeffs = detail::raise(h.coeffs);
  h.degree = k;
  return h;
}

/// (-1)^k G^{-1} D^k G, carried out on the polynomial factor: D(p G) = (p' - x p) G.
inline HermitePoly rodrigues_1d(int k) {
  detail::require_hermite_order(k);
  std::vector<long long> p{1};
  for (int j = 0; j < k; ++j) {
    const auto d = detail::derivative(p);
    std::vector<long long> next(p.size() + 1, 0);
    for (std::size_t i = 0; i < d.size(); ++i) next[i] += d[i];
    for (std::size_t i = 0; i < p.size(); ++i) next[i + 1] -= p[i];
    p = std::move(next);
  }
  if (k % 2 == 1)
    for (long long& c : p) c = -c;
  return {k, p};
}

inline double hermite_multi(const MultiIndex& alpha, const Point& x) {
  detail::require_hermite_order(alpha.total());
  double v = 1.0;
  for (int a = 0; a < 3; ++a)
    if (alpha[a] > 0) v *= hermite_1d(alpha[a])(x[a]);
  return v;
}

inline Field hermite_field(const MultiIndex& alpha, const GridSpec& g) {
  detail::require_hermite_order(alpha.total());
  std::array<HermitePoly, 3> h{hermite_1d(alpha[0]), hermite_1d(alpha[1]), hermite_1d(alpha[2])};
  return sample(g, [&](const Point& x) {
    double v = 1.0;
    for (int a = 0; a < g.dim; ++a) v *= h[a](x[a]);
    return v;
  });
}

struct HermiteCoeffs {
  int dim = 1;
  int k_max = 0;
  std::map<MultiIndex, double> c;

  double at(const MultiIndex& a) const {
    const auto it = c.find(a);
    return it == c.end() ? 0.0 : it->second;
  }
};

inline double expansion_half_width(int k_max) { return std::max(6.0, std::sqrt(2.0 * k_max)); }

/// c_alpha = <w0, H_alpha>_mu / alpha!
inline HermiteCoeffs expand(const Field& w0, int k_max) {
  detail::require_hermite_order(k_max);
  const GridSpec& g = w0.grid();
  require(g.half_width >= expansion_half_width(k_max), ErrorKind::GridTooSmall,
          "expansion needs half_width >= " + std::to_string(expansion_half_width(k_max)));
  HermiteCoeffs out{g.dim, k_max, {}};
  for (const MultiIndex& a : multi_indices(g.dim, k_max))
    out.c[a] = mu_inner(w0, hermite_field(a, g)) / factorial(a);
  return out;
}

inline HermiteCoeffs spectral_evolve(const HermiteCoeffs& c, double t) {
  require(t >= 0.0, ErrorKind::NonPositiveTime, "spectral evolution needs t >= 0");
  HermiteCoeffs out = c;
  for (auto& [alpha, value] : out.c) value *= std::exp(-alpha.total() * t);
  return out;
}

inline Field reconstruct(const HermiteCoeffs& c, const GridSpec& g, double time = 0.0) {
  require(c.dim == g.dim, ErrorKind::GridMismatch, "coefficient dimension differs from grid");
  std::vector<double> acc(g.size(), 0.0);
  for (const auto& [alpha, value] : c.c) {
    if (value == 0.0) continue;
    const Field h = hermite_field(alpha, g);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += value * h[i];
  }
  return Field(g, std::move(acc), time);
}

/// sum c_alpha^2 alpha!, the squared mu-norm of the truncated series.
inline double parseval_sum(const HermiteCoeffs& c) {
  double s = 0.0;
  for (const auto& [alpha, value] : c.c) s += value * value * factorial(alpha);
  return s;
}

/// mu-norm of (flow of w0 through the physical frame) minus the series
/// truncated at k_max.
inline double truncation_error(const Field& w0, int k_max, double t) {
  const Field exact = ou_evolve(w0, t);
  const Field series = reconstruct(spectral_evolve(expand(w0, k_max), t), w0.grid(), t);
  return norm(exact - series.with_time(exact.time()), L2Gauss{});
}

}  // namespace heatlab
