#pragma once

// Time series of the quadratic and entropy functionals along the
// renormalized flow, computed either through the physical frame or from the
// Hermite series.

#include <cmath>
#include <limits>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/hermite.hpp"
#include "heatlab/renormalized.hpp"

namespace heatlab {

enum class Evolution { PDE, Spectral };

struct EntropySeries {
  std::vector<double> times;
  std::vector<double> E;  // entropy relative to G; NaN when v is not a density
  std::vector<double> I;  // Fisher information; NaN likewise
  std::vector<double> F;  // int |w - 1|^2 dmu
  std::vector<double> D;  // 2 int |grad w|^2 dmu
};

namespace detail {

inline void require_log_times(const std::vector<double>& times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.0 && std::isfinite(times[i]), ErrorKind::NonPositiveTime, "log-times must be >= 0");
    if (i > 0) require(times[i] > times[i - 1], ErrorKind::InvalidArgument, "log-times must increase strictly");
  }
}

// Strict: any negative node marks v as signed, however small.
inline bool is_density(const Field& v) {
  for (double x : v.values())
    if (x < 0.0) return false;
  return std::abs(quadrature(v) - 1.0) <= 1e-6;
}

inline void push_point(EntropySeries& s, double t, const Field& w) {
  const Field v = fp_from_ou(w);
  const bool density = is_density(v);
  s.times.push_back(t);
  s.E.push_back(density ? entropy(v) : std::numeric_limits<double>::quiet_NaN());
  s.I.push_back(density ? fisher(v) : std::numeric_limits<double>::quiet_NaN());
  s.F.push_back(ou_energy(w));
  s.D.push_back(ou_dissipation(w));
}

}  // namespace detail

/// Evolves w0 (OU frame, unit mu-mass) and records F and D, plus E and I
/// when G w is a probability density.
inline EntropySeries ou_decay_series(const Field& w0, const std::vector<double>& times, Evolution how,
                                     int k_max = 8) {
  detail::require_log_times(times);
  const double m = mu_mean(w0);
  require(std::abs(m - 1.0) <= 1e-6, ErrorKind::MassMismatch,
          "w0 has mu-mass " + std::to_string(m) + "; normalize to 1 first");
  EntropySeries s;
  if (how == Evolution::PDE) {
    for (double t : times) detail::push_point(s, t, ou_evolve(w0, t));
  } else {
    const HermiteCoeffs c = expand(w0, k_max);
    for (double t : times) detail::push_point(s, t, reconstruct(spectral_evolve(c, t), w0.grid(), t));
  }
  return s;
}

/// v(t) through the physical frame; E and I are always defined here.
inline EntropySeries entropy_decay_series(const Field& v0, const std::vector<double>& times) {
  detail::require_log_times(times);
  entropy(v0);  // validates v0 as a density
  EntropySeries s;
  for (double t : times) detail::push_point(s, t, to_ou(fp_evolve(v0, t)));
  return s;
}

struct RateCheck {
  double derivative = 0.0;  // centered difference of the functional in t
  double predicted = 0.0;   // minus the dissipation it should equal
  double relative_gap = 0.0;
};

/// dE/dt against -I at log-time t (t >= dt).
inline RateCheck entropy_rate_check(const Field& v0, double t, double dt = 1e-3) {
  require(t >= dt && dt > 0.0, ErrorKind::InvalidArgument, "need t >= dt > 0");
  const double ep = entropy(fp_evolve(v0, t + dt));
  const double em = entropy(fp_evolve(v0, t - dt));
  RateCheck r;
  r.derivative = (ep - em) / (2.0 * dt);
  r.predicted = -fisher(fp_evolve(v0, t));
  r.relative_gap = std::abs(r.derivative - r.predicted) / std::abs(r.predicted);
  return r;
}

/// dF/dt against -D along the spectral flow at log-time t.
inline RateCheck energy_rate_check(const Field& w0, double t, int k_max = 8, double dt = 1e-3) {
  require(t >= dt && dt > 0.0, ErrorKind::InvalidArgument, "need t >= dt > 0");
  const HermiteCoeffs c = expand(w0, k_max);
  const auto at = [&](double s) { return reconstruct(spectral_evolve(c, s), w0.grid(), s); };
  RateCheck r;
  r.derivative = (ou_energy(at(t + dt)) - ou_energy(at(t - dt))) / (2.0 * dt);
  r.predicted = -ou_dissipation(at(t));
  r.relative_gap = std::abs(r.derivative - r.predicted) / std::abs(r.predicted);
  return r;
}

}  // namespace heatlab
