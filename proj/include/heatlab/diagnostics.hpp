#pragma once

// Mass and moment bookkeeping along evolutions.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/numeric.hpp"

namespace heatlab {

inline constexpr double kMassEps = 1e-12;

struct MomentReport {
  double mass = 0.0;
  Point first_moment{};
  double second_moment = 0.0;
  // Equal to second_moment when the mass is degenerate (no center exists).
  double centered_second = 0.0;
  std::optional<double> third_abs;
  std::optional<Point> center_of_mass;
};

inline MomentReport moments(const Field& f) {
  const int dim = f.grid().dim;
  MomentReport r;
  r.mass = quadrature(f);
  for (int a = 0; a < dim; ++a) r.first_moment[a] = quadrature(f, [a](const Point& x) { return x[a]; });
  r.second_moment = quadrature(f, [](const Point& x) { return norm2(x); });
  r.third_abs = quadrature(map_nodes(f, [](const Point&, double v) { return std::abs(v); }),
                           [](const Point& x) { return std::pow(norm2(x), 1.5); });
  r.centered_second = r.second_moment;
  if (std::abs(r.mass) > kMassEps) {
    const Point c = scaled(r.first_moment, 1.0 / r.mass);
    r.center_of_mass = c;
    r.centered_second = quadrature(f, [&c](const Point& x) { return norm2(x - c); });
  }
  return r;
}

struct ConservationReport {
  double mass_drift = 0.0;
  double first_moment_drift = 0.0;
  double second_moment_slope = 0.0;
  double centered_second_slope = 0.0;
};

inline ConservationReport conservation_report(std::span<const Field> series) {
  require(series.size() >= 3, ErrorKind::TooFewPoints,
          "conservation report needs >= 3 time points, got " + std::to_string(series.size()));
  for (const Field& f : series) require_compatible(series.front(), f);
  std::vector<double> t, n2, n2c;
  ConservationReport out;
  const MomentReport first = moments(series.front());
  for (const Field& f : series) {
    const MomentReport m = moments(f);
    out.mass_drift = std::max(out.mass_drift, std::abs(m.mass - first.mass));
    for (int a = 0; a < 3; ++a)
      out.first_moment_drift = std::max(out.first_moment_drift, std::abs(m.first_moment[a] - first.first_moment[a]));
    t.push_back(f.time());
    n2.push_back(m.second_moment);
    n2c.push_back(m.centered_second);
  }
  out.second_moment_slope = fit_line(t, n2).slope;
  out.centered_second_slope = fit_line(t, n2c).slope;
  return out;
}

/// integral of |u|^p; p = infinity gives the sup norm.
inline double p_energy(const Field& f, double p) {
  require(p >= 1.0, ErrorKind::InvalidArgument, "p-energy needs p >= 1");
  if (std::isinf(p)) return norm(f, kSup);
  return std::pow(norm(f, Lp{p}), p);
}

struct EnergyDecayReport {
  std::vector<double> values;
  bool non_increasing = true;
  double largest_increase = 0.0;  // relative to the previous value
};

inline EnergyDecayReport energy_decay_check(std::span<const Field> series, double p, double rel_tol = 1e-12) {
  require(series.size() >= 3, ErrorKind::TooFewPoints, "energy decay check needs >= 3 time points");
  EnergyDecayReport r;
  for (const Field& f : series) r.values.push_back(p_energy(f, p));
  for (std::size_t i = 1; i < r.values.size(); ++i) {
    const double prev = r.values[i - 1];
    const double rise = prev > 0.0 ? (r.values[i] - prev) / prev : r.values[i];
    r.largest_increase = std::max(r.largest_increase, rise);
    if (rise > rel_tol) r.non_increasing = false;
  }
  return r;
}

}  // namespace heatlab
