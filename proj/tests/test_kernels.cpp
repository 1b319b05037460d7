#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heatlab/grid.hpp"
#include "heatlab/kernels.hpp"

using namespace heatlab;

namespace {

// Independent finite-difference oracle on a scalar function of x_axis.
template <class F>
double central_difference(F&& f, Point x, int axis, double step) {
  Point xp = x, xm = x;
  xp[axis] += step;
  xm[axis] -= step;
  return (f(xp) - f(xm)) / (2.0 * step);
}

}  // namespace

TEST(Gaussian, ReferenceValues) {
  EXPECT_NEAR(gaussian({0, 0, 0}, 1.0, 1), 0.2820948, 1e-7);
  EXPECT_NEAR(gaussian({0, 0, 0}, 1.0, 1, 2.0), 0.5641896, 1e-7);
  EXPECT_NEAR(gaussian({0, 0, 0}, 1.0, 1, 1.0, {}, Diffusivity::Half), 0.3989423, 1e-7);
  EXPECT_THROW(gaussian({0, 0, 0}, 0.0, 1), Error);
}

TEST(Gaussian, HalfDiffusivityMatchesProbabilisticForm) {
  const Point x{0.7, -0.3, 0.0};
  const double t = 1.7;
  EXPECT_NEAR(gaussian(x, t, 2, 1.0, {}, Diffusivity::Half),
              std::exp(-norm2(x) / (2.0 * t)) / (2.0 * kPi * t), 1e-15);
}

TEST(Gaussian, ScaleInvarianceProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-3.0, 3.0), logk(-1.5, 1.5), time(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 1 + trial % 3;
    Point x{0, 0, 0};
    for (int a = 0; a < dim; ++a) x[a] = coord(rng);
    const double k = std::exp(logk(rng)), t = time(rng);
    const double lhs = std::pow(k, dim) * gaussian(scaled(x, k), k * k * t, dim);
    const double rhs = gaussian(x, t, dim);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, rhs));
  }
}

TEST(GaussianDerivative, OrderZeroAndSymmetry) {
  const Point x{0.4, -1.1, 0.0};
  EXPECT_DOUBLE_EQ(gaussian_derivative(x, 1.3, MultiIndex{}, 2), gaussian(x, 1.3, 2));
  EXPECT_NEAR(gaussian_derivative({0, 0, 0}, 1.0, MultiIndex{{1, 0, 0}}, 1), 0.0, 1e-17);
}

TEST(GaussianDerivative, FirstDerivativeAgainstFiniteDifference) {
  const auto g1 = [](const Point& x) { return gaussian(x, 1.0, 1); };
  const double fd = central_difference(g1, {2.0, 0, 0}, 0, 1e-5);
  const double exact = gaussian_derivative({2.0, 0, 0}, 1.0, MultiIndex{{1, 0, 0}}, 1);
  EXPECT_NEAR(exact, fd, 1e-8);
  EXPECT_NEAR(exact, -0.1037769, 1e-7);
}

TEST(GaussianDerivative, HigherOrdersAgainstFiniteDifferenceOfLowerOrder) {
  const double t = 0.8;
  for (int k = 1; k <= 10; ++k) {
    for (double x0 : {-2.1, -0.3, 0.9, 3.2}) {
      const MultiIndex lower{{k - 1, 0, 0}}, current{{k, 0, 0}};
      const auto f = [&](const Point& x) { return gaussian_derivative(x, t, lower, 1); };
      const double fd = central_difference(f, {x0, 0, 0}, 0, 1e-4);
      const double exact = gaussian_derivative({x0, 0, 0}, t, current, 1);
      EXPECT_NEAR(exact, fd, 1e-6 * std::max(1.0, std::abs(exact))) << "k=" << k << " x=" << x0;
    }
  }
  // mixed 2D derivative
  const MultiIndex a21{{2, 1, 0}}, a20{{2, 0, 0}};
  const auto f = [&](const Point& x) { return gaussian_derivative(x, t, a20, 2); };
  const Point x{0.5, -0.7, 0.0};
  EXPECT_NEAR(gaussian_derivative(x, t, a21, 2), central_difference(f, x, 1, 1e-4), 1e-7);
}

TEST(GaussianDerivative, OrderLimit) {
  EXPECT_THROW(gaussian_derivative({0, 0, 0}, 1.0, MultiIndex{{13, 0, 0}}, 1), Error);
  try {
    gaussian_derivative({0, 0, 0}, 1.0, MultiIndex{{7, 6, 0}}, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OrderTooHigh);
  }
}

TEST(GaussianDerivative, ZeroIntegralProperty) {
  const GridSpec g = make_grid(2, 12.0, 128);
  for (const MultiIndex& a : {MultiIndex{{1, 0, 0}}, MultiIndex{{0, 1, 0}}, MultiIndex{{1, 1, 0}},
                              MultiIndex{{2, 0, 0}}, MultiIndex{{3, 2, 0}}}) {
    const Field f = sample(g, [&](const Point& x) { return gaussian_derivative(x, 1.5, a, 2); });
    EXPECT_LE(std::abs(quadrature(f)), 1e-8) << describe(a);
  }
}

TEST(Gaussian, TimeDerivativeLowerBound) {
  // d_t G = Lap G >= -(N/2) G / t, with equality at the origin
  for (int dim = 1; dim <= 3; ++dim) {
    const GridSpec g = make_grid(dim, 6.0, dim == 3 ? 8 : 32);
    const double t = 1.3;
    auto dtG = [&](const Point& x) {
      double lap = 0.0;
      for (int a = 0; a < dim; ++a) {
        MultiIndex two{};
        two.order[a] = 2;
        lap += gaussian_derivative(x, t, two, dim);
      }
      return lap;
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Point x = g.node(i);
      EXPECT_GE(dtG(x), -0.5 * dim * gaussian(x, t, dim) / t - 1e-15);
    }
    const Point origin{0, 0, 0};
    EXPECT_NEAR(dtG(origin), -0.5 * dim * gaussian(origin, t, dim) / t, 1e-15);
  }
}

TEST(Dipole, BasicValues) {
  EXPECT_EQ(dipole(0.0, 2.0), 0.0);
  const double x = 1.3, t = 0.7;
  EXPECT_NEAR(dipole(x, t), -gaussian_derivative({x, 0, 0}, t, MultiIndex{{1, 0, 0}}, 1), 1e-16);
}

TEST(Dipole, HalfLineMomentsAgainstClosedForm) {
  const GridSpec g = make_grid(1, 80.0, 16384);
  for (double t : {1.0, 4.0, 16.0}) {
    const Field d = sample(g, [&](const Point& x) { return x[0] > 0 ? dipole(x[0], t) : 0.0; });
    // closed form: (4 pi t)^{-1/2} / (2t) * sqrt(pi) / (4 b^{3/2}), b = 1/(4t) -> 1/2
    const double b = 1.0 / (4.0 * t);
    const double oracle = std::pow(4.0 * kPi * t, -0.5) / (2.0 * t) * std::sqrt(kPi) / (4.0 * std::pow(b, 1.5));
    EXPECT_NEAR(oracle, 0.5, 1e-14);
    EXPECT_NEAR(quadrature(d, [](const Point& x) { return x[0]; }), oracle, 1e-9) << "t=" << t;
    // the integrand has slope D'(0) = (4 pi t)^{-1/2} / 2t at the cut, so the
    // midpoint rule overshoots by h^2/24 of that
    const double h = g.spacing;
    const double slope_at_cut = std::pow(4.0 * kPi * t, -0.5) / (2.0 * t);
    EXPECT_NEAR(quadrature(d) - h * h / 24.0 * slope_at_cut, 1.0 / std::sqrt(4.0 * kPi * t), 1e-11) << "t=" << t;
  }
}

TEST(Special, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(special(CaloricPolynomial::SquarePlus2Nt, {0, 0, 0}, 1.0, 2), 4.0);
  EXPECT_DOUBLE_EQ(special(CaloricPolynomial::One, {3, 1, 0}, 7.0, 2), 1.0);
  EXPECT_NEAR(special(TravellingWave{1.0, 1.0}, {0, 0, 0}, 1.0, 1), std::exp(1.0), 1e-15);
  EXPECT_NEAR(special(GaussianSolution{2.0, {1, 0, 0}, 1.0}, {1, 0, 0}, 1.0, 1), 2.0 / std::sqrt(8.0 * kPi), 1e-15);
}

TEST(Special, GuardedKinds) {
  try {
    special(BlowUpSolution{1.0, 2.0}, {0, 0, 0}, 2.0, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EvaluationPastBlowUp);
  }
  EXPECT_THROW(special(TravellingWave{}, {0, 0, 0}, 1.0, 2), Error);
}

TEST(HeatResidual, CatalogSolutionsAreCaloric) {
  const auto gauss = [](const Point& x, double t) { return gaussian(x, t, 1); };
  EXPECT_LE(std::abs(heat_residual(gauss, {1, 0, 0}, 1.0, 1)), 1e-6);

  const auto poly = [](const Point& x, double t) { return special(CaloricPolynomial::SquarePlus2Nt, x, t, 3); };
  EXPECT_NEAR(heat_residual(poly, {0.3, -1.2, 2.0}, 1.5, 3), 0.0, 1e-6);

  const auto blowup = [](const Point& x, double t) { return special(BlowUpSolution{1.0, 2.0}, x, t, 1); };
  EXPECT_LE(std::abs(heat_residual(blowup, {1, 0, 0}, 1.0, 1)), 1e-6);

  const auto wave = [](const Point& x, double t) { return special(TravellingWave{0.5, 0.8}, x, t, 1); };
  EXPECT_LE(std::abs(heat_residual(wave, {0.2, 0, 0}, 0.5, 1)), 1e-6);

  const auto half = [](const Point& x, double t) { return gaussian(x, t, 2, 1.0, {}, Diffusivity::Half); };
  EXPECT_LE(std::abs(heat_residual(half, {0.5, 0.5, 0}, 1.0, 2, Diffusivity::Half)), 1e-6);
}

TEST(HeatResidual, ScalingGeneratorCombination) {
  // v = x u_x + 2 t u_t with u = G_t is again caloric; u_t = u_xx
  const auto v = [](const Point& x, double t) {
    const double ux = gaussian_derivative(x, t, MultiIndex{{1, 0, 0}}, 1);
    const double ut = gaussian_derivative(x, t, MultiIndex{{2, 0, 0}}, 1);
    return x[0] * ux + 2.0 * t * ut;
  };
  EXPECT_LE(std::abs(heat_residual(v, {1, 0, 0}, 1.0, 1)), 1e-5);
}

TEST(HeatResidual, DetectsNonSolutions) {
  const auto not_caloric = [](const Point& x, double) { return x[0] * x[0]; };
  EXPECT_NEAR(heat_residual(not_caloric, {0.5, 0, 0}, 1.0, 1), -2.0, 1e-5);
}
