#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "heatlab/hermite.hpp"

using namespace heatlab;

namespace {

// Closed form H_k = sum_{a + 2b = k} (-1)^b k! / (a! b! 2^b) x^a, in integers.
std::vector<long long> closed_form(int k) {
  std::vector<long long> c(k + 1, 0);
  auto fact = [](int n) {
    long long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  for (int b = 0; 2 * b <= k; ++b) {
    const int a = k - 2 * b;
    const long long magnitude = fact(k) / (fact(a) * fact(b) * (1LL << b));
    c[a] = (b % 2 == 0 ? 1 : -1) * magnitude;
  }
  return c;
}

const GridSpec& mu_grid() {
  static const GridSpec g = make_grid(1, 12.0, 1024);
  return g;
}

}  // namespace

TEST(Hermite, LowDegrees) {
  EXPECT_EQ(hermite_1d(0).coeffs, (std::vector<long long>{1}));
  EXPECT_EQ(hermite_1d(1).coeffs, (std::vector<long long>{0, 1}));
  EXPECT_EQ(hermite_1d(2).coeffs, (std::vector<long long>{-1, 0, 1}));
  EXPECT_EQ(hermite_1d(3).coeffs, (std::vector<long long>{0, -3, 0, 1}));
  EXPECT_THROW(hermite_1d(13), Error);
}

TEST(Hermite, RecursionMatchesClosedFormAndRodrigues) {
  for (int k = 0; k <= kMaxDerivativeOrder; ++k) {
    EXPECT_EQ(hermite_1d(k).coeffs, closed_form(k)) << "k=" << k;
    EXPECT_EQ(rodrigues_1d(k), hermite_1d(k)) << "k=" << k;
  }
}

TEST(Hermite, SquaredNormIsFactorial) {
  const GridSpec& g = mu_grid();
  for (int k = 0; k <= 8; ++k) {
    const Field h = hermite_field(MultiIndex{{k, 0, 0}}, g);
    EXPECT_NEAR(mu_inner(h, h) / factorial(k), 1.0, 1e-10) << "k=" << k;
  }
}

TEST(Hermite, OrthogonalityMatrix2D) {
  const GridSpec g = make_grid(2, 10.0, 200);
  const auto alphas = multi_indices(2, 6);
  std::vector<Field> fields;
  for (const auto& a : alphas) fields.push_back(hermite_field(a, g));
  double worst = 0.0;
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double expected = i == j ? factorial(alphas[i]) : 0.0;
      worst = std::max(worst, std::abs(mu_inner(fields[i], fields[j]) - expected));
    }
  EXPECT_LE(worst, 1e-8);
  EXPECT_NEAR(mu_inner(hermite_field(MultiIndex{{2, 0, 0}}, g), hermite_field(MultiIndex{{1, 1, 0}}, g)), 0.0, 1e-8);
}

TEST(Hermite, EigenfunctionsOfOuOperator) {
  const GridSpec g = make_grid(2, 8.0, 256);
  for (const MultiIndex& a : multi_indices(2, 6)) {
    const Field h = hermite_field(a, g);
    const double residual = interior_sup(ou_operator(h) + static_cast<double>(a.total()) * h, kStencilRing);
    EXPECT_LE(residual, 1e-5 * norm(h, kSup)) << describe(a);
  }
  EXPECT_DOUBLE_EQ(hermite_multi(MultiIndex{{1, 1, 0}}, {2.0, 3.0, 0.0}), 6.0);
  EXPECT_DOUBLE_EQ(hermite_multi(MultiIndex{}, {2.0, 3.0, 0.0}), 1.0);
}

TEST(Expand, SimpleFunctions) {
  const GridSpec& g = mu_grid();
  const HermiteCoeffs one = expand(sample(g, [](const Point&) { return 1.0; }), 6);
  EXPECT_NEAR(one.at(MultiIndex{}), 1.0, 1e-10);
  for (const auto& [a, c] : one.c)
    if (a.total() > 0) {
      EXPECT_LE(std::abs(c), 1e-10);
    }

  const HermiteCoeffs sq = expand(sample(g, [](const Point& x) { return x[0] * x[0]; }), 6);
  EXPECT_NEAR(sq.at(MultiIndex{}), 1.0, 1e-8);
  EXPECT_NEAR(sq.at(MultiIndex{{2, 0, 0}}), 1.0, 1e-8);
  for (const auto& [a, c] : sq.c)
    if (a.total() != 0 && a.total() != 2) {
      EXPECT_LE(std::abs(c), 1e-8);
    }

  // first coefficient of w0 = G(. - h)/G is the first moment of G(. - h)
  const Field w = to_ou(sample(g, [](const Point& x) { return stationary_gaussian({x[0] - 0.5, 0, 0}, 1); }));
  const HermiteCoeffs shifted = expand(w, 4);
  EXPECT_NEAR(shifted.at(MultiIndex{}), 1.0, 1e-10);
  EXPECT_NEAR(shifted.at(MultiIndex{{1, 0, 0}}), 0.5, 1e-10);

  EXPECT_EQ(shifted.c.size(), 5u);
}

TEST(Expand, GridGuard) {
  try {
    expand(Field::zeros(make_grid(1, 5.0, 64)), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridTooSmall);
  }
}

TEST(Spectral, EvolutionAndParseval) {
  const GridSpec& g = mu_grid();
  const Field w0 = sample(g, [](const Point& x) { return 1.0 + 0.3 * x[0] + 0.2 * (x[0] * x[0] - 1.0); });
  const HermiteCoeffs c = expand(w0, 8);
  EXPECT_NEAR(parseval_sum(c), mu_inner(w0, w0), 1e-6);
  const HermiteCoeffs same = spectral_evolve(c, 0.0);
  for (const auto& [a, v] : c.c) EXPECT_EQ(same.at(a), v);

  const Field mode = hermite_field(MultiIndex{{3, 0, 0}}, g);
  const HermiteCoeffs cm = expand(mode, 4);
  for (double t : {0.5, 1.0}) {
    const Field evolved = reconstruct(spectral_evolve(cm, t), g);
    EXPECT_NEAR(norm(evolved, L2Gauss{}) / norm(mode, L2Gauss{}), std::exp(-3.0 * t), 1e-9);
  }
  EXPECT_THROW(spectral_evolve(c, -1.0), Error);
}

TEST(Spectral, AgreesWithPhysicalPipeline) {
  const GridSpec g = make_grid(1, 10.0, 1024);
  const Field w0 = sample(g, [](const Point& x) { return 1.0 + 0.3 * x[0] + 0.2 * (x[0] * x[0] - 1.0); });
  const HermiteCoeffs c = expand(w0, 6);
  for (double t : {0.5, 1.0, 2.0}) {
    const Field pde = ou_evolve(w0, t);
    const Field spectral = reconstruct(spectral_evolve(c, t), g);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::abs(g.coord(i)) <= 4.0) worst = std::max(worst, std::abs(pde[i] - spectral[i]));
    EXPECT_LE(worst, 1e-3) << "t=" << t;
  }
}

TEST(Truncation, ClosureAndLeftOutMode) {
  const GridSpec g = make_grid(1, 10.0, 1024);
  const Field band = sample(g, [](const Point& x) { return 1.0 + 0.5 * x[0]; });
  EXPECT_LE(truncation_error(band, 2, 1.0), 1e-6);

  const Field w0 = sample(g, [](const Point& x) { return 1.0 + x[0] * x[0] * x[0] - 3.0 * x[0]; });
  for (double t : {0.5, 1.0, 2.0})
    EXPECT_NEAR(truncation_error(w0, 2, t), std::sqrt(6.0) * std::exp(-3.0 * t), 1e-4) << "t=" << t;
}

TEST(Truncation, ErrorDecaysLikeFirstOmittedMode) {
  const GridSpec g = make_grid(1, 10.0, 1024);
  const Field w0 = to_ou(sample(g, [](const Point& x) {
    return 0.5 * stationary_gaussian({x[0] - 1.0, 0, 0}, 1) + 0.5 * stationary_gaussian({x[0] + 0.5, 0, 0}, 1);
  }));
  std::vector<double> ts, logs;
  for (double t : {1.0, 1.5, 2.0, 2.5, 3.0}) {
    ts.push_back(t);
    logs.push_back(std::log(truncation_error(w0, 2, t)));
  }
  EXPECT_NEAR(fit_line(ts, logs).slope, -3.0, 0.1);
}
