#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "gcmp/error.hpp"
#include "gcmp/quadrature.hpp"
#include "support/oracles.hpp"

using namespace gcmp;

TEST(Quadrature, SinglePanelForLowDegreePolynomials) {
  // The 7-point Gauss estimate is exact to degree 13, so no refinement happens.
  const auto r = quad::integrate_1d([](double x) { return std::pow(x, 12); }, 0.0, 1.0);
  EXPECT_NEAR(r.value, 1.0 / 13.0, 1e-16);
  EXPECT_EQ(r.evaluations, 15u);
  EXPECT_NEAR(quad::integrate_1d([](double x) { return std::pow(x, 20); }, 0.0, 1.0).value,
              1.0 / 21.0, 1e-15);
}

TEST(Quadrature, SmoothIntegrands) {
  EXPECT_NEAR(quad::integrate_1d([](double x) { return std::exp(-x); }, 0.0, 3.0).value,
              1.0 - std::exp(-3.0), 1e-14);
  EXPECT_NEAR(quad::integrate_1d([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value,
              2.0, 1e-13);
}

TEST(Quadrature, BreakpointsHandleJumps) {
  auto step = [](double x) { return x < 0.3 ? 1.0 : 5.0; };
  const double cuts[] = {0.3};
  const auto r = quad::integrate_1d(step, 0.0, 1.0, cuts);
  EXPECT_NEAR(r.value, 0.3 + 0.7 * 5.0, 1e-14);
  EXPECT_EQ(r.evaluations, 30u);
}

TEST(Quadrature, BreakpointsOutsideOrRepeatedAreIgnored) {
  auto f = [](double x) { return x * x; };
  const double cuts[] = {-1.0, 0.5, 0.5, 2.0, 1.0};
  const auto a = quad::integrate_1d(f, 0.0, 1.0, cuts);
  const double sorted[] = {0.5};
  const auto b = quad::integrate_1d(f, 0.0, 1.0, sorted);
  EXPECT_EQ(a.value, b.value);
}

TEST(Quadrature, EmptyAndReversedIntervals) {
  EXPECT_EQ(quad::integrate_1d([](double) { return 1.0; }, 2.0, 2.0).value, 0.0);
  EXPECT_THROW(quad::integrate_1d([](double) { return 1.0; }, 2.0, 1.0), InvalidInput);
}

TEST(Quadrature, NonFiniteSampleReportsAbscissa) {
  try {
    quad::integrate_1d([](double x) { return x > 0.5 ? std::nan("") : 1.0; }, 0.0, 1.0);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_GT(e.abscissa(), 0.5);
    EXPECT_LT(e.abscissa(), 1.0);
  }
}

TEST(Quadrature, BudgetExhaustionThrows) {
  quad::Tolerance tol;
  tol.max_evaluations = 60;
  auto wild = [](double x) { return std::sin(1.0 / x); };
  EXPECT_THROW(quad::integrate_1d(wild, 1e-3, 1.0, {}, tol), ToleranceFailure);
}

TEST(Quadrature, EndpointsAreNeverSampled) {
  auto f = [](double x) {
    if (x <= 0.0 || x >= 1.0) throw std::logic_error("endpoint sampled");
    return 1.0 / std::sqrt(x);
  };
  quad::Tolerance tol;
  tol.rel = 1e-6;
  EXPECT_NEAR(quad::integrate_1d(f, 0.0, 1.0, {}, tol).value, 2.0, 1e-5);
}

TEST(Quadrature, RandomPolynomialsMatchAntiderivative) {
  support::Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const std::size_t deg = rng.index(11);
    std::vector<double> c(deg + 1);
    for (auto& x : c) x = rng.uniform(-2.0, 2.0);
    const double a = rng.uniform(-3.0, 3.0);
    const double b = a + rng.uniform(0.0, 4.0);
    auto poly = [&](double x) {
      double y = 0.0;
      for (std::size_t i = c.size(); i-- > 0;) y = y * x + c[i];
      return y;
    };
    auto anti = [&](double x) {
      double y = 0.0;
      for (std::size_t i = c.size(); i-- > 0;) y = y * x + c[i] / static_cast<double>(i + 1);
      return y * x;
    };
    const double exact = anti(b) - anti(a);
    EXPECT_NEAR(quad::integrate_1d(poly, a, b).value, exact, 1e-12 * (1.0 + std::abs(exact)));
  }
}

TEST(Nested, TriangleArea) {
  quad::IntegrationRegion region;
  region.dims.push_back({0.0, 1.0, {}});
  region.dims.push_back({0.0, quad::Bound([](std::span<const double> o) { return o[0]; }), {}});
  const auto r = quad::integrate_nested([](std::span<const double>) { return 1.0; }, region);
  EXPECT_NEAR(r.value, 0.5, 1e-14);
}

TEST(Nested, IndicatorSplitsAtOuterVariable) {
  // 1{s1 < s0} over the unit square is 1/2; the inner split makes it exact.
  quad::IntegrationRegion region;
  region.dims.push_back({0.0, 1.0, {}});
  region.dims.push_back({0.0, 1.0, {}});
  auto f = [](std::span<const double> x) { return x[1] < x[0] ? 1.0 : 0.0; };
  EXPECT_NEAR(quad::integrate_nested(f, region).value, 0.5, 1e-14);
}

TEST(Nested, SeparableBoxesFactorize) {
  support::Rng rng(11);
  for (std::size_t k = 1; k <= 4; ++k) {
    quad::IntegrationRegion region;
    double expected = 1.0;
    std::vector<double> rates;
    for (std::size_t d = 0; d < k; ++d) {
      const double lo = rng.uniform(0.0, 1.0);
      const double hi = lo + rng.uniform(0.2, 1.0);
      const double r = rng.uniform(0.1, 2.0);
      region.dims.push_back({lo, hi, {}});
      rates.push_back(r);
      expected *= (std::exp(-r * lo) - std::exp(-r * hi)) / r;
    }
    auto f = [&](std::span<const double> x) {
      double y = 1.0;
      for (std::size_t d = 0; d < x.size(); ++d) y *= std::exp(-rates[d] * x[d]);
      return y;
    };
    const auto r = quad::integrate_nested(f, region);
    EXPECT_NEAR(r.value, expected, 1e-9 * expected) << k << " dimensions";
  }
}

TEST(Nested, DimensionLimits) {
  quad::IntegrationRegion region;
  EXPECT_THROW(quad::integrate_nested([](std::span<const double>) { return 1.0; }, region),
               InvalidInput);
  for (int i = 0; i < 5; ++i) region.dims.push_back({0.0, 1.0, {}});
  EXPECT_THROW(quad::integrate_nested([](std::span<const double>) { return 1.0; }, region),
               UnsupportedModel);
}

TEST(Nested, EmptyInnerRangeContributesZero) {
  quad::IntegrationRegion region;
  region.dims.push_back({0.0, 1.0, {0.5}});
  region.dims.push_back({quad::Bound([](std::span<const double> o) { return o[0]; }), 0.5, {}});
  // Inner range (s0, 0.5] is empty for s0 >= 0.5: integral of (0.5 - s0) on (0, 0.5).
  const auto r = quad::integrate_nested([](std::span<const double>) { return 1.0; }, region);
  EXPECT_NEAR(r.value, 0.125, 1e-13);
}

TEST(Nested, LowerPowerFlattensEndpointSingularity) {
  auto f = [](std::span<const double> x) { return std::pow(x[0], -0.75); };
  quad::IntegrationRegion plain;
  plain.dims.push_back({0.0, 2.0, {0.5}});
  quad::IntegrationRegion mapped = plain;
  mapped.dims[0].lower_power = 4.0;
  const double exact = 4.0 * std::pow(2.0, 0.25);
  quad::Tolerance tol;
  tol.rel = 1e-9;
  const auto a = quad::integrate_nested(f, plain, tol);
  const auto b = quad::integrate_nested(f, mapped, tol);
  EXPECT_NEAR(a.value, exact, 1e-8);
  EXPECT_NEAR(b.value, exact, 1e-11);
  EXPECT_LT(b.evaluations, 100u);
  EXPECT_GT(a.evaluations, 10 * b.evaluations);
}

TEST(Nested, LowerPowerMapsOuterSplitsToPhysicalValues) {
  // Indicator 1{s1 < s0} must still flip at s1 = s0 when s1 is mapped.
  quad::IntegrationRegion region;
  region.dims.push_back({0.0, 1.0, {}});
  region.dims.push_back({0.0, 1.0, {}, 3.0});
  const auto r = quad::integrate_nested(
      [](std::span<const double> x) { return x[1] < x[0] ? 1.0 : 0.0; }, region);
  EXPECT_NEAR(r.value, 0.5, 1e-12);
}
