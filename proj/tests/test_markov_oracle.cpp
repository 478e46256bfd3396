#include <cmath>

#include <gtest/gtest.h>

#include "gcmp/catalog.hpp"
#include "gcmp/error.hpp"
#include "gcmp/markov_oracle.hpp"
#include "support/oracles.hpp"

using namespace gcmp;

namespace {

IllnessDeath constant_id(double a01, double a02, double a12) {
  return illness_death(BaselineSpec::constant(a01), BaselineSpec::constant(a02),
                       BaselineSpec::constant(a12));
}

// Closed-form homogeneous illness-death transition probabilities.
struct ClosedForm {
  double a01, a02, a12;
  double p00(double d) const { return std::exp(-(a01 + a02) * d); }
  double p01(double d) const {
    return a01 / (a01 + a02 - a12) * (std::exp(-a12 * d) - std::exp(-(a01 + a02) * d));
  }
  double p11(double d) const { return std::exp(-a12 * d); }
};

}  // namespace

TEST(TransitionMatrix, WorkedCompetingRisksValue) {
  const auto id = constant_id(0.1, 0.2, 0.4);
  const double p01 = transition_matrix(id.spec, 0.0, 1.0)(0, 1);
  EXPECT_NEAR(p01, std::exp(-0.4) * std::expm1(0.1), 1e-13);
  EXPECT_NEAR(p01, 0.0704982, 5e-8);
}

TEST(TransitionMatrix, IdentityAndStochasticRows) {
  const auto id = illness_death(BaselineSpec::weibull(0.2, 1.5), BaselineSpec::constant(0.1),
                                BaselineSpec::piecewise_constant({1.0}, {0.2, 0.6}));
  EXPECT_TRUE(transition_matrix(id.spec, 1.3, 1.3).isIdentity(0.0));
  const auto P = transition_matrix(id.spec, 0.2, 3.7);
  for (int h = 0; h < 3; ++h) EXPECT_NEAR(P.row(h).sum(), 1.0, 1e-12);
  EXPECT_EQ(P(1, 0), 0.0);
  EXPECT_NEAR(P(2, 2), 1.0, 1e-15);
  EXPECT_THROW(transition_matrix(id.spec, 2.0, 1.0), InvalidInput);
}

TEST(TransitionMatrix, OdeMatchesClosedFormAndMatrixExponential) {
  support::Rng rng(31);
  OdeOptions ode;
  ode.use_matrix_exponential = false;
  for (int k = 0; k < 50; ++k) {
    const ClosedForm cf{rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0)};
    if (std::abs(cf.a01 + cf.a02 - cf.a12) < 1e-3) continue;
    const auto id = constant_id(cf.a01, cf.a02, cf.a12);
    const double s = rng.uniform(0.0, 2.0);
    const double t = s + rng.uniform(0.0, 5.0);
    const auto expm = transition_matrix(id.spec, s, t);
    const auto P = transition_matrix(id.spec, s, t, ode);
    EXPECT_NEAR(P(0, 0), cf.p00(t - s), 1e-9);
    EXPECT_NEAR(P(0, 1), cf.p01(t - s), 1e-9);
    EXPECT_NEAR(P(1, 1), cf.p11(t - s), 1e-9);
    EXPECT_LT((P - expm).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(TransitionMatrix, ChapmanKolmogorovForNonHomogeneousRates) {
  support::Rng rng(37);
  for (int k = 0; k < 30; ++k) {
    const auto id = illness_death(support::random_baseline(rng, k), support::random_baseline(rng, k + 1),
                                  support::random_baseline(rng, k + 2));
    const double s = rng.uniform(0.0, 1.0);
    const double u = s + rng.uniform(0.0, 2.0);
    const double t = u + rng.uniform(0.0, 2.0);
    const auto whole = transition_matrix(id.spec, s, t);
    const Eigen::MatrixXd split = transition_matrix(id.spec, s, u) * transition_matrix(id.spec, u, t);
    EXPECT_LT((whole - split).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(TransitionMatrix, WeibullSurvivalDiagonal) {
  // p00 is exp(-A01 - A02) whatever the rest of the model.
  const auto id = illness_death(BaselineSpec::weibull(0.3, 1.7), BaselineSpec::weibull(0.1, 0.8),
                                BaselineSpec::constant(0.5));
  const double s = 0.4, t = 2.9;
  const double A = 0.3 * (std::pow(t, 1.7) - std::pow(s, 1.7)) + 0.1 * (std::pow(t, 0.8) - std::pow(s, 0.8));
  EXPECT_NEAR(transition_matrix(id.spec, s, t)(0, 0), std::exp(-A), 1e-10);
  EXPECT_NEAR(transition_matrix(id.spec, s, t)(1, 1), std::exp(-0.5 * (t - s)), 1e-10);
}

TEST(Heuristic, ContinuousPathDensity) {
  const auto id = constant_id(0.1, 0.2, 0.4);
  const ContinuousPath path{0.0, 0, {{0.7, 1}, {1.9, 2}}, 3.0};
  const double expected = std::log(0.1) - 0.3 * 0.7 + std::log(0.4) - 0.4 * 1.2;
  EXPECT_NEAR(heuristic_loglik(id.spec, path), expected, 1e-12);
  const ContinuousPath censored{0.0, 0, {{0.7, 1}}, 3.0};
  EXPECT_NEAR(heuristic_loglik(id.spec, censored), std::log(0.1) - 0.3 * 0.7 - 0.4 * 2.3, 1e-12);
  const ContinuousPath backwards{0.0, 1, {{0.7, 0}}, 3.0};
  EXPECT_THROW(heuristic_loglik(id.spec, backwards), InconsistentObservation);
}

TEST(Heuristic, PanelPathProduct) {
  const auto id = constant_id(0.1, 0.2, 0.4);
  const ClosedForm cf{0.1, 0.2, 0.4};
  const PanelPath panel{{0.0, 1.0, 2.5}, {0, 1, 1}};
  EXPECT_NEAR(heuristic_loglik(id.spec, panel), std::log(cf.p01(1.0)) + std::log(cf.p11(1.5)), 1e-12);
  const PanelPath impossible{{0.0, 1.0}, {1, 0}};
  EXPECT_THROW(heuristic_loglik(id.spec, impossible), InconsistentObservation);
}

TEST(Heuristic, MixedRecordCases) {
  const auto id = constant_id(0.1, 0.2, 0.4);
  const ClosedForm cf{0.1, 0.2, 0.4};
  // First seen ill at v1 = 1, alive at 2.
  IllnessDeathRecord ill{{0.0, 1.0}, 1, 2.0, false};
  EXPECT_NEAR(heuristic_loglik(id.spec, ill), std::log(cf.p01(1.0) * cf.p11(1.0)), 1e-12);
  EXPECT_NEAR(std::exp(heuristic_loglik(id.spec, ill)), std::exp(-0.8) * std::expm1(0.1), 1e-13);
  // Healthy at the last visit 1, dead at 1.5.
  IllnessDeathRecord healthy{{0.0, 1.0}, std::nullopt, 1.5, true};
  const double expected = cf.p00(1.0) * (cf.p00(0.5) * 0.2 + cf.p01(0.5) * 0.4);
  EXPECT_NEAR(heuristic_loglik(id.spec, healthy), std::log(expected), 1e-12);
  IllnessDeathRecord early{{0.0, 1.0, 2.0}, std::nullopt, 1.5, true};
  EXPECT_THROW(heuristic_loglik(id.spec, early), InconsistentObservation);
}

TEST(Heuristic, MixedRecordNeedsIllnessDeath) {
  const auto spec = dementia_markov_spec(DementiaParams{});
  IllnessDeathRecord rec{{0.0, 1.0}, 1, 2.0, false};
  EXPECT_THROW(heuristic_loglik(spec, rec), UnsupportedModel);
}
