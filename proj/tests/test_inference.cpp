#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "gcmp/catalog.hpp"
#include "gcmp/error.hpp"
#include "gcmp/inference.hpp"
#include "support/oracles.hpp"

using namespace gcmp;

namespace {

IllnessDeath truth() {
  return illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                       BaselineSpec::constant(0.4));
}

const support::Cohort& cohort() {
  static const support::Cohort c = support::simulate_cohort(
      truth().model, panel_scheme(regular_visits(1.0, 10.0), 10.0), 600, 2024);
  return c;
}

}  // namespace

TEST(NumericGradient, Quadratic) {
  auto f = [](const Eigen::VectorXd& x) { return 3.0 * x[0] * x[0] - x[0] * x[1] + 0.5 * x[1]; };
  Eigen::VectorXd x(2);
  x << 1.5, -2.0;
  const auto g = numeric_gradient(f, x);
  EXPECT_NEAR(g[0], 6.0 * 1.5 + 2.0, 1e-8);
  EXPECT_NEAR(g[1], -1.5 + 0.5, 1e-8);
}

TEST(SubjectLogliks, ThreadCountDoesNotChangeAnyBit) {
  const auto& c = cohort();
  const auto one = subject_logliks(truth().model, c.data, {}, 1);
  const auto three = subject_logliks(truth().model, c.data, {}, 3);
  ASSERT_EQ(one.size(), c.data.subjects.size());
  EXPECT_EQ(std::memcmp(one.data(), three.data(), one.size() * sizeof(double)), 0);
  double sum = 0.0;
  for (double x : one) sum += x;
  EXPECT_EQ(dataset_loglik(truth().model, c.data, {}, 4), sum);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(one[i], loglik_atom(truth().model, c.data.subjects[i].atom, 10.0));
  }
}

TEST(SubjectLogliks, DelayedEntryUsesConditionalLikelihood) {
  Dataset d;
  d.horizon = 5.0;
  d.subjects.push_back(Subject{"a", PseudoAtom{{Interval{1.0, 2.0}, Exact{5.0, false}}}, {}, 0.5});
  const auto m = truth().model;
  EXPECT_EQ(subject_logliks(m, d).front(), conditional_loglik(m, d.subjects[0].atom, 5.0, 0.5));
}

TEST(FitMle, RecoversParametersWithStandardErrors) {
  const auto start = truth().model.with_natural(Eigen::Vector3d(0.3, 0.3, 0.3));
  const auto r = fit_mle(start, cohort().data);
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_GE(r.loglik, r.initial_loglik);
  ASSERT_TRUE(r.std_errors.has_value());
  const Eigen::Vector3d t(0.1, 0.2, 0.4);
  for (int i = 0; i < 3; ++i) {
    EXPECT_GT((*r.std_errors)[i], 0.0);
    EXPECT_LT(std::abs(r.theta_hat[i] - t[i]), 4.0 * (*r.std_errors)[i]) << r.names[i];
  }
  EXPECT_NEAR(r.loglik, dataset_loglik(truth().model.with_theta(r.theta_unconstrained), cohort().data), 1e-9);
  // The maximum beats nearby points.
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd x = r.theta_unconstrained;
    x[i] += 0.02;
    EXPECT_LT(dataset_loglik(truth().model.with_theta(x), cohort().data), r.loglik);
  }
}

TEST(FitMle, FixedCoordinatesStayPut) {
  const auto start = truth().model.with_natural(Eigen::Vector3d(0.3, 0.2, 0.3));
  FitOptions o;
  o.fixed = {false, true, false};
  const auto r = fit_mle(start, cohort().data, o);
  EXPECT_DOUBLE_EQ(r.theta_hat[1], 0.2);
  ASSERT_TRUE(r.std_errors.has_value());
  EXPECT_EQ((*r.std_errors)[1], 0.0);
  o.fixed = {true};
  EXPECT_THROW(fit_mle(start, cohort().data, o), InvalidInput);
}

TEST(FitMle, ResultIsThreadIndependent) {
  support::Cohort small = cohort();
  small.data.subjects.resize(200);
  FitOptions o1, o3;
  o3.threads = 3;
  const auto a = fit_mle(truth().model, small.data, o1);
  const auto b = fit_mle(truth().model, small.data, o3);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.loglik, b.loglik);
}

TEST(FitMle, InvalidStartNamesSubject) {
  Dataset d;
  d.horizon = 3.0;
  d.subjects.push_back(Subject{"ok", PseudoAtom{{Interval{0.0, 1.0}, Exact{3.0, false}}}, {}, 0.0});
  d.subjects.push_back(Subject{"bad", PseudoAtom{{Interval{2.0, 3.0}, Exact{1.0, true}}}, {}, 0.0});
  try {
    fit_mle(truth().model, d);
    FAIL() << "expected InvalidStart";
  } catch (const InvalidStart& e) {
    EXPECT_EQ(e.subject(), "bad");
  }
  EXPECT_THROW(fit_mle(truth().model, Dataset{3.0, {}}), InvalidInput);
}
