#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcmp/intensity.hpp"
#include "gcmp/likelihood.hpp"

namespace gcmp {

struct Subject {
  std::string id;
  PseudoAtom atom;
  Eigen::VectorXd covariates;
  // Delayed entry: the likelihood is conditioned on no jump before it.
  double entry = 0.0;
};

struct Dataset {
  double horizon = 0.0;
  std::vector<Subject> subjects;
};

struct FitOptions {
  LikelihoodOptions likelihood;
  unsigned threads = 1;
  std::size_t max_iterations = 5000;
  double simplex_tol = 1e-8;
  double gradient_tol = 1e-5;
  double initial_step = 0.1;
  // Coordinates held at their initial value.
  std::vector<bool> fixed;
  bool standard_errors = true;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd theta_hat;  // natural scale
  Eigen::VectorXd theta_unconstrained;
  double loglik = 0.0;
  double initial_loglik = 0.0;
  // Natural-scale standard errors; empty when the Hessian is not negative definite.
  std::optional<Eigen::VectorXd> std_errors;
  std::optional<Eigen::MatrixXd> covariance;  // unconstrained scale
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  double simplex_diameter = 0.0;
  std::string message;
};

/// Per-subject conditional log-likelihoods, in dataset order. Work is split
/// over `threads`; results do not depend on it.
std::vector<double> subject_logliks(const IntensityModel& model, const Dataset& data,
                                    const LikelihoodOptions& options = {}, unsigned threads = 1);
/// Sum of subject_logliks taken in dataset order.
double dataset_loglik(const IntensityModel& model, const Dataset& data,
                      const LikelihoodOptions& options = {}, unsigned threads = 1);

/// Maximizes the dataset log-likelihood over the model's unconstrained
/// parameters, starting at model.theta().
FitResult fit_mle(const IntensityModel& model, const Dataset& data, const FitOptions& options = {});

/// Central-difference gradient with step eps^(1/3) * max(1, |x_i|).
Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step_scale = 1.0);

}  // namespace gcmp
