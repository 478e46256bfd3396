#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcmp/quadrature.hpp"

namespace gcmp {

inline constexpr double no_jump = std::numeric_limits<double>::infinity();

/// How a parameter is stored in the unconstrained vector theta.
enum class Scale { identity, log };

struct Parameter {
  std::string name;
  Scale scale = Scale::log;
};

double to_natural(Scale scale, double unconstrained);
double to_unconstrained(Scale scale, double natural);

/// A baseline hazard shape referencing parameters by index.
class Baseline {
 public:
  enum class Family { constant, piecewise_constant, weibull, custom };
  /// Receives t and the natural values of this baseline's own parameters.
  using RateFn = std::function<double(double, std::span<const double>)>;

  static Baseline constant(std::size_t rate);
  /// Rates apply on [0, cuts[0]), [cuts[0], cuts[1]), ..., [cuts.back(), inf).
  static Baseline piecewise_constant(std::vector<double> cuts, std::vector<std::size_t> rates);
  /// a * b * t^(b-1); cumulative a * t^b.
  static Baseline weibull(std::size_t scale, std::size_t shape);
  /// Arbitrary smooth rate between the declared breakpoints; integrated numerically.
  static Baseline custom(RateFn rate, std::vector<std::size_t> params,
                         std::vector<double> breakpoints = {});

  double rate(double t, std::span<const double> natural) const;
  /// Integral of the rate over (t0, t1]. Closed form for every family but custom.
  double cumulative(double t0, double t1, std::span<const double> natural,
                    const quad::Tolerance& tol = {}) const;
  /// True when the rate is constant on (t0, t1], which never straddles a breakpoint.
  bool constant_between(double t0, double t1, std::span<const double> natural) const;

  Family family() const { return family_; }
  const std::vector<std::size_t>& parameters() const { return params_; }
  const std::vector<double>& breakpoints() const { return cuts_; }

 private:
  Family family_ = Family::constant;
  std::vector<std::size_t> params_;
  std::vector<double> cuts_;
  RateFn fn_;
};

/// Term of the exponent multiplying a baseline.
struct Effect {
  enum class Kind {
    constant,   // coefficient
    indicator,  // coefficient * prod_l 1{T_l < t}
    duration,   // coefficient * 1{T_l < t} * T_l
    covariate,  // coefficient * Z
  };
  Kind kind = Kind::constant;
  std::size_t parameter = 0;
  std::vector<std::size_t> components;
  std::size_t covariate = 0;
};

/// Conjunction of "component l has (not) jumped strictly before t".
struct Gate {
  std::vector<std::pair<std::size_t, bool>> require;
};

struct Term {
  Gate gate;
  Baseline baseline;
  std::vector<Effect> effects;
};

/// Observed (or full) path of a one-jump counting process on [0, horizon].
struct JumpHistory {
  std::vector<double> times;
  std::vector<bool> observed;
  double horizon = 0.0;

  /// Jump times with unobserved components mapped to no_jump.
  std::vector<double> jump_times() const;
  /// Arguments of the continuous-observation density: t_j if observed, else horizon.
  std::vector<double> density_arguments() const;
};

/// p-component one-jump counting process with parametric intensities
///   lambda_j(t) = 1{T_j >= t} * sum_terms gate(t) * baseline(t) * exp(effects(t)).
/// Immutable; with_* return modified copies.
class IntensityModel {
 public:
  IntensityModel() = default;
  IntensityModel(std::vector<std::string> component_names, std::vector<Parameter> parameters,
                 std::vector<std::vector<Term>> terms, Eigen::VectorXd theta,
                 std::vector<std::string> covariate_names = {});

  std::size_t components() const { return names_.size(); }
  const std::vector<std::string>& component_names() const { return names_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<Term>& terms(std::size_t j) const { return terms_.at(j); }
  std::size_t component_index(const std::string& name) const;
  std::size_t parameter_index(const std::string& name) const;

  /// Unconstrained parameter vector.
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& natural() const { return natural_; }
  const Eigen::VectorXd& covariates() const { return z_; }

  IntensityModel with_theta(const Eigen::VectorXd& theta) const;
  IntensityModel with_natural(const Eigen::VectorXd& natural) const;
  IntensityModel with_covariates(const Eigen::VectorXd& z) const;
  IntensityModel with_death_component(std::optional<std::size_t> d) const;
  IntensityModel with_tolerance(const quad::Tolerance& tol) const;

  std::optional<std::size_t> death_component() const { return death_; }
  /// Every term of component j requires component d not to have jumped.
  bool vanishes_after(std::size_t j, std::size_t d) const;
  /// Sorted union of baseline breakpoints.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// Tolerance used for baselines without closed-form cumulative.
  const quad::Tolerance& tolerance() const { return tol_; }

 private:
  void refresh();

  std::vector<std::string> names_;
  std::vector<Parameter> params_;
  std::vector<std::vector<Term>> terms_;
  std::vector<std::string> covariate_names_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd natural_;
  Eigen::VectorXd z_;
  std::optional<std::size_t> death_;
  std::vector<double> breakpoints_;
  quad::Tolerance tol_;
};

/// lambda_j(t) given jump times (a time >= t, or no_jump, means "not yet").
double intensity(const IntensityModel& model, std::size_t j, double t,
                 std::span<const double> jump_times);
double intensity(const IntensityModel& model, std::size_t j, double t,
                 const JumpHistory& history);

/// Lambda_j(t1) - Lambda_j(t0), split at every jump time inside (t0, t1).
double cumulative_intensity(const IntensityModel& model, std::size_t j, double t0, double t1,
                            std::span<const double> jump_times);
double cumulative_intensity(const IntensityModel& model, std::size_t j, double t0, double t1,
                            const JumpHistory& history);
double total_cumulative_intensity(const IntensityModel& model, double t0, double t1,
                                  std::span<const double> jump_times);

/// W = sum_j counts_j 2^(j-1); compact: min(W, 2^(p-1)).
std::size_t encode_state(std::span<const int> counts, bool compact);

struct Transition {
  std::size_t from = 0;
  std::size_t to = 0;
  Baseline baseline;
  // alpha = baseline * exp(sum of these parameters' natural values)
  std::vector<std::size_t> log_multipliers;
};

/// Transition-intensity description of an irreversible multi-state model laid
/// out in base 2 over `components` binary counters. With `compact`, all states
/// with the last bit set are merged into state 2^(p-1).
class MarkovSpec {
 public:
  MarkovSpec(std::size_t states, std::vector<std::string> component_names, bool compact,
             std::vector<Parameter> parameters, std::vector<Transition> transitions,
             Eigen::VectorXd theta);

  std::size_t states() const { return states_; }
  std::size_t components() const { return names_.size(); }
  bool compact() const { return compact_; }
  const std::vector<std::string>& component_names() const { return names_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const Eigen::VectorXd& natural() const { return natural_; }

  MarkovSpec with_theta(const Eigen::VectorXd& theta) const;

  /// alpha_hj(t), zero when no transition is declared.
  double alpha(std::size_t h, std::size_t j, double t) const;
  /// Generator matrix A(t) with A_hh = -sum_j A_hj.
  Eigen::MatrixXd generator(double t) const;
  std::vector<double> breakpoints() const;
  bool homogeneous() const;
  bool reachable(std::size_t from, std::size_t to) const;

 private:
  std::size_t states_;
  std::vector<std::string> names_;
  bool compact_;
  std::vector<Parameter> params_;
  std::vector<Transition> transitions_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd natural_;
};

/// One-jump counting-process intensities of an irreversible base-2 Markov spec.
IntensityModel markov_to_ojc(const MarkovSpec& spec);

}  // namespace gcmp
