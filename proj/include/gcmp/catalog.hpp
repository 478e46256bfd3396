#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcmp/intensity.hpp"
#include "gcmp/likelihood.hpp"

namespace gcmp {

/// Parametric baseline with values on the natural scale.
struct BaselineSpec {
  Baseline::Family family = Baseline::Family::constant;
  // constant: {rate}; piecewise_constant: one rate per piece; weibull: {a, b}.
  std::vector<double> values;
  std::vector<double> cuts;

  static BaselineSpec constant(double rate);
  static BaselineSpec piecewise_constant(std::vector<double> cuts, std::vector<double> rates);
  static BaselineSpec weibull(double scale, double shape);

  double rate(double t) const;
  double cumulative(double t0, double t1) const;
};

/// Appends the baseline's parameters (log scale) named prefix, prefix_scale /
/// prefix_shape or prefix_1..prefix_k, and returns the baseline referencing them.
Baseline append_baseline(const std::string& prefix, const BaselineSpec& spec,
                         std::vector<Parameter>& params, std::vector<double>& natural);

Eigen::VectorXd unconstrained(const std::vector<Parameter>& params,
                              const std::vector<double>& natural);

struct IllnessDeath {
  MarkovSpec spec;
  IntensityModel model;
};

/// States 0 healthy, 1 ill, 2 dead; components "illness" and "death".
/// The hand-built model is checked against markov_to_ojc at construction.
IllnessDeath illness_death(const BaselineSpec& a01, const BaselineSpec& a02,
                           const BaselineSpec& a12);

/// Illness seen continuously on [0, v1) (hospital stay) then at the visits;
/// death observed continuously.
ObservationScheme hybrid_scheme(double v1, std::vector<double> visits, double horizon);
/// Illness seen at the visits only; death observed continuously.
ObservationScheme panel_scheme(std::vector<double> visits, double horizon);
/// Visits h, 2h, ... up to the horizon.
std::vector<double> regular_visits(double step, double horizon);

struct DementiaParams {
  BaselineSpec a01 = BaselineSpec::constant(0.1);
  BaselineSpec a02 = BaselineSpec::constant(0.1);
  BaselineSpec a04 = BaselineSpec::constant(0.1);
  // etaX_Y: effect on component X of component Y having jumped.
  double eta1_2 = 0.0;
  double eta2_1 = 0.0;
  double eta3_1 = 0.0;
  double eta3_2 = 0.0;
  double eta3_12 = 0.0;
  // gammaX_Y: effect on component X of the time at which Y jumped.
  double gamma1_2 = 0.0;
  double gamma2_1 = 0.0;
  double gamma3_1 = 0.0;
  double gamma3_2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double z = 0.0;
};

/// Components "dementia", "institution", "death"; death is the death component.
IntensityModel dementia_model(const DementiaParams& params);
/// Compact 5-state spec of the Markov case; throws UnsupportedModel when a
/// duration or covariate effect is active.
MarkovSpec dementia_markov_spec(const DementiaParams& params);
/// Dementia at the visits, death continuous, institution recalled
/// retrospectively up to the last visit.
ObservationScheme dementia_scheme(std::vector<double> visits, double horizon);

/// Closed-form transcription of the dementia likelihood for the four atom
/// shapes (interval or beyond-last-visit dementia) x (exact or beyond-last-visit
/// institution), with death exact or censored at the horizon.
double dementia_loglik_reference(const DementiaParams& params, const PseudoAtom& atom,
                                 double horizon, const quad::Tolerance& tol = {});

}  // namespace gcmp
