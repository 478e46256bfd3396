#include "gcmp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcmp/error.hpp"
#include "gcmp/simulator.hpp"

namespace gcmp {

BaselineSpec BaselineSpec::constant(double rate) {
  return {Baseline::Family::constant, {rate}, {}};
}

BaselineSpec BaselineSpec::piecewise_constant(std::vector<double> cuts, std::vector<double> rates) {
  if (rates.size() != cuts.size() + 1) {
    throw InvalidInput("piecewise-constant baseline needs one rate per piece");
  }
  return {Baseline::Family::piecewise_constant, std::move(rates), std::move(cuts)};
}

BaselineSpec BaselineSpec::weibull(double scale, double shape) {
  return {Baseline::Family::weibull, {scale, shape}, {}};
}

double BaselineSpec::rate(double t) const {
  switch (family) {
    case Baseline::Family::constant:
      return values.at(0);
    case Baseline::Family::piecewise_constant: {
      std::size_t k = 0;
      while (k < cuts.size() && t >= cuts[k]) ++k;
      return values.at(k);
    }
    case Baseline::Family::weibull:
      return values.at(0) * values.at(1) * std::pow(t, values.at(1) - 1.0);
    case Baseline::Family::custom:
      break;
  }
  throw UnsupportedModel("baseline spec has no custom family");
}

double BaselineSpec::cumulative(double t0, double t1) const {
  if (!(t1 > t0)) return 0.0;
  switch (family) {
    case Baseline::Family::constant:
      return values.at(0) * (t1 - t0);
    case Baseline::Family::piecewise_constant: {
      double sum = 0.0;
      double left = 0.0;
      for (std::size_t k = 0; k <= cuts.size(); ++k) {
        const double right = k < cuts.size() ? cuts[k] : no_jump;
        const double lo = std::max(left, t0);
        const double hi = std::min(right, t1);
        if (hi > lo) sum += values.at(k) * (hi - lo);
        left = right;
      }
      return sum;
    }
    case Baseline::Family::weibull:
      return values.at(0) * (std::pow(t1, values.at(1)) - std::pow(t0, values.at(1)));
    case Baseline::Family::custom:
      break;
  }
  throw UnsupportedModel("baseline spec has no custom family");
}

Baseline append_baseline(const std::string& prefix, const BaselineSpec& spec,
                         std::vector<Parameter>& params, std::vector<double>& natural) {
  auto add = [&](const std::string& name, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw InvalidInput("baseline parameter " + name + " must be positive and finite");
    }
    params.push_back({name, Scale::log});
    natural.push_back(value);
    return params.size() - 1;
  };
  switch (spec.family) {
    case Baseline::Family::constant:
      if (spec.values.size() != 1) throw InvalidInput(prefix + ": constant baseline needs one rate");
      return Baseline::constant(add(prefix, spec.values[0]));
    case Baseline::Family::piecewise_constant: {
      std::vector<std::size_t> idx;
      for (std::size_t k = 0; k < spec.values.size(); ++k) {
        idx.push_back(add(prefix + "_" + std::to_string(k + 1), spec.values[k]));
      }
      return Baseline::piecewise_constant(spec.cuts, idx);
    }
    case Baseline::Family::weibull: {
      if (spec.values.size() != 2) throw InvalidInput(prefix + ": Weibull needs scale and shape");
      const auto a = add(prefix + "_scale", spec.values[0]);
      const auto b = add(prefix + "_shape", spec.values[1]);
      return Baseline::weibull(a, b);
    }
    case Baseline::Family::custom:
      break;
  }
  throw UnsupportedModel(prefix + ": custom baselines are not configurable");
}

Eigen::VectorXd unconstrained(const std::vector<Parameter>& params,
                              const std::vector<double>& natural) {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    theta[static_cast<Eigen::Index>(i)] = to_unconstrained(params[i].scale, natural[i]);
  }
  return theta;
}

namespace {

void check_against_theorem(const IntensityModel& model, const MarkovSpec& spec,
                           std::uint64_t seed, double horizon) {
  const IntensityModel mapped = markov_to_ojc(spec);
  const std::size_t p = model.components();
  CounterRng rng(seed, 0);
  std::vector<double> T(p);
  for (int k = 0; k < 100; ++k) {
    const double t = horizon * rng.uniform();
    for (auto& x : T) x = rng.uniform() < 0.5 ? horizon * 2.0 * rng.uniform() : no_jump;
    for (std::size_t j = 0; j < p; ++j) {
      const double a = intensity(model, j, t, T);
      const double b = intensity(mapped, j, t, T);
      if (a != b) {
        std::ostringstream msg;
        msg << "catalog model disagrees with the transition-intensity mapping: component " << j
            << " at t = " << t << ": " << a << " vs " << b;
        throw Error(msg.str());
      }
    }
  }
}

}  // namespace

IllnessDeath illness_death(const BaselineSpec& a01, const BaselineSpec& a02,
                           const BaselineSpec& a12) {
  std::vector<Parameter> params;
  std::vector<double> natural;
  const Baseline b01 = append_baseline("a01", a01, params, natural);
  const Baseline b02 = append_baseline("a02", a02, params, natural);
  const Baseline b12 = append_baseline("a12", a12, params, natural);
  const Eigen::VectorXd theta = unconstrained(params, natural);

  MarkovSpec spec(3, {"illness", "death"}, true, params,
                  {{0, 1, b01, {}}, {0, 2, b02, {}}, {1, 2, b12, {}}}, theta);

  std::vector<std::vector<Term>> terms(2);
  terms[0].push_back({Gate{{{1, false}}}, b01, {}});
  terms[1].push_back({Gate{{{0, false}}}, b02, {}});
  terms[1].push_back({Gate{{{0, true}}}, b12, {}});
  IntensityModel model =
      IntensityModel({"illness", "death"}, params, std::move(terms), theta).with_death_component(1);

  check_against_theorem(model, spec, 0x1d, 10.0);
  return {std::move(spec), std::move(model)};
}

ObservationScheme hybrid_scheme(double v1, std::vector<double> visits, double horizon) {
  ObservationScheme s;
  s.horizon = horizon;
  s.death_component = 1;
  ComponentSchedule illness;
  illness.windows = {{0.0, v1}};
  illness.visits = std::move(visits);
  s.components = {illness, ComponentSchedule{{{0.0, horizon}}, {}, false}};
  validate(s);
  return s;
}

ObservationScheme panel_scheme(std::vector<double> visits, double horizon) {
  ObservationScheme s;
  s.horizon = horizon;
  s.death_component = 1;
  s.components = {ComponentSchedule{{}, std::move(visits), false},
                  ComponentSchedule{{{0.0, horizon}}, {}, false}};
  validate(s);
  return s;
}

std::vector<double> regular_visits(double step, double horizon) {
  if (!(step > 0.0)) throw InvalidInput("visit step must be positive");
  std::vector<double> v;
  for (int k = 1;; ++k) {
    const double t = step * k;
    if (t > horizon * (1.0 + 1e-12)) break;
    v.push_back(std::min(t, horizon));
  }
  return v;
}

namespace {

struct DementiaLayout {
  std::vector<Parameter> params;
  std::vector<double> natural;
  Baseline b01, b02, b04;
  std::size_t eta1_2, eta2_1, eta3_1, eta3_2, eta3_12;
  std::size_t gamma1_2, gamma2_1, gamma3_1, gamma3_2;
  std::size_t beta1, beta2, beta3;
};

DementiaLayout layout(const DementiaParams& d) {
  DementiaLayout L;
  L.b01 = append_baseline("a01", d.a01, L.params, L.natural);
  L.b02 = append_baseline("a02", d.a02, L.params, L.natural);
  L.b04 = append_baseline("a04", d.a04, L.params, L.natural);
  auto add = [&](const char* name, double v) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(name) + " must be finite");
    L.params.push_back({name, Scale::identity});
    L.natural.push_back(v);
    return L.params.size() - 1;
  };
  L.eta1_2 = add("eta1_2", d.eta1_2);
  L.eta2_1 = add("eta2_1", d.eta2_1);
  L.eta3_1 = add("eta3_1", d.eta3_1);
  L.eta3_2 = add("eta3_2", d.eta3_2);
  L.eta3_12 = add("eta3_12", d.eta3_12);
  L.gamma1_2 = add("gamma1_2", d.gamma1_2);
  L.gamma2_1 = add("gamma2_1", d.gamma2_1);
  L.gamma3_1 = add("gamma3_1", d.gamma3_1);
  L.gamma3_2 = add("gamma3_2", d.gamma3_2);
  L.beta1 = add("beta1", d.beta1);
  L.beta2 = add("beta2", d.beta2);
  L.beta3 = add("beta3", d.beta3);
  return L;
}

Effect indicator(std::size_t param, std::vector<std::size_t> comps) {
  return {Effect::Kind::indicator, param, std::move(comps), 0};
}
Effect duration(std::size_t param, std::size_t comp) {
  return {Effect::Kind::duration, param, {comp}, 0};
}
Effect covariate(std::size_t param) { return {Effect::Kind::covariate, param, {}, 0}; }

}  // namespace

IntensityModel dementia_model(const DementiaParams& d) {
  const DementiaLayout L = layout(d);
  std::vector<std::vector<Term>> terms(3);
  terms[0].push_back({Gate{{{2, false}}},
                      L.b01,
                      {indicator(L.eta1_2, {1}), duration(L.gamma1_2, 1), covariate(L.beta1)}});
  terms[1].push_back({Gate{{{2, false}}},
                      L.b02,
                      {indicator(L.eta2_1, {0}), duration(L.gamma2_1, 0), covariate(L.beta2)}});
  terms[2].push_back({Gate{},
                      L.b04,
                      {indicator(L.eta3_1, {0}), indicator(L.eta3_2, {1}),
                       indicator(L.eta3_12, {0, 1}), duration(L.gamma3_1, 0),
                       duration(L.gamma3_2, 1), covariate(L.beta3)}});
  Eigen::VectorXd z(1);
  z[0] = d.z;
  return IntensityModel({"dementia", "institution", "death"}, L.params, std::move(terms),
                        unconstrained(L.params, L.natural), {"z"})
      .with_covariates(z)
      .with_death_component(2);
}

MarkovSpec dementia_markov_spec(const DementiaParams& d) {
  if (d.gamma1_2 != 0.0 || d.gamma2_1 != 0.0 || d.gamma3_1 != 0.0 || d.gamma3_2 != 0.0) {
    throw UnsupportedModel("duration effects make the dementia model non-Markov");
  }
  if (d.z != 0.0 && (d.beta1 != 0.0 || d.beta2 != 0.0 || d.beta3 != 0.0)) {
    throw UnsupportedModel("the multi-state spec carries no covariates");
  }
  const DementiaLayout L = layout(d);
  // States: 0 healthy, 1 demented, 2 institutionalized, 3 both, 4 dead.
  std::vector<Transition> tr{
      {0, 1, L.b01, {}},
      {0, 2, L.b02, {}},
      {1, 3, L.b02, {L.eta2_1}},
      {2, 3, L.b01, {L.eta1_2}},
      {0, 4, L.b04, {}},
      {1, 4, L.b04, {L.eta3_1}},
      {2, 4, L.b04, {L.eta3_2}},
      {3, 4, L.b04, {L.eta3_1, L.eta3_2, L.eta3_12}},
  };
  return MarkovSpec(5, {"dementia", "institution", "death"}, true, L.params, std::move(tr),
                    unconstrained(L.params, L.natural));
}

ObservationScheme dementia_scheme(std::vector<double> visits, double horizon) {
  ObservationScheme s;
  s.horizon = horizon;
  s.death_component = 2;
  s.components = {ComponentSchedule{{}, visits, false},
                  ComponentSchedule{{{0.0, horizon}}, visits, true},
                  ComponentSchedule{{{0.0, horizon}}, {}, false}};
  validate(s);
  return s;
}

// ---------------------------------------------------------------------------
// Reference transcription. Arguments (s1, s2, s3) are the jump times of
// dementia, institution and death; intensities vanish after every own jump.

namespace {

class DementiaReference {
 public:
  explicit DementiaReference(const DementiaParams& d) : d_(d) {}

  double lambda1(double t, double s1, double s2, double s3) const {
    if (s1 < t || s3 < t) return 0.0;
    return d_.a01.rate(t) * std::exp(exponent1(t, s2));
  }
  double lambda2(double t, double s1, double s2, double s3) const {
    if (s2 < t || s3 < t) return 0.0;
    return d_.a02.rate(t) * std::exp(exponent2(t, s1));
  }
  double lambda3(double t, double s1, double s2, double s3) const {
    if (s3 < t) return 0.0;
    return d_.a04.rate(t) * std::exp(exponent3(t, s1, s2));
  }

  // Lambda_.(t; s1, s2, s3).
  double total_cumulative(double t, double s1, double s2, double s3) const {
    double sum = 0.0;
    // dementia: at risk on (0, min(t, s1, s3)], factor changes at s2
    {
      const double up = std::min({t, s1, s3});
      const double k = std::clamp(s2, 0.0, std::max(up, 0.0));
      sum += d_.a01.cumulative(0.0, k) * std::exp(exponent1(k * 0.5, s2));
      if (up > k) sum += d_.a01.cumulative(k, up) * std::exp(exponent1(no_jump, s2));
    }
    {
      const double up = std::min({t, s2, s3});
      const double k = std::clamp(s1, 0.0, std::max(up, 0.0));
      sum += d_.a02.cumulative(0.0, k) * std::exp(exponent2(k * 0.5, s1));
      if (up > k) sum += d_.a02.cumulative(k, up) * std::exp(exponent2(no_jump, s1));
    }
    {
      const double up = std::min(t, s3);
      double cuts[4] = {0.0, std::min(s1, s2), std::max(s1, s2), 0.0};
      cuts[1] = std::clamp(cuts[1], 0.0, up);
      cuts[2] = std::clamp(cuts[2], 0.0, up);
      cuts[3] = up;
      for (int i = 0; i < 3; ++i) {
        if (cuts[i + 1] > cuts[i]) {
          const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
          sum += d_.a04.cumulative(cuts[i], cuts[i + 1]) * std::exp(exponent3(mid, s1, s2));
        }
      }
    }
    return sum;
  }

 private:
  double exponent1(double t, double s2) const {
    return s2 < t ? d_.eta1_2 + d_.gamma1_2 * s2 + d_.beta1 * d_.z : d_.beta1 * d_.z;
  }
  double exponent2(double t, double s1) const {
    return s1 < t ? d_.eta2_1 + d_.gamma2_1 * s1 + d_.beta2 * d_.z : d_.beta2 * d_.z;
  }
  double exponent3(double t, double s1, double s2) const {
    const bool i1 = s1 < t;
    const bool i2 = s2 < t;
    double e = d_.beta3 * d_.z;
    if (i1) e += d_.eta3_1 + d_.gamma3_1 * s1;
    if (i2) e += d_.eta3_2 + d_.gamma3_2 * s2;
    if (i1 && i2) e += d_.eta3_12;
    return e;
  }

  const DementiaParams& d_;
};

double pow_delta(double x, bool delta) { return delta ? x : 1.0; }

}  // namespace

double dementia_loglik_reference(const DementiaParams& params, const PseudoAtom& atom,
                                 double horizon, const quad::Tolerance& tol) {
  const double C = horizon;
  if (atom.components.size() != 3) throw UnsupportedAtom("dementia atoms have three components");
  const auto* death = std::get_if<Exact>(&atom.components[2]);
  if (!death) throw UnsupportedAtom("dementia reference needs an exact death component");
  const bool d3 = death->observed;
  const double T3 = d3 ? death->time : C;

  const auto* dem_iv = std::get_if<Interval>(&atom.components[0]);
  const auto* dem_sb = std::get_if<SurvivedBeyond>(&atom.components[0]);
  const auto* inst_ex = std::get_if<Exact>(&atom.components[1]);
  const auto* inst_sb = std::get_if<SurvivedBeyond>(&atom.components[1]);
  if (!(dem_iv || dem_sb) || !(inst_ex || inst_sb)) {
    throw UnsupportedAtom("atom shape not covered by the dementia reference: " + describe(atom));
  }

  const DementiaReference R(params);
  std::vector<double> cuts(params.a01.cuts);
  cuts.insert(cuts.end(), params.a02.cuts.begin(), params.a02.cuts.end());
  cuts.insert(cuts.end(), params.a04.cuts.begin(), params.a04.cuts.end());

  auto integrate = [&](auto&& f, double a, double b, std::vector<double> extra) {
    if (!(b > a)) return 0.0;
    extra.insert(extra.end(), cuts.begin(), cuts.end());
    std::sort(extra.begin(), extra.end());
    return quad::integrate_1d(f, a, b, extra, tol).value;
  };

  double L = 0.0;
  if (inst_ex) {
    // Institution exact (or censored): single integral over dementia, plus
    // the no-dementia corner when dementia survived beyond the last visit.
    const bool d2 = inst_ex->observed;
    const double T2 = d2 ? inst_ex->time : C;
    auto g = [&](double s1) {
      return R.lambda1(s1, s1, T2, T3) * pow_delta(R.lambda2(T2, s1, T2, T3), d2) *
             pow_delta(R.lambda3(T3, s1, T2, T3), d3) * std::exp(-R.total_cumulative(T3, s1, T2, T3));
    };
    if (dem_iv) {
      L = integrate(g, dem_iv->lower, std::min(dem_iv->upper, T3), {T2});
    } else {
      L = integrate(g, dem_sb->last, T3, {T2});
      L += pow_delta(R.lambda2(T2, T3, T2, T3), d2) * pow_delta(R.lambda3(T3, T3, T2, T3), d3) *
           std::exp(-R.total_cumulative(T3, T3, T2, T3));
    }
  } else {
    const double vM = inst_sb->last;
    auto both = [&](double s1, double s2) {
      return R.lambda1(s1, s1, s2, T3) * R.lambda2(s2, s1, s2, T3) *
             pow_delta(R.lambda3(T3, s1, s2, T3), d3) * std::exp(-R.total_cumulative(T3, s1, s2, T3));
    };
    auto dementia_only = [&](double s1) {
      return R.lambda1(s1, s1, T3, T3) * pow_delta(R.lambda3(T3, s1, T3, T3), d3) *
             std::exp(-R.total_cumulative(T3, s1, T3, T3));
    };
    auto inner = [&](double s1) {
      auto f2 = [&](double s2) { return both(s1, s2); };
      return integrate(f2, vM, T3, {s1}) + dementia_only(s1);
    };
    if (dem_iv) {
      L = integrate(inner, dem_iv->lower, std::min(dem_iv->upper, T3), {});
    } else {
      const double vm = dem_sb->last;
      auto outer = [&](double s2) {
        auto f1 = [&](double s1) { return both(s1, s2); };
        return integrate(f1, vm, T3, {s2});
      };
      auto institution_only = [&](double s2) {
        return R.lambda2(s2, T3, s2, T3) * pow_delta(R.lambda3(T3, T3, s2, T3), d3) *
               std::exp(-R.total_cumulative(T3, T3, s2, T3));
      };
      L = integrate(outer, vM, T3, {});
      L += integrate(dementia_only, vm, T3, {});
      L += integrate(institution_only, vM, T3, {});
      L += pow_delta(R.lambda3(T3, T3, T3, T3), d3) *
           std::exp(-R.total_cumulative(T3, T3, T3, T3));
    }
  }
  return L > 0.0 ? std::log(L) : minus_infinity;
}

}  // namespace gcmp
