#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "gcmp/error.hpp"
#include "gcmp/quadrature.hpp"

namespace gcmp::support {

namespace {

constexpr quad::Tolerance oracle_tol{1e-11, 1e-300, 10000000};

std::vector<double> cuts_for(const IntensityModel& model, const std::vector<double>& s,
                             const std::vector<double>& visits) {
  std::vector<double> cuts = model.breakpoints();
  cuts.insert(cuts.end(), s.begin(), s.end());
  cuts.insert(cuts.end(), visits.begin(), visits.end());
  return cuts;
}

double integral(const std::function<double(double)>& f, double a, double b,
                const std::vector<double>& cuts) {
  return quad::integrate_1d(f, a, b, cuts, oracle_tol).value;
}

}  // namespace

std::vector<double> random_visits(Rng& rng, std::size_t m, double lo, double hi) {
  std::vector<double> v;
  double t = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    t += rng.uniform(lo, hi);
    v.push_back(t);
  }
  return v;
}

BaselineSpec random_baseline(Rng& rng, std::size_t kind) {
  switch (kind % 3) {
    case 0:
      return BaselineSpec::constant(rng.uniform(0.05, 0.5));
    case 1:
      return BaselineSpec::weibull(rng.uniform(0.03, 0.3), rng.uniform(0.8, 2.0));
    default:
      return BaselineSpec::piecewise_constant(
          {1.0, 2.5}, {rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4)});
  }
}

DementiaParams random_dementia(Rng& rng) {
  DementiaParams d;
  d.a01 = random_baseline(rng, rng.index(3));
  d.a02 = random_baseline(rng, rng.index(3));
  d.a04 = random_baseline(rng, rng.index(3));
  d.eta1_2 = rng.uniform(-0.7, 0.7);
  d.eta2_1 = rng.uniform(-0.7, 0.7);
  d.eta3_1 = rng.uniform(-0.7, 0.7);
  d.eta3_2 = rng.uniform(-0.7, 0.7);
  d.eta3_12 = rng.uniform(-0.7, 0.7);
  d.gamma1_2 = rng.uniform(-0.15, 0.15);
  d.gamma2_1 = rng.uniform(-0.15, 0.15);
  d.gamma3_1 = rng.uniform(-0.15, 0.15);
  d.gamma3_2 = rng.uniform(-0.15, 0.15);
  d.beta1 = rng.uniform(-0.5, 0.5);
  d.beta2 = rng.uniform(-0.5, 0.5);
  d.beta3 = rng.uniform(-0.5, 0.5);
  d.z = rng.uniform(-1.0, 1.0);
  return d;
}

double one_partial_likelihood(const IntensityModel& model, std::size_t c,
                         const std::vector<double>& visits, std::optional<std::size_t> l,
                         std::vector<double> s, double horizon) {
  const double C = horizon;
  s[c] = C;
  const auto cuts = cuts_for(model, s, visits);
  auto f = [&](double sc) {
    std::vector<double> x = s;
    x[c] = sc;
    return f_theta(model, x, C);
  };
  if (l) {
    const double lo = *l == 1 ? 0.0 : visits[*l - 2];
    return integral(f, lo, visits[*l - 1], cuts);
  }
  const double vm = visits.empty() ? 0.0 : visits.back();
  return integral(f, vm, C, cuts) + f(C);
}

double two_partial_likelihood(const IntensityModel& model, std::size_t c1,
                         const std::vector<double>& visits1, std::optional<std::size_t> l1,
                         std::size_t c2, const std::vector<double>& visits2,
                         std::optional<std::size_t> l2, std::vector<double> s, double horizon) {
  const double C = horizon;
  s[c1] = C;
  s[c2] = C;
  std::vector<double> all_visits = visits1;
  all_visits.insert(all_visits.end(), visits2.begin(), visits2.end());
  const auto base_cuts = cuts_for(model, s, all_visits);
  auto f = [&](double s1, double s2) {
    std::vector<double> x = s;
    x[c1] = s1;
    x[c2] = s2;
    return f_theta(model, x, C);
  };
  auto with = [&](double t) {
    auto cuts = base_cuts;
    cuts.push_back(t);
    return cuts;
  };
  auto bounds = [&](const std::vector<double>& v, std::optional<std::size_t> l) {
    if (l) return std::pair{*l == 1 ? 0.0 : v[*l - 2], v[*l - 1]};
    return std::pair{v.empty() ? 0.0 : v.back(), C};
  };
  const auto [a1, b1] = bounds(visits1, l1);
  const auto [a2, b2] = bounds(visits2, l2);

  // Inner integral over s1 for fixed s2.
  auto inner1 = [&](double s2) {
    return integral([&](double x) { return f(x, s2); }, a1, b1, with(s2));
  };
  auto inner2 = [&](double s1) {
    return integral([&](double x) { return f(s1, x); }, a2, b2, with(s1));
  };

  if (l1 && l2) return integral(inner1, a2, b2, base_cuts);
  if (!l1 && l2) {
    return integral([&](double s2) { return inner1(s2) + f(C, s2); }, a2, b2, base_cuts);
  }
  if (l1 && !l2) {
    return integral([&](double s1) { return inner2(s1) + f(s1, C); }, a1, b1, base_cuts);
  }
  return integral(inner1, a2, C, base_cuts) +
         integral([&](double s1) { return f(s1, C); }, a1, C, base_cuts) +
         integral([&](double s2) { return f(C, s2); }, a2, C, base_cuts) + f(C, C);
}

Cohort simulate_cohort(const IntensityModel& model, const ObservationScheme& scheme,
                       std::size_t n, std::uint64_t seed) {
  Cohort c;
  c.data.horizon = scheme.horizon;
  for (std::size_t i = 0; i < n; ++i) {
    c.paths.push_back(simulate_path(model, scheme.horizon, seed, i));
    c.data.subjects.push_back(
        Subject{std::to_string(i + 1), coarsen(c.paths.back(), scheme), model.covariates(), 0.0});
  }
  return c;
}

std::optional<std::size_t> first_visit_at_or_after(const std::vector<double>& visits, double t) {
  for (std::size_t i = 0; i < visits.size(); ++i) {
    if (visits[i] >= t) return i + 1;
  }
  return std::nullopt;
}

std::vector<AtomComponent> visit_outcomes(const std::vector<double>& visits) {
  std::vector<AtomComponent> out;
  double lo = 0.0;
  for (double v : visits) {
    out.emplace_back(Interval{lo, v});
    lo = v;
  }
  out.emplace_back(SurvivedBeyond{lo});
  return out;
}

namespace {

// Sum over the product of visit outcomes of all components except `skip`,
// with component `skip` fixed at `fixed`.
double sum_outcomes(const IntensityModel& model, const ObservationScheme& scheme,
                    std::optional<std::size_t> skip, const AtomComponent& fixed) {
  const std::size_t p = scheme.components.size();
  std::vector<std::vector<AtomComponent>> choices(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (skip && j == *skip) {
      choices[j] = {fixed};
    } else {
      choices[j] = visit_outcomes(scheme.components[j].visits);
    }
  }
  std::vector<std::size_t> pick(p, 0);
  double total = 0.0;
  while (true) {
    PseudoAtom atom;
    for (std::size_t j = 0; j < p; ++j) atom.components.push_back(choices[j][pick[j]]);
    total += std::exp(loglik_atom(model, atom, scheme.horizon));
    std::size_t j = 0;
    while (j < p && ++pick[j] == choices[j].size()) pick[j++] = 0;
    if (j == p) break;
  }
  return total;
}

}  // namespace

double total_probability(const IntensityModel& model, const ObservationScheme& scheme) {
  const double C = scheme.horizon;
  std::optional<std::size_t> continuous;
  for (std::size_t j = 0; j < scheme.components.size(); ++j) {
    const auto& w = scheme.components[j].windows;
    if (w.empty()) continue;
    if (continuous || w.size() != 1 || w[0].begin != 0.0 || w[0].end < C ||
        !scheme.components[j].visits.empty()) {
      throw InvalidInput("total_probability: unsupported scheme");
    }
    continuous = j;
  }
  if (!continuous) return sum_outcomes(model, scheme, std::nullopt, Exact{});

  const std::size_t d = *continuous;
  const bool is_death = scheme.death_component == d;
  auto at = [&](double t, bool observed) {
    const ObservationScheme eff =
        is_death ? preprocess_death_censoring(scheme, t, observed) : scheme;
    return sum_outcomes(model, eff, d, Exact{t, observed});
  };
  std::vector<double> cuts = model.breakpoints();
  for (const auto& comp : scheme.components) {
    cuts.insert(cuts.end(), comp.visits.begin(), comp.visits.end());
  }
  const double density_part =
      quad::integrate_1d([&](double t) { return at(t, true); }, 0.0, C, cuts,
                         quad::Tolerance{1e-10, 1e-300, 10000000})
          .value;
  return density_part + at(C, false);
}

}  // namespace gcmp::support
