#include "gcmp/validation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gcmp/catalog.hpp"
#include "gcmp/error.hpp"
#include "gcmp/markov_oracle.hpp"
#include "gcmp/simulator.hpp"

namespace gcmp::validation {

namespace {

double uniform(CounterRng& rng, double a, double b) { return a + (b - a) * rng.uniform(); }

std::vector<double> random_visits(CounterRng& rng, std::size_t m, double lo, double hi) {
  std::vector<double> v;
  double t = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    t += uniform(rng, lo, hi);
    v.push_back(t);
  }
  return v;
}

double relative_gap(double ll_a, double ll_b) {
  if (ll_a == minus_infinity && ll_b == minus_infinity) return 0.0;
  return std::abs(std::expm1(ll_a - ll_b));
}

void finish(SuiteResult& r, const std::string& worst) {
  r.passed = r.cells > 0 && r.failures == 0;
  std::ostringstream s;
  s << r.cells << " cells, " << r.failures << " failures, max relative error "
    << r.max_discrepancy;
  if (!worst.empty()) s << " (worst: " << worst << ")";
  r.detail = s.str();
}

}  // namespace

SuiteResult heuristic_equivalence(std::size_t models, std::uint64_t seed, double rel_tol) {
  SuiteResult r;
  r.name = "engine vs Markov transition-probability likelihoods";
  std::string worst;
  for (std::size_t k = 0; k < models; ++k) {
    CounterRng rng(seed, k);
    const bool weibull = k % 2 == 1;
    auto draw = [&]() {
      return weibull ? BaselineSpec::weibull(uniform(rng, 0.05, 0.5), uniform(rng, 1.0, 2.0))
                     : BaselineSpec::constant(uniform(rng, 0.05, 1.0));
    };
    const BaselineSpec a01 = draw(), a02 = draw(), a12 = draw();
    const IllnessDeath id = illness_death(a01, a02, a12);
    const std::size_t m = 3 + static_cast<std::size_t>(4 * rng.uniform());
    std::vector<double> visits = random_visits(rng, m, 0.3, 1.5);
    const double C = visits.back() + uniform(rng, 0.5, 2.0);
    const std::size_t l = 1 + static_cast<std::size_t>(static_cast<double>(m) * rng.uniform());

    std::vector<double> record_visits{0.0};
    record_visits.insert(record_visits.end(), visits.begin(), visits.end());

    for (int c = 0; c < 4; ++c) {
      const bool ill = c < 2;
      const bool died = c % 2 == 0;
      const double from = ill ? record_visits[l] : visits.back();
      const double T = died ? uniform(rng, from, C) : C;
      PseudoAtom atom;
      IllnessDeathRecord rec;
      rec.follow_up = T;
      rec.died = died;
      if (ill) {
        atom.components = {Interval{record_visits[l - 1], record_visits[l]}, Exact{T, died}};
        rec.visits.assign(record_visits.begin(), record_visits.begin() + static_cast<long>(l) + 1);
        rec.first_ill_visit = l;
      } else {
        atom.components = {SurvivedBeyond{visits.back()}, Exact{T, died}};
        rec.visits = record_visits;
      }
      const double engine = loglik_atom(id.model, atom, C);
      const double oracle = heuristic_loglik(id.spec, rec);
      const double gap = relative_gap(engine, oracle);
      ++r.cells;
      if (!(gap <= rel_tol)) ++r.failures;
      if (!(gap <= r.max_discrepancy)) {
        r.max_discrepancy = gap;
        worst = describe(atom) + (weibull ? " weibull" : " constant");
      }
    }
  }
  finish(r, worst);
  return r;
}

SuiteResult dementia_crosscheck(std::size_t draws, std::uint64_t seed, double rel_tol) {
  SuiteResult r;
  r.name = "generic engine vs dementia reference formulas";
  std::string worst;
  for (std::size_t k = 0; k < draws; ++k) {
    CounterRng rng(seed, k);
    auto draw = [&]() {
      switch (k % 3) {
        case 0:
          return BaselineSpec::constant(uniform(rng, 0.05, 0.3));
        case 1:
          return BaselineSpec::weibull(uniform(rng, 0.02, 0.2), uniform(rng, 1.0, 2.0));
        default:
          return BaselineSpec::piecewise_constant(
              {1.5, 3.0}, {uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3), uniform(rng, 0.05, 0.3)});
      }
    };
    DementiaParams d;
    d.a01 = draw();
    d.a02 = draw();
    d.a04 = draw();
    d.eta1_2 = uniform(rng, -0.5, 0.5);
    d.eta2_1 = uniform(rng, -0.5, 0.5);
    d.eta3_1 = uniform(rng, -0.5, 0.5);
    d.eta3_2 = uniform(rng, -0.5, 0.5);
    d.eta3_12 = uniform(rng, -0.5, 0.5);
    d.gamma1_2 = uniform(rng, -0.1, 0.1);
    d.gamma2_1 = uniform(rng, -0.1, 0.1);
    d.gamma3_1 = uniform(rng, -0.1, 0.1);
    d.gamma3_2 = uniform(rng, -0.1, 0.1);
    d.beta1 = uniform(rng, -0.5, 0.5);
    d.beta2 = uniform(rng, -0.5, 0.5);
    d.beta3 = uniform(rng, -0.5, 0.5);
    d.z = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const IntensityModel model = dementia_model(d);

    const std::size_t m = 2 + static_cast<std::size_t>(4 * rng.uniform());
    const auto visits = random_visits(rng, m, 0.5, 1.5);
    const double vm = visits.back();
    const double C = vm + uniform(rng, 0.5, 2.0);
    const bool died = rng.uniform() < 0.7;
    const double T3 = died ? uniform(rng, vm, C) : C;
    const std::size_t l = static_cast<std::size_t>(static_cast<double>(m) * rng.uniform());
    const double lo = l == 0 ? 0.0 : visits[l - 1];
    const double T2 = uniform(rng, 0.0, vm);

    const AtomComponent dementia[2] = {Interval{lo, visits[l]}, SurvivedBeyond{vm}};
    const AtomComponent institution[2] = {Exact{T2, true}, SurvivedBeyond{vm}};
    for (const auto& a : dementia) {
      for (const auto& b : institution) {
        const PseudoAtom atom{{a, b, Exact{T3, died}}};
        const double engine = loglik_atom(model, atom, C);
        const double ref = dementia_loglik_reference(d, atom, C);
        const double gap = relative_gap(engine, ref);
        ++r.cells;
        if (!(gap <= rel_tol)) ++r.failures;
        if (!(gap <= r.max_discrepancy)) {
          r.max_discrepancy = gap;
          worst = describe(atom);
        }
      }
    }
  }
  finish(r, worst);
  return r;
}

std::vector<McConfig> mc_configs() {
  std::vector<McConfig> out;
  {
    auto id = illness_death(BaselineSpec::constant(0.3), BaselineSpec::constant(0.1),
                            BaselineSpec::constant(0.4));
    out.push_back({"illness-death constant, panel illness", id.model,
                   panel_scheme({1.0, 2.0, 3.0, 4.0}, 4.0), 0.05});
  }
  {
    auto id = illness_death(BaselineSpec::weibull(0.2, 1.5), BaselineSpec::weibull(0.1, 1.2),
                            BaselineSpec::weibull(0.3, 1.3));
    out.push_back({"illness-death Weibull, hybrid", id.model,
                   hybrid_scheme(1.0, {2.0, 3.0, 4.0}, 4.0), 0.05});
  }
  {
    auto id = illness_death(BaselineSpec::constant(0.3), BaselineSpec::constant(0.15),
                            BaselineSpec::constant(0.5));
    ObservationScheme s;
    s.horizon = 3.0;
    s.components = {ComponentSchedule{{}, {1.0, 2.0, 3.0}, false},
                    ComponentSchedule{{}, {1.0, 2.0, 3.0}, false}};
    out.push_back({"illness-death constant, both components at visits",
                   id.model.with_death_component(std::nullopt), s, 0.05});
  }
  {
    DementiaParams d;
    d.a01 = BaselineSpec::constant(0.15);
    d.a02 = BaselineSpec::constant(0.1);
    d.a04 = BaselineSpec::weibull(0.1, 1.3);
    d.eta1_2 = 0.3;
    d.eta2_1 = 0.4;
    d.eta3_1 = 0.5;
    d.eta3_2 = 0.3;
    d.eta3_12 = -0.2;
    d.gamma1_2 = 0.05;
    d.gamma3_1 = 0.05;
    out.push_back({"dementia non-Markov, retrospective institution", dementia_model(d),
                   dementia_scheme({1.0, 2.0, 3.0}, 4.0), 0.05});
  }
  return out;
}

namespace {

using CellKey = std::vector<double>;

// Exact observed times are replaced by their bin index.
CellKey cell_key(const PseudoAtom& atom, double bw, bool& shared_bin) {
  CellKey key;
  std::vector<double> bins;
  for (const auto& c : atom.components) {
    if (const auto* e = std::get_if<Exact>(&c)) {
      key.push_back(0.0);
      key.push_back(e->observed ? 1.0 : 0.0);
      const double b = e->observed ? std::floor(e->time / bw) : e->time;
      if (e->observed) bins.push_back(b);
      key.push_back(b);
    } else if (const auto* iv = std::get_if<Interval>(&c)) {
      key.insert(key.end(), {1.0, iv->lower, iv->upper});
    } else {
      key.insert(key.end(), {2.0, std::get<SurvivedBeyond>(c).last, 0.0});
    }
  }
  std::sort(bins.begin(), bins.end());
  shared_bin = std::adjacent_find(bins.begin(), bins.end()) != bins.end();
  return key;
}

PseudoAtom cell_atom(const CellKey& key, double bw) {
  PseudoAtom atom;
  for (std::size_t i = 0; i + 2 < key.size(); i += 3) {
    const int type = static_cast<int>(key[i]);
    if (type == 0) {
      const bool observed = key[i + 1] != 0.0;
      atom.components.emplace_back(Exact{observed ? (key[i + 2] + 0.5) * bw : key[i + 2], observed});
    } else if (type == 1) {
      atom.components.emplace_back(Interval{key[i + 1], key[i + 2]});
    } else {
      atom.components.emplace_back(SurvivedBeyond{key[i + 1]});
    }
  }
  return atom;
}

std::map<CellKey, std::size_t> count_cells(const McConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::map<CellKey, std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    const auto path = simulate_path(cfg.model, cfg.scheme.horizon, seed, i);
    bool shared = false;
    auto key = cell_key(coarsen(path, cfg.scheme), cfg.bin_width, shared);
    if (!shared) ++counts[std::move(key)];
  }
  return counts;
}

}  // namespace

SuiteResult mc_agreement(const std::vector<McConfig>& configs, std::size_t n_paths,
                         std::uint64_t seed, std::size_t cells_per_config, double coverage) {
  SuiteResult r;
  r.name = "engine vs Monte Carlo atom probabilities";
  std::string worst;
  const double n = static_cast<double>(n_paths);
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& cfg = configs[c];
    const std::size_t pilot_n = std::max<std::size_t>(1000, n_paths / 5);
    const auto pilot = count_cells(cfg, pilot_n, seed + 1 + 2 * c);
    std::vector<std::pair<std::size_t, CellKey>> ranked;
    for (const auto& [key, count] : pilot) {
      // Cells expected to collect fewer than 50 matches are too noisy for a z test.
      if (static_cast<double>(count) * n / static_cast<double>(pilot_n) >= 50.0) {
        ranked.emplace_back(count, key);
      }
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (ranked.size() > cells_per_config) ranked.resize(cells_per_config);

    const auto main = count_cells(cfg, n_paths, seed + 2 * c);
    for (const auto& entry : ranked) {
      const CellKey& key = entry.second;
      const PseudoAtom atom = cell_atom(key, cfg.bin_width);
      int exact = 0;
      for (const auto& comp : atom.components) {
        if (const auto* e = std::get_if<Exact>(&comp); e && e->observed) ++exact;
      }
      const double scale = std::pow(cfg.bin_width, exact);
      const auto it = main.find(key);
      const std::size_t count = it == main.end() ? 0 : it->second;
      const double phat = static_cast<double>(count) / n;
      const double estimate = phat / scale;
      const double se =
          count == 0 ? 1.0 / n / scale : std::sqrt(phat * (1.0 - phat) / n) / scale;
      const double ll = loglik_atom(cfg.model, atom, cfg.scheme.horizon);
      const double engine = ll == minus_infinity ? 0.0 : std::exp(ll);
      const double z = std::abs(estimate - engine) / se;
      ++r.cells;
      if (!(z <= 3.0)) ++r.failures;
      if (!(z <= r.max_discrepancy)) {
        r.max_discrepancy = z;
        std::ostringstream s;
        s << cfg.name << " " << describe(atom) << ": engine " << engine << ", MC " << estimate
          << " +- " << se;
        worst = s.str();
      }
    }
  }
  const double within = r.cells == 0 ? 0.0
                                     : static_cast<double>(r.cells - r.failures) /
                                           static_cast<double>(r.cells);
  r.passed = r.cells > 0 && within >= coverage;
  std::ostringstream s;
  s << r.cells << " cells, " << r.failures << " beyond 3 SE (" << 100.0 * within
    << "% within), max |z| " << r.max_discrepancy;
  if (!worst.empty()) s << " (worst: " << worst << ")";
  r.detail = s.str();
  return r;
}

}  // namespace gcmp::validation
