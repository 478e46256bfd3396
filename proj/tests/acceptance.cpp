// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gcmp/catalog.hpp"
#include "gcmp/inference.hpp"
#include "gcmp/markov_oracle.hpp"
#include "gcmp/simulator.hpp"
#include "gcmp/validation.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace gcmp;
using gcmp::support::Rng;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Settings {
  std::string gcmp_binary;
  fs::path work_dir = fs::temp_directory_path();
  std::uint64_t seed = 20240611;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double rel_gap(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

Outcome from_suite(const validation::SuiteResult& r) { return {r.passed, r.detail}; }

Outcome heuristic(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = validation::heuristic_equivalence(100, s.seed, 1e-6);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o = from_suite(r);
  o.pass = o.pass && r.cells >= 100 && secs <= 60.0;
  o.detail += fmt(", %.1f s (limit 60 s)", secs);
  return o;
}

Outcome partial_reduction(const Settings& s) {
  Rng rng(s.seed);
  std::size_t bad1 = 0, bad2 = 0;
  double worst1 = 0.0, worst2 = 0.0;

  for (std::size_t k = 0; k < 100; ++k) {
    IntensityModel model;
    std::size_t c = 0;
    if (k % 3 == 0) {
      model = illness_death(support::random_baseline(rng, rng.index(3)),
                            support::random_baseline(rng, rng.index(3)),
                            support::random_baseline(rng, rng.index(3)))
                  .model;
    } else {
      model = dementia_model(support::random_dementia(rng));
      c = k % 3 == 1 ? 0 : 1;
    }
    const auto visits = support::random_visits(rng, 2 + rng.index(4), 0.4, 1.5);
    const double C = visits.back() + rng.uniform(0.3, 1.5);
    const auto path = simulate_path(model, C, rng.seed(), k);

    PseudoAtom atom;
    std::vector<double> s_args(model.components(), C);
    for (std::size_t j = 0; j < model.components(); ++j) {
      const double t = path.jump_times[j];
      if (t <= C) s_args[j] = t;
      atom.components.emplace_back(Exact{std::min(t, C), t <= C});
    }
    const auto l = support::first_visit_at_or_after(visits, path.jump_times[c]);
    if (l) {
      atom.components[c] = Interval{*l == 1 ? 0.0 : visits[*l - 2], visits[*l - 1]};
    } else {
      atom.components[c] = SurvivedBeyond{visits.back()};
    }
    const double engine = std::exp(loglik_atom(model, atom, C));
    const double oracle = support::one_partial_likelihood(model, c, visits, l, s_args, C);
    const double gap = rel_gap(engine, oracle);
    worst1 = std::max(worst1, gap);
    if (!(gap <= 1e-6)) ++bad1;
  }

  for (std::size_t k = 0; k < 100; ++k) {
    IntensityModel model;
    if (k % 2 == 0) {
      model = dementia_model(support::random_dementia(rng));
    } else {
      model = illness_death(support::random_baseline(rng, rng.index(3)),
                            support::random_baseline(rng, rng.index(3)),
                            support::random_baseline(rng, rng.index(3)))
                  .model.with_death_component(std::nullopt);
    }
    const auto v1 = support::random_visits(rng, 2 + rng.index(3), 0.4, 1.5);
    const auto v2 = support::random_visits(rng, 2 + rng.index(3), 0.4, 1.5);
    const double C = std::max(v1.back(), v2.back()) + rng.uniform(0.3, 1.5);
    const auto path = simulate_path(model, C, rng.seed(), 1000 + k);

    PseudoAtom atom;
    std::vector<double> s_args(model.components(), C);
    for (std::size_t j = 0; j < model.components(); ++j) {
      const double t = path.jump_times[j];
      if (t <= C) s_args[j] = t;
      atom.components.emplace_back(Exact{std::min(t, C), t <= C});
    }
    auto coarse = [&](std::size_t j, const std::vector<double>& v) {
      const auto l = support::first_visit_at_or_after(v, path.jump_times[j]);
      if (l) {
        atom.components[j] = Interval{*l == 1 ? 0.0 : v[*l - 2], v[*l - 1]};
      } else {
        atom.components[j] = SurvivedBeyond{v.back()};
      }
      return l;
    };
    const auto l1 = coarse(0, v1);
    const auto l2 = coarse(1, v2);
    const double engine = std::exp(loglik_atom(model, atom, C));
    const double oracle = support::two_partial_likelihood(model, 0, v1, l1, 1, v2, l2, s_args, C);
    const double gap = rel_gap(engine, oracle);
    worst2 = std::max(worst2, gap);
    if (!(gap <= 1e-6)) ++bad2;
  }
  return {bad1 == 0 && bad2 == 0,
          fmt("single partial component: 100 atoms, %zu failures, max rel %.2e; "
              "two partial components: 100 atoms, %zu failures, max rel %.2e",
              bad1, worst1, bad2, worst2)};
}

Outcome dementia(const Settings& s) {
  const auto r = validation::dementia_crosscheck(200, s.seed, 1e-6);
  Outcome o = from_suite(r);
  o.pass = o.pass && r.cells == 800;
  return o;
}

Outcome monte_carlo(const Settings& s) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = validation::mc_agreement(validation::mc_configs(), 1000000, s.seed, 30, 0.99);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o = from_suite(r);
  o.pass = o.pass && r.cells >= 50 && secs <= 600.0;
  o.detail += fmt(", %.1f s (limit 600 s)", secs);
  return o;
}

Outcome total_probability(const Settings&) {
  const auto id = illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                                BaselineSpec::constant(0.4));
  const double mixed = support::total_probability(id.model, panel_scheme({1.0, 2.0}, 2.0));

  ObservationScheme both;
  both.horizon = 2.0;
  both.components = {ComponentSchedule{{}, {1.0, 2.0}, false},
                     ComponentSchedule{{}, {1.0, 2.0}, false}};
  const double panel =
      support::total_probability(id.model.with_death_component(std::nullopt), both);
  const bool ok = std::abs(mixed - 1.0) <= 1e-4 && std::abs(panel - 1.0) <= 1e-4;
  return {ok, fmt("illness at visits {1,2}, death continuous: %.10f; both at visits: %.10f",
                  mixed, panel)};
}

Outcome recovery(const Settings& s) {
  const Eigen::Vector3d truth(0.1, 0.2, 0.4);
  const auto id = illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                                BaselineSpec::constant(0.4));
  const auto scheme = panel_scheme(regular_visits(1.0, 10.0), 10.0);
  int covered[3] = {0, 0, 0};
  int fits = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto cohort = support::simulate_cohort(id.model, scheme, 2000, s.seed + 100 + rep);
    const auto start = id.model.with_natural(Eigen::Vector3d(0.2, 0.2, 0.2));
    const FitResult r = fit_mle(start, cohort.data);
    if (!r.std_errors) continue;
    ++fits;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(r.theta_hat[i] - truth[i]) <= 3.0 * (*r.std_errors)[i]) ++covered[i];
    }
  }
  const bool ok = fits == 20 && covered[0] >= 19 && covered[1] >= 19 && covered[2] >= 19;
  return {ok, fmt("%d/20 fits with standard errors; within 3 SE: a01 %d/20, a02 %d/20, a12 %d/20",
                  fits, covered[0], covered[1], covered[2])};
}

Outcome ignorability(const Settings& s) {
  const auto id = illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                                BaselineSpec::constant(0.4));
  const auto visits = regular_visits(1.0, 10.0);
  const auto scheme = panel_scheme(visits, 10.0);
  const auto cohort = support::simulate_cohort(id.model, scheme, 2000, s.seed + 100);
  std::size_t mismatches = 0, truncated = 0;
  double total_a = 0.0, total_b = 0.0;
  for (const auto& path : cohort.paths) {
    const double death = path.jump_times[1];
    std::vector<double> before;
    for (double v : visits) {
      if (v < death) before.push_back(v);
    }
    if (before.size() < visits.size()) ++truncated;
    const PseudoAtom a = coarsen(path, scheme);
    const PseudoAtom b = coarsen(path, panel_scheme(before, 10.0));
    const double la = loglik_atom(id.model, a, 10.0);
    const double lb = loglik_atom(id.model, b, 10.0);
    total_a += la;
    total_b += lb;
    if (!(a == b) || std::memcmp(&la, &lb, sizeof la) != 0) ++mismatches;
  }
  const bool ok = mismatches == 0 && std::memcmp(&total_a, &total_b, sizeof total_a) == 0;
  return {ok, fmt("2000 subjects (%zu with visits after death), %zu differing; totals %.17g and %.17g",
                  truncated, mismatches, total_a, total_b)};
}

Outcome worked_values(const Settings&) {
  auto six = [](double x, double ref) { return rel_gap(x, ref) <= 5e-7; };

  const auto a = illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                               BaselineSpec::constant(0.3));
  const double s[2] = {0.5, 1.5};
  const double f = f_theta(a.model, s, 2.0);
  const double f_ref = 0.1 * 0.3 * std::exp(-0.45);

  const auto b = illness_death(BaselineSpec::constant(0.1), BaselineSpec::constant(0.2),
                               BaselineSpec::constant(0.4));
  const PseudoAtom atom{{Interval{0.0, 1.0}, Exact{2.0, false}}};
  const double interval = std::exp(loglik_atom(b.model, atom, 2.0));
  const double interval_ref = std::exp(-0.8) * std::expm1(0.1);

  const double p01 = transition_matrix(b.spec, 0.0, 1.0)(0, 1);
  const double p01_ref = std::exp(-0.4) * std::expm1(0.1);

  const bool ok = six(f, f_ref) && six(interval, interval_ref) && six(p01, p01_ref);
  return {ok, fmt("f = %.6g (closed form %.6g), interval atom = %.6g (closed form %.6g), "
                  "p01(0,1) = %.6g (closed form %.6g)",
                  f, f_ref, interval, interval_ref, p01, p01_ref)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const Settings& s) {
  if (s.gcmp_binary.empty()) return {false, "no --gcmp binary given"};
  const fs::path dir = s.work_dir / "determinism";
  fs::create_directories(dir);
  const fs::path configs = fs::path(GCMP_CONFIG_DIR);
  struct Case {
    std::string name;
    std::string model_args;
  };
  const std::vector<Case> cases = {
      {"illness_death", "--model " + (configs / "illness_death.json").string() + " --scheme " +
                            (configs / "panel_scheme.json").string()},
      {"dementia", "--model " + (configs / "dementia.json").string()},
  };
  std::size_t compared = 0, differing = 0;
  std::string failures;
  for (const auto& c : cases) {
    std::vector<std::string> sims, truths, lls;
    int runs = 0;
    for (unsigned threads : {1u, 1u, 4u}) {
      const auto tag = c.name + "_" + std::to_string(runs++);
      const auto data = dir / (tag + ".csv");
      const auto truth = dir / (tag + "_truth.csv");
      const auto ll = dir / (tag + "_ll.csv");
      const std::string sim_cmd = s.gcmp_binary + " simulate " + c.model_args +
                                  " --n 3000 --seed 424242 --threads " + std::to_string(threads) +
                                  " --out " + data.string() + " --truth " + truth.string();
      const std::string ll_cmd = s.gcmp_binary + " loglik " + c.model_args + " --data " +
                                 dir.string() + "/" + c.name + "_0.csv --threads " +
                                 std::to_string(threads == 4 ? 3 : 1) + " --out " + ll.string();
      if (std::system(sim_cmd.c_str()) != 0 || std::system(ll_cmd.c_str()) != 0) {
        return {false, "command failed: " + sim_cmd};
      }
      sims.push_back(slurp(data));
      truths.push_back(slurp(truth));
      lls.push_back(slurp(ll));
    }
    for (const auto* group : {&sims, &truths, &lls}) {
      for (std::size_t i = 1; i < group->size(); ++i) {
        ++compared;
        if ((*group)[i] != (*group)[0] || (*group)[0].empty()) {
          ++differing;
          failures += " " + c.name;
        }
      }
    }
  }
  return {differing == 0, fmt("%zu file comparisons (two runs, then other --threads), %zu differing",
                              compared, differing) +
                              failures};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Settings settings;
  std::vector<int> only;
  app.add_option("--gcmp", settings.gcmp_binary, "path to the gcmp executable");
  app.add_option("--work-dir", settings.work_dir, "scratch directory for CLI outputs");
  app.add_option("--seed", settings.seed, "master seed");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const Settings&)>>> criteria = {
      {"heuristic equivalence", heuristic},
      {"partial-observation reduction", partial_reduction},
      {"dementia cross-check", dementia},
      {"Monte Carlo agreement", monte_carlo},
      {"total probability", total_probability},
      {"parameter recovery", recovery},
      {"ignorability invariance", ignorability},
      {"worked values", worked_values},
      {"determinism", determinism},
  };

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second(settings);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " C" << id << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
