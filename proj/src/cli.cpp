#include "gcmp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gcmp/error.hpp"
#include "gcmp/inference.hpp"
#include "gcmp/io.hpp"
#include "gcmp/simulator.hpp"
#include "gcmp/validation.hpp"

namespace gcmp::cli {

namespace {

struct Options {
  std::string model;
  std::string scheme;
  std::string data;
  std::string theta;
  std::string out;
  std::string truth;
  std::string fix;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double tol = 1e-8;
};

struct Setup {
  io::LoadedModel loaded;
  ObservationScheme scheme;
};

Setup load(const Options& o) {
  Setup s;
  s.loaded = io::load_model(o.model);
  if (!o.theta.empty()) {
    auto& m = s.loaded.model;
    m = m.with_natural(io::parse_theta(o.theta, m.parameters().size()));
  }
  if (!o.scheme.empty()) {
    s.scheme = io::load_scheme(o.scheme, s.loaded.model);
  } else if (s.loaded.scheme) {
    s.scheme = *s.loaded.scheme;
  } else {
    throw InvalidInput("--scheme is required for this model");
  }
  if (s.scheme.components.size() != s.loaded.model.components()) {
    throw InvalidInput("scheme and model disagree on the number of components");
  }
  return s;
}

// Writes to the file named by `path`, or to `fallback` when it is empty.
template <class F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput(path + ": cannot open for writing");
  write(f);
  if (!f) throw Error(path + ": write failed");
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::vector<std::exception_ptr> errors(k);
  auto work = [&](std::size_t t) {
    try {
      for (std::size_t i = n * t / k; i < n * (t + 1) / k; ++i) body(i);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (k == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int simulate(const Options& o, std::ostream& out) {
  const Setup s = load(o);
  const auto& model = s.loaded.model;
  std::vector<SimulatedPath> paths(o.n);
  Dataset data;
  data.horizon = s.scheme.horizon;
  data.subjects.resize(o.n);
  parallel_for(o.n, o.threads, [&](std::size_t i) {
    paths[i] = simulate_path(model, s.scheme.horizon, o.seed, i);
    data.subjects[i].id = std::to_string(i + 1);
    data.subjects[i].atom = coarsen(paths[i], s.scheme);
    data.subjects[i].covariates = model.covariates();
  });
  emit(o.out, out, [&](std::ostream& f) { io::write_dataset(f, model, data); });
  if (!o.truth.empty()) {
    std::vector<std::string> ids;
    for (const auto& subj : data.subjects) ids.push_back(subj.id);
    emit(o.truth, out, [&](std::ostream& f) { io::write_truth(f, model, ids, paths); });
  }
  return 0;
}

int loglik(const Options& o, std::ostream& out, std::ostream& err) {
  const Setup s = load(o);
  const Dataset data = io::load_dataset(o.data, s.loaded.model, s.scheme.horizon);
  LikelihoodOptions lo;
  lo.tol.rel = o.tol;
  std::vector<double> ll(data.subjects.size(), minus_infinity);
  std::vector<std::string> why(data.subjects.size());
  parallel_for(data.subjects.size(), o.threads, [&](std::size_t i) {
    Dataset one{data.horizon, {data.subjects[i]}};
    try {
      ll[i] = subject_logliks(s.loaded.model, one, lo, 1).front();
    } catch (const Error& e) {
      why[i] = e.what();
    }
  });
  double total = 0.0;
  bool bad = false;
  for (std::size_t i = 0; i < ll.size(); ++i) {
    total += ll[i];
    if (ll[i] == minus_infinity) {
      bad = true;
      err << "subject " << data.subjects[i].id << ": log-likelihood is minus infinity";
      if (!why[i].empty()) err << " (" << why[i] << ")";
      err << '\n';
    }
  }
  emit(o.out, out, [&](std::ostream& f) {
    f << "subject_id,loglik\n";
    for (std::size_t i = 0; i < ll.size(); ++i) {
      f << data.subjects[i].id << ',' << io::format_double(ll[i]) << '\n';
    }
    f << "total," << io::format_double(total) << '\n';
  });
  return bad ? 1 : 0;
}

int fit(const Options& o, std::ostream& out) {
  const Setup s = load(o);
  const auto& model = s.loaded.model;
  const Dataset data = io::load_dataset(o.data, model, s.scheme.horizon);
  FitOptions fo;
  fo.threads = o.threads;
  fo.likelihood.tol.rel = o.tol;
  if (!o.fix.empty()) {
    fo.fixed.assign(model.parameters().size(), false);
    std::stringstream ss(o.fix);
    std::string name;
    while (std::getline(ss, name, ',')) fo.fixed[model.parameter_index(name)] = true;
  }
  const FitResult r = fit_mle(model, data, fo);
  emit(o.out, out, [&](std::ostream& f) { io::write_fit_report(f, r); });
  return 0;
}

int validate(const Options& o, std::ostream& out) {
  const std::uint64_t seed = o.seed;
  const std::size_t n = o.n == 0 ? 200000 : o.n;
  std::vector<validation::SuiteResult> results;
  results.push_back(validation::heuristic_equivalence(20, seed));
  results.push_back(validation::dementia_crosscheck(20, seed));
  results.push_back(validation::mc_agreement(validation::mc_configs(), n, seed, 10, 0.95));
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Likelihoods of coarsened one-jump counting processes", "gcmp"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--model", o.model, "model configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--scheme", o.scheme, "observation scheme (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--theta", o.theta, "natural-scale parameters, comma separated");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--tol", o.tol, "relative quadrature tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output file (default: standard output)");
  };
  auto* sim = app.add_subcommand("simulate", "simulate a coarsened cohort");
  common(sim);
  sim->add_option("--n", o.n, "number of subjects")->required();
  sim->add_option("--seed", o.seed, "64-bit master seed")->required();
  sim->add_option("--truth", o.truth, "also write the exact paths here");

  auto* ll = app.add_subcommand("loglik", "per-subject and total log-likelihood");
  common(ll);
  ll->add_option("--data", o.data, "dataset CSV")->required()->check(CLI::ExistingFile);

  auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit");
  common(fit_cmd);
  fit_cmd->add_option("--data", o.data, "dataset CSV")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--fix", o.fix, "parameter names held fixed, comma separated");

  auto* val = app.add_subcommand("validate", "run the oracle suites");
  val->add_option("--n", o.n, "Monte Carlo paths per configuration");
  val->add_option("--seed", o.seed, "master seed")->default_val(1);
  val->add_option("--threads", o.threads, "worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (sim->parsed()) return simulate(o, out);
    if (ll->parsed()) return loglik(o, out, err);
    if (fit_cmd->parsed()) return fit(o, out);
    if (val->parsed()) return validate(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace gcmp::cli
