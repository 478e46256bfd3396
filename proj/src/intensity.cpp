#include "gcmp/intensity.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <queue>
#include <sstream>

#include "gcmp/error.hpp"

namespace gcmp {

double to_natural(Scale scale, double unconstrained) {
  return scale == Scale::log ? std::exp(unconstrained) : unconstrained;
}

double to_unconstrained(Scale scale, double natural) {
  if (scale == Scale::identity) return natural;
  if (!(natural > 0.0)) throw InvalidInput("log-scale parameter must be positive");
  return std::log(natural);
}

// ---------------------------------------------------------------------------
// Baseline

Baseline Baseline::constant(std::size_t rate) {
  Baseline b;
  b.family_ = Family::constant;
  b.params_ = {rate};
  return b;
}

Baseline Baseline::piecewise_constant(std::vector<double> cuts, std::vector<std::size_t> rates) {
  if (rates.size() != cuts.size() + 1) {
    throw InvalidInput("piecewise-constant baseline needs one rate per piece");
  }
  if (!std::is_sorted(cuts.begin(), cuts.end()) ||
      std::adjacent_find(cuts.begin(), cuts.end()) != cuts.end()) {
    throw InvalidInput("piecewise-constant cut points must be strictly increasing");
  }
  for (double c : cuts) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidInput("cut points must be positive");
  }
  Baseline b;
  b.family_ = Family::piecewise_constant;
  b.params_ = std::move(rates);
  b.cuts_ = std::move(cuts);
  return b;
}

Baseline Baseline::weibull(std::size_t scale, std::size_t shape) {
  Baseline b;
  b.family_ = Family::weibull;
  b.params_ = {scale, shape};
  return b;
}

Baseline Baseline::custom(RateFn rate, std::vector<std::size_t> params,
                          std::vector<double> breakpoints) {
  if (!rate) throw InvalidInput("custom baseline needs a rate function");
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
  Baseline b;
  b.family_ = Family::custom;
  b.params_ = std::move(params);
  b.cuts_ = std::move(breakpoints);
  b.fn_ = std::move(rate);
  return b;
}

namespace {

double custom_rate(const Baseline::RateFn& fn, const std::vector<std::size_t>& idx, double t,
                   std::span<const double> natural) {
  if (idx.size() <= 8) {
    std::array<double, 8> own{};
    for (std::size_t i = 0; i < idx.size(); ++i) own[i] = natural[idx[i]];
    return fn(t, std::span<const double>(own.data(), idx.size()));
  }
  std::vector<double> own(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) own[i] = natural[idx[i]];
  return fn(t, own);
}

}  // namespace

double Baseline::rate(double t, std::span<const double> natural) const {
  switch (family_) {
    case Family::constant:
      return natural[params_[0]];
    case Family::piecewise_constant: {
      const auto piece = std::upper_bound(cuts_.begin(), cuts_.end(), t) - cuts_.begin();
      return natural[params_[static_cast<std::size_t>(piece)]];
    }
    case Family::weibull: {
      const double a = natural[params_[0]];
      const double b = natural[params_[1]];
      if (b == 1.0) return a;
      return a * b * std::pow(t, b - 1.0);
    }
    case Family::custom:
      return custom_rate(fn_, params_, t, natural);
  }
  return 0.0;
}

double Baseline::cumulative(double t0, double t1, std::span<const double> natural,
                            const quad::Tolerance& tol) const {
  if (!(t1 > t0)) return 0.0;
  switch (family_) {
    case Family::constant:
      return natural[params_[0]] * (t1 - t0);
    case Family::piecewise_constant: {
      double sum = 0.0;
      double lo = t0;
      auto piece = static_cast<std::size_t>(std::upper_bound(cuts_.begin(), cuts_.end(), t0) -
                                            cuts_.begin());
      while (lo < t1) {
        const double hi = piece < cuts_.size() ? std::min(cuts_[piece], t1) : t1;
        sum += natural[params_[piece]] * (hi - lo);
        lo = hi;
        ++piece;
      }
      return sum;
    }
    case Family::weibull: {
      const double a = natural[params_[0]];
      const double b = natural[params_[1]];
      return a * (std::pow(t1, b) - std::pow(t0, b));
    }
    case Family::custom: {
      auto f = [&](double t) { return custom_rate(fn_, params_, t, natural); };
      return quad::integrate_1d(f, t0, t1, cuts_, tol).value;
    }
  }
  return 0.0;
}

bool Baseline::constant_between(double t0, double t1, std::span<const double> natural) const {
  switch (family_) {
    case Family::constant:
      return true;
    case Family::piecewise_constant:
      return std::upper_bound(cuts_.begin(), cuts_.end(), t0) ==
             std::lower_bound(cuts_.begin(), cuts_.end(), t1);
    case Family::weibull:
      return natural[params_[1]] == 1.0;
    case Family::custom:
      return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// JumpHistory

std::vector<double> JumpHistory::jump_times() const {
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    out[j] = (j < observed.size() && observed[j]) ? times[j] : no_jump;
  }
  return out;
}

std::vector<double> JumpHistory::density_arguments() const {
  std::vector<double> out(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    out[j] = (j < observed.size() && observed[j]) ? times[j] : horizon;
  }
  return out;
}

// ---------------------------------------------------------------------------
// IntensityModel

IntensityModel::IntensityModel(std::vector<std::string> component_names,
                               std::vector<Parameter> parameters,
                               std::vector<std::vector<Term>> terms, Eigen::VectorXd theta,
                               std::vector<std::string> covariate_names)
    : names_(std::move(component_names)),
      params_(std::move(parameters)),
      terms_(std::move(terms)),
      covariate_names_(std::move(covariate_names)),
      theta_(std::move(theta)) {
  const std::size_t p = names_.size();
  if (p == 0) throw InvalidInput("model needs at least one component");
  if (terms_.size() != p) throw InvalidInput("one term list per component is required");
  if (static_cast<std::size_t>(theta_.size()) != params_.size()) {
    throw InvalidInput("theta size does not match the parameter list");
  }
  const auto check_param = [&](std::size_t i) {
    if (i >= params_.size()) throw InvalidInput("term references an unknown parameter");
  };
  const auto check_component = [&](std::size_t l) {
    if (l >= p) throw InvalidInput("term references an unknown component");
  };
  for (const auto& list : terms_) {
    for (const auto& term : list) {
      for (std::size_t i : term.baseline.parameters()) check_param(i);
      for (const auto& [l, jumped] : term.gate.require) check_component(l);
      for (const auto& e : term.effects) {
        check_param(e.parameter);
        for (std::size_t l : e.components) check_component(l);
        if (e.kind == Effect::Kind::duration && e.components.size() != 1) {
          throw InvalidInput("duration effect refers to exactly one component");
        }
        if (e.kind == Effect::Kind::covariate && e.covariate >= covariate_names_.size()) {
          throw InvalidInput("effect references an unknown covariate");
        }
      }
    }
  }
  z_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(covariate_names_.size()));
  refresh();
}

void IntensityModel::refresh() {
  natural_.resize(theta_.size());
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    natural_[i] = to_natural(params_[static_cast<std::size_t>(i)].scale, theta_[i]);
  }
  breakpoints_.clear();
  for (const auto& list : terms_) {
    for (const auto& term : list) {
      const auto& b = term.baseline.breakpoints();
      breakpoints_.insert(breakpoints_.end(), b.begin(), b.end());
    }
  }
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

std::size_t IntensityModel::component_index(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidInput("unknown component '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t IntensityModel::parameter_index(const std::string& name) const {
  const auto it = std::find_if(params_.begin(), params_.end(),
                               [&](const Parameter& q) { return q.name == name; });
  if (it == params_.end()) throw InvalidInput("unknown parameter '" + name + "'");
  return static_cast<std::size_t>(it - params_.begin());
}

IntensityModel IntensityModel::with_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_.size()) throw InvalidInput("theta size mismatch");
  IntensityModel m = *this;
  m.theta_ = theta;
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    m.natural_[i] = to_natural(params_[static_cast<std::size_t>(i)].scale, theta[i]);
  }
  return m;
}

IntensityModel IntensityModel::with_natural(const Eigen::VectorXd& natural) const {
  if (natural.size() != theta_.size()) throw InvalidInput("parameter vector size mismatch");
  Eigen::VectorXd theta(natural.size());
  for (Eigen::Index i = 0; i < natural.size(); ++i) {
    theta[i] = to_unconstrained(params_[static_cast<std::size_t>(i)].scale, natural[i]);
  }
  IntensityModel m = with_theta(theta);
  m.natural_ = natural;  // avoid exp(log(x)) round-off
  return m;
}

IntensityModel IntensityModel::with_covariates(const Eigen::VectorXd& z) const {
  if (static_cast<std::size_t>(z.size()) != covariate_names_.size()) {
    throw InvalidInput("covariate vector size mismatch");
  }
  IntensityModel m = *this;
  m.z_ = z;
  return m;
}

IntensityModel IntensityModel::with_death_component(std::optional<std::size_t> d) const {
  if (d && *d >= components()) throw InvalidInput("death component out of range");
  IntensityModel m = *this;
  m.death_ = d;
  return m;
}

IntensityModel IntensityModel::with_tolerance(const quad::Tolerance& tol) const {
  IntensityModel m = *this;
  m.tol_ = tol;
  return m;
}

bool IntensityModel::vanishes_after(std::size_t j, std::size_t d) const {
  if (j == d) return true;
  for (const auto& term : terms_.at(j)) {
    const auto& req = term.gate.require;
    const bool gated = std::any_of(req.begin(), req.end(), [&](const auto& r) {
      return r.first == d && !r.second;
    });
    if (!gated) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool gate_open(const Gate& gate, double t, std::span<const double> T) {
  for (const auto& [l, jumped] : gate.require) {
    if ((T[l] < t) != jumped) return false;
  }
  return true;
}

double effect_exponent(const IntensityModel& model, const Term& term, double t,
                       std::span<const double> T) {
  double x = 0.0;
  const auto& nat = model.natural();
  for (const auto& e : term.effects) {
    const double c = nat[static_cast<Eigen::Index>(e.parameter)];
    switch (e.kind) {
      case Effect::Kind::constant:
        x += c;
        break;
      case Effect::Kind::indicator: {
        bool all = true;
        for (std::size_t l : e.components) all = all && T[l] < t;
        if (all) x += c;
        break;
      }
      case Effect::Kind::duration: {
        const std::size_t l = e.components.front();
        if (T[l] < t) x += c * T[l];
        break;
      }
      case Effect::Kind::covariate:
        x += c * model.covariates()[static_cast<Eigen::Index>(e.covariate)];
        break;
    }
  }
  return x;
}

std::span<const double> natural_span(const IntensityModel& model) {
  return {model.natural().data(), static_cast<std::size_t>(model.natural().size())};
}

void check_component(const IntensityModel& model, std::size_t j, std::size_t history_size) {
  if (j >= model.components()) throw InvalidInput("component index out of range");
  if (history_size != model.components()) {
    throw InvalidInput("history length does not match the component count");
  }
}

}  // namespace

double intensity(const IntensityModel& model, std::size_t j, double t,
                 std::span<const double> jump_times) {
  check_component(model, j, jump_times.size());
  if (jump_times[j] < t) return 0.0;
  const auto nat = natural_span(model);
  double rate = 0.0;
  for (const auto& term : model.terms(j)) {
    if (!gate_open(term.gate, t, jump_times)) continue;
    const double base = term.baseline.rate(t, nat);
    if (base == 0.0) continue;
    const double x = effect_exponent(model, term, t, jump_times);
    rate += x == 0.0 ? base : base * std::exp(x);
  }
  return rate;
}

double intensity(const IntensityModel& model, std::size_t j, double t,
                 const JumpHistory& history) {
  const auto T = history.jump_times();
  return intensity(model, j, t, T);
}

double cumulative_intensity(const IntensityModel& model, std::size_t j, double t0, double t1,
                            std::span<const double> jump_times) {
  check_component(model, j, jump_times.size());
  if (t0 < 0.0 || t1 < t0) throw InvalidInput("cumulative_intensity requires 0 <= t0 <= t1");
  const double upper = std::min(t1, jump_times[j]);
  if (!(upper > t0)) return 0.0;

  const std::size_t p = jump_times.size();
  std::vector<double> heap_cuts;
  std::array<double, 18> local_cuts{};
  double* cuts = local_cuts.data();
  if (p + 2 > local_cuts.size()) {
    heap_cuts.resize(p + 2);
    cuts = heap_cuts.data();
  }
  std::size_t n = 0;
  cuts[n++] = t0;
  for (std::size_t l = 0; l < p; ++l) {
    if (l != j && jump_times[l] > t0 && jump_times[l] < upper) cuts[n++] = jump_times[l];
  }
  std::sort(cuts + 1, cuts + n);
  cuts[n++] = upper;

  const auto nat = natural_span(model);
  double sum = 0.0;
  for (std::size_t s = 0; s + 1 < n; ++s) {
    const double u0 = cuts[s];
    const double u1 = cuts[s + 1];
    if (!(u1 > u0)) continue;
    const double mid = 0.5 * (u0 + u1);
    for (const auto& term : model.terms(j)) {
      if (!gate_open(term.gate, mid, jump_times)) continue;
      const double x = effect_exponent(model, term, mid, jump_times);
      const double area = term.baseline.cumulative(u0, u1, nat, model.tolerance());
      sum += x == 0.0 ? area : area * std::exp(x);
    }
  }
  return sum;
}

double cumulative_intensity(const IntensityModel& model, std::size_t j, double t0, double t1,
                            const JumpHistory& history) {
  const auto T = history.jump_times();
  return cumulative_intensity(model, j, t0, t1, T);
}

double total_cumulative_intensity(const IntensityModel& model, double t0, double t1,
                                  std::span<const double> jump_times) {
  double sum = 0.0;
  for (std::size_t j = 0; j < model.components(); ++j) {
    sum += cumulative_intensity(model, j, t0, t1, jump_times);
  }
  return sum;
}

std::size_t encode_state(std::span<const int> counts, bool compact) {
  const std::size_t p = counts.size();
  if (p == 0 || p > 62) throw InvalidInput("encode_state: unsupported component count");
  std::size_t w = 0;
  for (std::size_t j = 0; j < p; ++j) {
    if (counts[j] != 0 && counts[j] != 1) {
      throw InvalidInput("encode_state: counts must be 0 or 1");
    }
    w |= static_cast<std::size_t>(counts[j]) << j;
  }
  if (compact) w = std::min(w, std::size_t{1} << (p - 1));
  return w;
}

// ---------------------------------------------------------------------------
// MarkovSpec

MarkovSpec::MarkovSpec(std::size_t states, std::vector<std::string> component_names, bool compact,
                       std::vector<Parameter> parameters, std::vector<Transition> transitions,
                       Eigen::VectorXd theta)
    : states_(states),
      names_(std::move(component_names)),
      compact_(compact),
      params_(std::move(parameters)),
      transitions_(std::move(transitions)),
      theta_(std::move(theta)) {
  if (states_ < 2) throw InvalidInput("Markov spec needs at least two states");
  if (static_cast<std::size_t>(theta_.size()) != params_.size()) {
    throw InvalidInput("theta size does not match the parameter list");
  }
  for (const auto& tr : transitions_) {
    if (tr.from >= states_ || tr.to >= states_ || tr.from == tr.to) {
      throw InvalidInput("transition endpoints out of range");
    }
    for (std::size_t i : tr.baseline.parameters()) {
      if (i >= params_.size()) throw InvalidInput("transition references an unknown parameter");
    }
    for (std::size_t i : tr.log_multipliers) {
      if (i >= params_.size()) throw InvalidInput("transition references an unknown parameter");
    }
  }
  natural_.resize(theta_.size());
  for (Eigen::Index i = 0; i < theta_.size(); ++i) {
    natural_[i] = to_natural(params_[static_cast<std::size_t>(i)].scale, theta_[i]);
  }
}

MarkovSpec MarkovSpec::with_theta(const Eigen::VectorXd& theta) const {
  return MarkovSpec(states_, names_, compact_, params_, transitions_, theta);
}

double MarkovSpec::alpha(std::size_t h, std::size_t j, double t) const {
  const std::span<const double> nat(natural_.data(), static_cast<std::size_t>(natural_.size()));
  double a = 0.0;
  for (const auto& tr : transitions_) {
    if (tr.from != h || tr.to != j) continue;
    double x = 0.0;
    for (std::size_t i : tr.log_multipliers) x += nat[i];
    a += tr.baseline.rate(t, nat) * std::exp(x);
  }
  return a;
}

Eigen::MatrixXd MarkovSpec::generator(double t) const {
  const auto K = static_cast<Eigen::Index>(states_);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(K, K);
  const std::span<const double> nat(natural_.data(), static_cast<std::size_t>(natural_.size()));
  for (const auto& tr : transitions_) {
    double x = 0.0;
    for (std::size_t i : tr.log_multipliers) x += nat[i];
    A(static_cast<Eigen::Index>(tr.from), static_cast<Eigen::Index>(tr.to)) +=
        tr.baseline.rate(t, nat) * std::exp(x);
  }
  for (Eigen::Index h = 0; h < K; ++h) A(h, h) = -(A.row(h).sum() - A(h, h));
  return A;
}

std::vector<double> MarkovSpec::breakpoints() const {
  std::vector<double> out;
  for (const auto& tr : transitions_) {
    const auto& b = tr.baseline.breakpoints();
    out.insert(out.end(), b.begin(), b.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool MarkovSpec::homogeneous() const {
  return std::all_of(transitions_.begin(), transitions_.end(), [](const Transition& tr) {
    return tr.baseline.family() == Baseline::Family::constant;
  });
}

bool MarkovSpec::reachable(std::size_t from, std::size_t to) const {
  if (from == to) return true;
  std::vector<bool> seen(states_, false);
  std::queue<std::size_t> q;
  q.push(from);
  seen[from] = true;
  while (!q.empty()) {
    const std::size_t h = q.front();
    q.pop();
    for (const auto& tr : transitions_) {
      if (tr.from != h || seen[tr.to]) continue;
      if (tr.to == to) return true;
      seen[tr.to] = true;
      q.push(tr.to);
    }
  }
  return false;
}

namespace {

bool has_cycle(const MarkovSpec& spec) {
  // Kahn's algorithm on the declared transition graph.
  std::vector<std::size_t> indegree(spec.states(), 0);
  for (const auto& tr : spec.transitions()) ++indegree[tr.to];
  std::queue<std::size_t> q;
  for (std::size_t h = 0; h < spec.states(); ++h) {
    if (indegree[h] == 0) q.push(h);
  }
  std::size_t visited = 0;
  while (!q.empty()) {
    const std::size_t h = q.front();
    q.pop();
    ++visited;
    for (const auto& tr : spec.transitions()) {
      if (tr.from == h && --indegree[tr.to] == 0) q.push(tr.to);
    }
  }
  return visited != spec.states();
}

}  // namespace

IntensityModel markov_to_ojc(const MarkovSpec& spec) {
  const std::size_t p = spec.components();
  if (p == 0 || p > 20) throw LayoutError("markov_to_ojc: unsupported component count");
  const std::size_t full = std::size_t{1} << p;
  const std::size_t dead = std::size_t{1} << (p - 1);
  const std::size_t expected = spec.compact() ? dead + 1 : full;
  if (spec.states() != expected) {
    std::ostringstream msg;
    msg << "markov_to_ojc: " << spec.states() << " states do not match a base-2 layout over "
        << p << " components (expected " << expected << ")";
    throw LayoutError(msg.str());
  }
  if (has_cycle(spec)) throw UnsupportedModel("markov_to_ojc: transition graph is cyclic");

  std::vector<std::vector<Term>> terms(p);
  for (const auto& tr : spec.transitions()) {
    std::size_t from_w = tr.from;
    std::size_t to_w = tr.to;
    if (spec.compact()) {
      if (tr.from == dead) throw UnsupportedModel("markov_to_ojc: absorbing state has exits");
      if (tr.to == dead) to_w = tr.from | dead;
    }
    const std::size_t flipped = from_w ^ to_w;
    if ((from_w & flipped) != 0) {
      throw UnsupportedModel("markov_to_ojc: transition resets a counter (reversible model)");
    }
    if (std::popcount(flipped) != 1) {
      throw LayoutError("markov_to_ojc: transition must flip exactly one counter");
    }
    const auto c = static_cast<std::size_t>(std::countr_zero(flipped));
    Term term;
    term.baseline = tr.baseline;
    for (std::size_t l = 0; l < p; ++l) {
      if (l == c) continue;
      term.gate.require.emplace_back(l, ((from_w >> l) & 1U) != 0);
    }
    for (std::size_t i : tr.log_multipliers) {
      term.effects.push_back(Effect{Effect::Kind::constant, i, {}, 0});
    }
    terms[c].push_back(std::move(term));
  }
  IntensityModel model(spec.component_names(), spec.parameters(), std::move(terms), spec.theta());
  if (spec.compact()) model = model.with_death_component(p - 1);
  return model;
}

}  // namespace gcmp
