#include "gcmp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcmp/error.hpp"

namespace gcmp {

namespace {

constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + golden) + (stream + 1) * 0xd1b54a32d192ed03ULL)) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * golden);
}

double CounterRng::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::exponential() { return -std::log(uniform()); }

namespace {

// True when every active term of every still-at-risk component has a constant
// baseline on (lo, hi].
bool constant_total_rate(const IntensityModel& model, double lo, double hi,
                         std::span<const double> T) {
  const std::span<const double> nat(model.natural().data(),
                                    static_cast<std::size_t>(model.natural().size()));
  for (std::size_t j = 0; j < model.components(); ++j) {
    if (T[j] < hi) continue;
    for (const auto& term : model.terms(j)) {
      if (!term.baseline.constant_between(lo, hi, nat)) return false;
    }
  }
  return true;
}

double invert_hazard(const IntensityModel& model, double lo, double hi, double target,
                     std::span<const double> T) {
  if (constant_total_rate(model, lo, hi, T)) {
    double rate = 0.0;
    const double mid = 0.5 * (lo + hi);
    for (std::size_t j = 0; j < model.components(); ++j) rate += intensity(model, j, mid, T);
    if (rate > 0.0) return std::min(hi, lo + target / rate);
  }
  double a = lo;
  double b = hi;
  for (int it = 0; it < 200 && b - a > hazard_inversion_tolerance; ++it) {
    const double m = 0.5 * (a + b);
    const double H = total_cumulative_intensity(model, lo, m, T);
    if (!std::isfinite(H)) {
      std::ostringstream msg;
      msg << "simulate_path: cumulative hazard not finite on (" << lo << ", " << m << "]";
      throw NumericError(msg.str());
    }
    (H < target ? a : b) = m;
  }
  if (b - a > hazard_inversion_tolerance) {
    std::ostringstream msg;
    msg << "simulate_path: hazard inversion did not converge on (" << lo << ", " << hi << "]";
    throw NumericError(msg.str());
  }
  return 0.5 * (a + b);
}

}  // namespace

SimulatedPath simulate_path(const IntensityModel& model, double horizon, std::uint64_t seed,
                            std::uint64_t stream) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidInput("simulate_path: horizon must be positive");
  }
  const std::size_t p = model.components();
  SimulatedPath path{std::vector<double>(p, no_jump), seed, stream};
  auto& T = path.jump_times;
  CounterRng rng(seed, stream);
  const auto& bps = model.breakpoints();

  double t = 0.0;
  std::size_t jumped = 0;
  while (jumped < p) {
    double remaining = rng.exponential();
    double lo = t;
    double tau = no_jump;
    auto next_bp = std::upper_bound(bps.begin(), bps.end(), lo);
    while (lo < horizon) {
      const double hi = (next_bp != bps.end() && *next_bp < horizon) ? *next_bp : horizon;
      const double H = total_cumulative_intensity(model, lo, hi, T);
      if (H >= remaining) {
        tau = invert_hazard(model, lo, hi, remaining, T);
        break;
      }
      remaining -= H;
      lo = hi;
      if (next_bp != bps.end()) ++next_bp;
    }
    if (tau == no_jump) break;

    std::vector<double> rates(p, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      rates[j] = intensity(model, j, tau, T);
      total += rates[j];
    }
    if (!(total > 0.0)) {
      std::ostringstream msg;
      msg << "simulate_path: zero total intensity at drawn time " << tau;
      throw NumericError(msg.str());
    }
    double u = rng.uniform() * total;
    std::size_t chosen = p;
    for (std::size_t j = 0; j < p; ++j) {
      if (rates[j] <= 0.0) continue;
      chosen = j;
      if (u < rates[j]) break;
      u -= rates[j];
    }
    T[chosen] = tau;
    t = tau;
    ++jumped;
  }
  return path;
}

ObservationScheme effective_scheme(const SimulatedPath& path, const ObservationScheme& scheme) {
  if (!scheme.death_component) return scheme;
  const double C = scheme.horizon;
  const double Td = path.jump_times.at(*scheme.death_component);
  const bool died = Td <= C;
  return preprocess_death_censoring(scheme, died ? Td : C, died);
}

namespace {

std::vector<RawComponent> observe_under(const SimulatedPath& path, const ObservationScheme& eff) {
  const double C = eff.horizon;
  if (path.jump_times.size() != eff.components.size()) {
    throw InvalidInput("path does not match the scheme's component count");
  }
  std::vector<RawComponent> raw(path.jump_times.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const double T = path.jump_times[j];
    if (!(T <= C)) continue;
    const auto windows = effective_windows(eff.components[j], C);
    const bool in_window = std::any_of(windows.begin(), windows.end(), [&](const Window& w) {
      return T >= w.begin && T < w.end;
    });
    if (in_window) {
      raw[j].jump_time = T;
      continue;
    }
    double first = no_jump;
    const auto& visits = eff.components[j].visits;
    const auto it = std::lower_bound(visits.begin(), visits.end(), T);
    if (it != visits.end()) first = *it;
    for (const auto& w : windows) {
      if (w.begin >= T && w.begin > 0.0) first = std::min(first, w.begin);
    }
    if (first != no_jump) raw[j].first_positive = first;
  }
  return raw;
}

}  // namespace

std::vector<RawComponent> observe(const SimulatedPath& path, const ObservationScheme& scheme) {
  return observe_under(path, effective_scheme(path, scheme));
}

PseudoAtom coarsen(const SimulatedPath& path, const ObservationScheme& scheme) {
  const auto eff = effective_scheme(path, scheme);
  const auto raw = observe_under(path, eff);
  return classify_observation(eff, raw);
}

bool atom_matches(const PseudoAtom& observed, const PseudoAtom& target, double bin_width) {
  constexpr double eps = 1e-9;
  if (observed.components.size() != target.components.size()) return false;
  for (std::size_t j = 0; j < target.components.size(); ++j) {
    const auto& o = observed.components[j];
    const auto& t = target.components[j];
    if (o.index() != t.index()) return false;
    if (const auto* te = std::get_if<Exact>(&t)) {
      const auto& oe = std::get<Exact>(o);
      if (oe.observed != te->observed) return false;
      const double window = te->observed ? 0.5 * bin_width : eps;
      if (std::abs(oe.time - te->time) > window) return false;
    } else if (const auto* ti = std::get_if<Interval>(&t)) {
      const auto& oi = std::get<Interval>(o);
      if (std::abs(oi.lower - ti->lower) > eps || std::abs(oi.upper - ti->upper) > eps) {
        return false;
      }
    } else {
      const auto& os = std::get<SurvivedBeyond>(o);
      if (std::abs(os.last - std::get<SurvivedBeyond>(t).last) > eps) return false;
    }
  }
  return true;
}

std::vector<McEstimate> mc_check(const IntensityModel& model, const ObservationScheme& scheme,
                                 std::span<const PseudoAtom> atoms, std::size_t n_paths,
                                 std::uint64_t seed, double bin_width) {
  if (n_paths == 0) throw InvalidInput("mc_check: need at least one path");
  if (!(bin_width > 0.0)) throw InvalidInput("mc_check: bin width must be positive");
  validate(scheme);
  std::vector<std::size_t> counts(atoms.size(), 0);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const auto path = simulate_path(model, scheme.horizon, seed, i);
    const auto atom = coarsen(path, scheme);
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (atom_matches(atom, atoms[a], bin_width)) ++counts[a];
    }
  }
  std::vector<McEstimate> out(atoms.size());
  const auto n = static_cast<double>(n_paths);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    int exact = 0;
    for (const auto& c : atoms[a].components) {
      if (const auto* e = std::get_if<Exact>(&c); e && e->observed) ++exact;
    }
    const double scale = std::pow(bin_width, exact);
    const double phat = static_cast<double>(counts[a]) / n;
    out[a].matches = counts[a];
    out[a].paths = n_paths;
    out[a].estimate = phat / scale;
    out[a].standard_error =
        counts[a] == 0 ? 1.0 / n / scale : std::sqrt(phat * (1.0 - phat) / n) / scale;
  }
  return out;
}

McEstimate mc_check(const IntensityModel& model, const ObservationScheme& scheme,
                    const PseudoAtom& atom, std::size_t n_paths, std::uint64_t seed,
                    double bin_width) {
  return mc_check(model, scheme, std::span<const PseudoAtom>(&atom, 1), n_paths, seed,
                  bin_width)
      .front();
}

}  // namespace gcmp
