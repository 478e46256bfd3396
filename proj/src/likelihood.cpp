#include "gcmp/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gcmp/error.hpp"

namespace gcmp {

void validate(const ObservationScheme& scheme) {
  const double C = scheme.horizon;
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidInput("scheme horizon must be positive");
  if (scheme.death_component && *scheme.death_component >= scheme.components.size()) {
    throw InvalidInput("scheme death component out of range");
  }
  for (std::size_t j = 0; j < scheme.components.size(); ++j) {
    const auto& c = scheme.components[j];
    double last_end = 0.0;
    for (std::size_t w = 0; w < c.windows.size(); ++w) {
      const auto& win = c.windows[w];
      if (!(win.begin >= 0.0) || !(win.end > win.begin) || win.end > C) {
        throw InvalidInput("component " + std::to_string(j) + ": window outside [0, horizon]");
      }
      if (w > 0 && win.begin < last_end) {
        throw InvalidInput("component " + std::to_string(j) + ": windows overlap or are unsorted");
      }
      last_end = win.end;
    }
    for (std::size_t v = 0; v < c.visits.size(); ++v) {
      if (!(c.visits[v] > 0.0) || c.visits[v] > C) {
        throw InvalidInput("component " + std::to_string(j) + ": visit outside (0, horizon]");
      }
      if (v > 0 && !(c.visits[v] > c.visits[v - 1])) {
        throw InvalidInput("component " + std::to_string(j) + ": visits not strictly increasing");
      }
    }
  }
}

std::vector<Window> effective_windows(const ComponentSchedule& schedule, double horizon) {
  double limit = horizon;
  if (schedule.retrospective) limit = schedule.visits.empty() ? 0.0 : schedule.visits.back();
  std::vector<Window> out;
  for (const auto& w : schedule.windows) {
    const double end = std::min(w.end, limit);
    if (end > w.begin) out.push_back({w.begin, end});
  }
  return out;
}

namespace {

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

}  // namespace

std::string describe(const PseudoAtom& atom) {
  std::string out = "[";
  for (std::size_t j = 0; j < atom.components.size(); ++j) {
    if (j > 0) out += ", ";
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, Exact>) {
            out += "Exact(" + fmt(c.time) + (c.observed ? ")" : ", censored)");
          } else if constexpr (std::is_same_v<T, Interval>) {
            out += "Interval(" + fmt(c.lower) + ", " + fmt(c.upper) + "]";
          } else {
            out += "SurvivedBeyond(" + fmt(c.last) + ")";
          }
        },
        atom.components[j]);
  }
  return out + "]";
}

PseudoAtom classify_observation(const ObservationScheme& scheme,
                                std::span<const RawComponent> raw) {
  validate(scheme);
  const double C = scheme.horizon;
  if (raw.size() != scheme.components.size()) {
    throw InvalidInput("raw observation does not match the scheme's component count");
  }
  PseudoAtom atom;
  atom.components.reserve(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const auto& sched = scheme.components[j];
    const auto windows = effective_windows(sched, C);
    const auto& r = raw[j];
    const std::string who = "component " + std::to_string(j);
    if (r.jump_time && r.first_positive) {
      throw InconsistentObservation(who + ": both an exact time and a first positive epoch");
    }
    if (r.jump_time) {
      const double t = *r.jump_time;
      const bool inside = std::any_of(windows.begin(), windows.end(), [&](const Window& w) {
        return (t >= w.begin && t < w.end) || (t == C && w.end == C);
      });
      if (!inside) {
        throw InconsistentObservation(who + ": exact time " + fmt(t) +
                                      " lies outside every observation window");
      }
      atom.components.emplace_back(Exact{t, true});
      continue;
    }
    if (r.first_positive) {
      const double e = *r.first_positive;
      const bool is_visit = std::binary_search(sched.visits.begin(), sched.visits.end(), e);
      const bool is_window_start = std::any_of(windows.begin(), windows.end(), [&](const Window& w) {
        return w.begin == e && e > 0.0;
      });
      if (!is_visit && !is_window_start) {
        throw InconsistentObservation(who + ": first positive time " + fmt(e) +
                                      " is not a response epoch");
      }
      for (const auto& w : windows) {
        if (w.begin < e && e < w.end) {
          throw InconsistentObservation(who + ": jump inside an observation window has no time");
        }
      }
      double prev = 0.0;
      for (double v : sched.visits) {
        if (v < e) prev = std::max(prev, v);
      }
      for (const auto& w : windows) {
        if (w.end <= e) prev = std::max(prev, w.end);
      }
      atom.components.emplace_back(Interval{prev, e});
      continue;
    }
    const bool covers_horizon = std::any_of(windows.begin(), windows.end(),
                                            [&](const Window& w) { return w.end >= C; });
    if (covers_horizon) {
      atom.components.emplace_back(Exact{C, false});
      continue;
    }
    double last = 0.0;
    for (double v : sched.visits) last = std::max(last, v);
    for (const auto& w : windows) last = std::max(last, w.end);
    atom.components.emplace_back(SurvivedBeyond{last});
  }
  return atom;
}

ObservationScheme preprocess_death_censoring(const ObservationScheme& scheme, double death_time,
                                             bool death_observed) {
  if (!scheme.death_component) {
    throw InvalidInput("preprocess_death_censoring: scheme declares no death component");
  }
  validate(scheme);
  const double C = scheme.horizon;
  const double cut = death_observed ? death_time : C;
  if (death_observed && (!(death_time >= 0.0) || death_time > C)) {
    throw InvalidInput("preprocess_death_censoring: death time outside [0, horizon]");
  }
  ObservationScheme out = scheme;
  for (std::size_t j = 0; j < out.components.size(); ++j) {
    if (j == *scheme.death_component) continue;
    auto& c = out.components[j];
    std::erase_if(c.visits, [&](double v) { return death_observed ? v >= cut : v > C; });
    std::vector<Window> kept;
    for (const auto& w : c.windows) {
      const double end = std::min(w.end, cut);
      if (end > w.begin) kept.push_back({w.begin, end});
    }
    c.windows = std::move(kept);
  }
  return out;
}

double log_f_theta(const IntensityModel& model, std::span<const double> s, double horizon) {
  const std::size_t p = model.components();
  if (s.size() != p) throw InvalidInput("f_theta: argument length does not match the model");
  double acc = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (!(s[j] >= 0.0) || s[j] > horizon) throw InvalidInput("f_theta: argument outside (0, C]");
    if (s[j] < horizon) {
      const double rate = intensity(model, j, s[j], s);
      if (!(rate > 0.0)) return minus_infinity;
      acc += std::log(rate);
    }
  }
  for (std::size_t j = 0; j < p; ++j) acc -= cumulative_intensity(model, j, 0.0, horizon, s);
  return acc;
}

double f_theta(const IntensityModel& model, std::span<const double> s, double horizon) {
  const double lf = log_f_theta(model, s, horizon);
  return lf == minus_infinity ? 0.0 : std::exp(lf);
}

double loglik_continuous(const IntensityModel& model, const JumpHistory& history) {
  if (history.times.size() != model.components()) {
    throw InvalidInput("history length does not match the model");
  }
  const auto s = history.density_arguments();
  return log_f_theta(model, s, history.horizon);
}

namespace {

struct CoarsenedDim {
  std::size_t component;
  double lower;
  double upper;
};

// Weibull rates with shape b < 1 blow up like t^(b-1) at the origin; the
// substitution t ~ u^(1/b) makes the leading term of the integrand smooth.
double singular_power(const IntensityModel& model, std::size_t j) {
  double shape = 1.0;
  for (const auto& term : model.terms(j)) {
    if (term.baseline.family() != Baseline::Family::weibull) continue;
    shape = std::min(shape, model.natural()[static_cast<Eigen::Index>(term.baseline.parameters()[1])]);
  }
  return shape < 1.0 ? 1.0 / shape : 1.0;
}

}  // namespace

double loglik_atom(const IntensityModel& model, const PseudoAtom& atom, double horizon,
                   const LikelihoodOptions& options) {
  const std::size_t p = model.components();
  const double C = horizon;
  if (atom.components.size() != p) throw InvalidInput("atom does not match the model");
  if (!(C > 0.0)) throw InvalidInput("horizon must be positive");

  std::vector<double> base(p, C);
  std::vector<CoarsenedDim> intervals;
  std::vector<CoarsenedDim> survived;
  std::vector<double> cuts;
  for (double b : model.breakpoints()) {
    if (b > 0.0 && b < C) cuts.push_back(b);
  }
  for (std::size_t j = 0; j < p; ++j) {
    const auto& comp = atom.components[j];
    if (const auto* e = std::get_if<Exact>(&comp)) {
      if (!(e->time >= 0.0) || e->time > C) throw InvalidInput("exact time outside [0, C]");
      base[j] = e->observed ? e->time : C;
      if (base[j] < C) cuts.push_back(base[j]);
    } else if (const auto* iv = std::get_if<Interval>(&comp)) {
      if (!(iv->lower >= 0.0) || !(iv->upper > iv->lower) || iv->upper > C) {
        throw InvalidInput("interval bounds must satisfy 0 <= a < b <= C");
      }
      intervals.push_back({j, iv->lower, iv->upper});
    } else {
      const auto& sb = std::get<SurvivedBeyond>(comp);
      if (!(sb.last >= 0.0) || sb.last > C) throw InvalidInput("survival bound outside [0, C]");
      survived.push_back({j, sb.last, C});
    }
  }
  if (intervals.size() + survived.size() > quad::max_nested_dimensions) {
    throw UnsupportedAtom("loglik_atom: more than 4 coarsened components in " + describe(atom));
  }

  double cap = C;
  if (options.tighten_at_death && model.death_component()) {
    const std::size_t d = *model.death_component();
    const auto* e = std::get_if<Exact>(&atom.components[d]);
    if (e && e->observed && e->time < C) {
      bool vanish = true;
      for (const auto& c : intervals) vanish = vanish && model.vanishes_after(c.component, d);
      for (const auto& c : survived) vanish = vanish && model.vanishes_after(c.component, d);
      if (vanish) cap = e->time;
    }
  }

  const std::size_t n_corner = survived.size();
  double total = 0.0;
  try {
    for (std::size_t mask = 0; mask < (std::size_t{1} << n_corner); ++mask) {
      std::vector<double> s = base;
      std::vector<CoarsenedDim> dims;
      for (const auto& c : intervals) dims.push_back({c.component, c.lower, std::min(c.upper, cap)});
      for (std::size_t i = 0; i < n_corner; ++i) {
        if ((mask >> i) & 1U) {
          s[survived[i].component] = C;
        } else {
          dims.push_back({survived[i].component, survived[i].lower, cap});
        }
      }
      if (dims.empty()) {
        total += f_theta(model, s, C);
        continue;
      }
      const bool empty = std::any_of(dims.begin(), dims.end(),
                                     [](const CoarsenedDim& c) { return !(c.upper > c.lower); });
      if (empty) continue;

      quad::IntegrationRegion region;
      for (const auto& c : dims) {
        const double p_low = c.lower == 0.0 ? singular_power(model, c.component) : 1.0;
        region.dims.push_back({c.lower, c.upper, cuts, p_low});
      }
      auto integrand = [&](std::span<const double> x) {
        for (std::size_t i = 0; i < dims.size(); ++i) s[dims[i].component] = x[i];
        const double lf = log_f_theta(model, s, C);
        return lf == minus_infinity ? 0.0 : std::exp(lf);
      };
      total += quad::integrate_nested(integrand, region, options.tol).value;
    }
  } catch (const ToleranceFailure& e) {
    throw ToleranceFailure(std::string(e.what()) + " for atom " + describe(atom),
                           e.achieved_error());
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " for atom " + describe(atom), e.abscissa());
  }
  return total > 0.0 ? std::log(total) : minus_infinity;
}

double conditional_loglik(const IntensityModel& model, const PseudoAtom& atom, double horizon,
                          double entry, const LikelihoodOptions& options) {
  if (entry == 0.0) return loglik_atom(model, atom, horizon, options);
  if (!(entry > 0.0) || entry >= horizon) throw InvalidInput("entry time outside [0, C)");
  PseudoAtom clipped = atom;
  for (auto& comp : clipped.components) {
    if (auto* e = std::get_if<Exact>(&comp)) {
      if (e->observed && e->time <= entry) {
        throw InconsistentObservation("jump at or before the entry time");
      }
    } else if (auto* iv = std::get_if<Interval>(&comp)) {
      if (iv->upper <= entry) throw InconsistentObservation("interval ends before the entry time");
      iv->lower = std::max(iv->lower, entry);
    } else {
      auto& sb = std::get<SurvivedBeyond>(comp);
      sb.last = std::max(sb.last, entry);
    }
  }
  const double ll = loglik_atom(model, clipped, horizon, options);
  if (ll == minus_infinity) return ll;
  const std::vector<double> none(model.components(), no_jump);
  return ll + total_cumulative_intensity(model, 0.0, entry, none);
}

}  // namespace gcmp
