#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gcmp/intensity.hpp"
#include "gcmp/quadrature.hpp"

namespace gcmp {

/// Log-likelihood of an impossible observation.
inline constexpr double minus_infinity = -std::numeric_limits<double>::infinity();

/// Half-open window [begin, end) of continuous observation.
struct Window {
  double begin = 0.0;
  double end = 0.0;
};

struct ComponentSchedule {
  std::vector<Window> windows;
  std::vector<double> visits;
  // Exact observation only up to the last visit (a jump time recalled at each visit).
  bool retrospective = false;
};

/// Deterministic response schedule per component on [0, horizon].
struct ObservationScheme {
  double horizon = 0.0;
  std::vector<ComponentSchedule> components;
  std::optional<std::size_t> death_component;
};

void validate(const ObservationScheme& scheme);

/// Windows after retrospective clipping, intersected with [0, horizon).
std::vector<Window> effective_windows(const ComponentSchedule& schedule, double horizon);

struct Exact {
  double time = 0.0;
  bool observed = false;
  bool operator==(const Exact&) const = default;
};

/// Jump known to lie in (lower, upper].
struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool operator==(const Interval&) const = default;
};

/// No jump seen up to `last`, nothing observed afterwards.
struct SurvivedBeyond {
  double last = 0.0;
  bool operator==(const SurvivedBeyond&) const = default;
};

using AtomComponent = std::variant<Exact, Interval, SurvivedBeyond>;

/// Per-component observation status: the pseudo-atom an observation falls in.
struct PseudoAtom {
  std::vector<AtomComponent> components;
  bool operator==(const PseudoAtom&) const = default;
};

std::string describe(const PseudoAtom& atom);

/// Raw per-component data: a reported exact time, or the first response epoch
/// at which the jump was seen, or neither.
struct RawComponent {
  std::optional<double> jump_time;
  std::optional<double> first_positive;
};

PseudoAtom classify_observation(const ObservationScheme& scheme,
                                std::span<const RawComponent> raw);

/// Deterministic scheme implied by a death at `death_time`: planned epochs at
/// or after death are dropped (kept up to the horizon when no death was seen).
ObservationScheme preprocess_death_censoring(const ObservationScheme& scheme, double death_time,
                                             bool death_observed);

struct LikelihoodOptions {
  quad::Tolerance tol;
  // Cut integration at an exactly observed death when the other intensities
  // vanish after it.
  bool tighten_at_death = true;
};

/// Density of a fully observed path: prod_{s_j < C} lambda_j(s_j) * exp(-Lambda(C)).
double f_theta(const IntensityModel& model, std::span<const double> s, double horizon);
double log_f_theta(const IntensityModel& model, std::span<const double> s, double horizon);

double loglik_continuous(const IntensityModel& model, const JumpHistory& history);

/// Log-likelihood of a pseudo-atom w.r.t. Lebesgue measure on exact times and
/// counting measure on coarsened cells (theta-free reference factors dropped).
double loglik_atom(const IntensityModel& model, const PseudoAtom& atom, double horizon,
                   const LikelihoodOptions& options = {});

/// loglik_atom conditioned on no jump in (0, entry].
double conditional_loglik(const IntensityModel& model, const PseudoAtom& atom, double horizon,
                          double entry, const LikelihoodOptions& options = {});

}  // namespace gcmp
