#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gcmp/intensity.hpp"
#include "gcmp/likelihood.hpp"

namespace gcmp {

/// Counter-based generator: output i of stream (seed, stream) is a fixed
/// mixing function of (key, i), so streams are independent of thread layout.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double exponential();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Jump time per component; no_jump when the component did not jump in [0, C].
struct SimulatedPath {
  std::vector<double> jump_times;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

inline constexpr double hazard_inversion_tolerance = 1e-10;

SimulatedPath simulate_path(const IntensityModel& model, double horizon, std::uint64_t seed,
                            std::uint64_t stream = 0);

/// What the scheme records of a path (death censoring is applied first).
std::vector<RawComponent> observe(const SimulatedPath& path, const ObservationScheme& scheme);
/// The scheme the observation was actually made under (after death censoring).
ObservationScheme effective_scheme(const SimulatedPath& path, const ObservationScheme& scheme);
PseudoAtom coarsen(const SimulatedPath& path, const ObservationScheme& scheme);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t matches = 0;
  std::size_t paths = 0;
};

/// Monte Carlo probability of an atom (density when it has exact jump times,
/// matched within +-bin_width/2 and divided by bin_width per exact jump).
/// With zero matches the standard error is set to 1/n so that 3 SE is the
/// one-sided 95% bound.
McEstimate mc_check(const IntensityModel& model, const ObservationScheme& scheme,
                    const PseudoAtom& atom, std::size_t n_paths, std::uint64_t seed,
                    double bin_width);
/// Same, for many atoms from one set of simulated paths.
std::vector<McEstimate> mc_check(const IntensityModel& model, const ObservationScheme& scheme,
                                 std::span<const PseudoAtom> atoms, std::size_t n_paths,
                                 std::uint64_t seed, double bin_width);

bool atom_matches(const PseudoAtom& observed, const PseudoAtom& target, double bin_width);

}  // namespace gcmp
