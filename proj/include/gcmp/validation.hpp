#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gcmp/intensity.hpp"
#include "gcmp/likelihood.hpp"

namespace gcmp::validation {

struct SuiteResult {
  std::string name;
  std::size_t cells = 0;
  std::size_t failures = 0;
  // Largest relative error, or for Monte Carlo the largest |z| score.
  double max_discrepancy = 0.0;
  bool passed = false;
  std::string detail;
};

/// exp(loglik_atom) against the transition-probability likelihoods of the
/// illness-death model under visit-observed illness and exact death, for
/// random constant and Weibull models. Four atoms per model.
SuiteResult heuristic_equivalence(std::size_t models, std::uint64_t seed, double rel_tol = 1e-6);

/// Generic engine against the closed-form dementia reference on the four
/// atom shapes per parameter draw.
SuiteResult dementia_crosscheck(std::size_t draws, std::uint64_t seed, double rel_tol = 1e-6);

struct McConfig {
  std::string name;
  IntensityModel model;
  ObservationScheme scheme;
  double bin_width = 0.05;
};

/// Built-in configurations: illness-death under panel, hybrid and fully
/// panel-observed schemes, and the non-Markov dementia model.
std::vector<McConfig> mc_configs();

/// Cells are chosen from a pilot sample (seed + 1) as the most frequent
/// binned atoms; each is then compared with n_paths fresh paths.
/// Passes when at least `coverage` of the cells lie within 3 SE.
SuiteResult mc_agreement(const std::vector<McConfig>& configs, std::size_t n_paths,
                         std::uint64_t seed, std::size_t cells_per_config = 30,
                         double coverage = 0.99);

}  // namespace gcmp::validation
