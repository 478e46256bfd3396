#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "gcmp/intensity.hpp"

namespace gcmp {

/// P(s, t) with entries p_hj(s, t) = P(X_t = j | X_s = h).
using TransitionMatrix = Eigen::MatrixXd;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  // Homogeneous specs use the matrix exponential unless this is false.
  bool use_matrix_exponential = true;
  std::size_t max_steps = 1000000;
};

/// Solves dP/dt = P A(t), P(s, s) = I, with steps forced to stop at intensity
/// breakpoints.
TransitionMatrix transition_matrix(const MarkovSpec& spec, double s, double t,
                                   const OdeOptions& options = {});

/// Exactly observed path: state at `start`, then (time, new state) jumps, observed to `end`.
struct ContinuousPath {
  double start = 0.0;
  std::size_t initial_state = 0;
  std::vector<std::pair<double, std::size_t>> jumps;
  double end = 0.0;
};

/// States observed at increasing visit times.
struct PanelPath {
  std::vector<double> times;
  std::vector<std::size_t> states;
};

/// Illness-death record: illness status at visits v_0 < ... < v_m (healthy at
/// v_0), death time or censoring exactly observed.
struct IllnessDeathRecord {
  std::vector<double> visits;
  // Index l of the first visit at which the subject was seen ill (1 <= l <= m).
  std::optional<std::size_t> first_ill_visit;
  double follow_up = 0.0;
  bool died = false;
};

using HeuristicData = std::variant<ContinuousPath, PanelPath, IllnessDeathRecord>;

/// Classical transition-probability likelihoods for continuous, discrete and
/// mixed observation of a Markov model, conditional on the initial state.
double heuristic_loglik(const MarkovSpec& spec, const HeuristicData& data,
                        const OdeOptions& options = {});

}  // namespace gcmp
