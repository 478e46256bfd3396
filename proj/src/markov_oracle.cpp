#include "gcmp/markov_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "gcmp/error.hpp"

namespace gcmp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

class Segment {
 public:
  Segment(const MarkovSpec& spec, double lo, double hi) : spec_(spec), lo_(lo), hi_(hi) {}

  // Generator on the open segment; the right end evaluates the left limit so
  // piecewise-constant rates never leak in from the next piece.
  Eigen::MatrixXd generator(double t) const {
    const double inside =
        t >= hi_ ? std::nextafter(hi_, lo_) : std::max(t, lo_);
    Eigen::MatrixXd A = spec_.generator(inside);
    if (!A.allFinite()) {
      throw NumericError("transition_matrix: intensity is not finite at t = " +
                         std::to_string(inside));
    }
    return A;
  }

 private:
  const MarkovSpec& spec_;
  double lo_;
  double hi_;
};

void integrate_segment(const MarkovSpec& spec, double lo, double hi, Eigen::MatrixXd& P,
                       const OdeOptions& opt, double& h, std::size_t& steps) {
  const Segment seg(spec, lo, hi);
  double t = lo;
  Eigen::MatrixXd k1 = P * seg.generator(t);
  while (t < hi) {
    if (++steps > opt.max_steps) throw StiffnessError("transition_matrix: step budget exhausted");
    const double min_step = 1e-14 * std::max(1.0, std::abs(t));
    if (h < min_step) throw StiffnessError("transition_matrix: step size underflow");
    const bool last = t + h >= hi;
    const double step = last ? hi - t : h;

    const Eigen::MatrixXd k2 = (P + step * a21 * k1) * seg.generator(t + c2 * step);
    const Eigen::MatrixXd k3 = (P + step * (a31 * k1 + a32 * k2)) * seg.generator(t + c3 * step);
    const Eigen::MatrixXd k4 =
        (P + step * (a41 * k1 + a42 * k2 + a43 * k3)) * seg.generator(t + c4 * step);
    const Eigen::MatrixXd k5 =
        (P + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)) * seg.generator(t + c5 * step);
    const Eigen::MatrixXd k6 =
        (P + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)) *
        seg.generator(t + step);
    const Eigen::MatrixXd next = P + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Eigen::MatrixXd k7 = next * seg.generator(t + step);
    const Eigen::MatrixXd err =
        step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double ratio = 0.0;
    for (Eigen::Index i = 0; i < P.size(); ++i) {
      const double scale =
          opt.abs_tol + opt.rel_tol * std::max(std::abs(P.data()[i]), std::abs(next.data()[i]));
      ratio = std::max(ratio, std::abs(err.data()[i]) / scale);
    }
    if (!std::isfinite(ratio)) throw StiffnessError("transition_matrix: non-finite step");
    if (ratio <= 1.0) {
      t = last ? hi : t + step;
      P = next;
      k1 = k7;
    }
    const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    if (ratio <= 1.0 && last) break;
    h = step * grow;
  }
}

}  // namespace

TransitionMatrix transition_matrix(const MarkovSpec& spec, double s, double t,
                                   const OdeOptions& options) {
  if (!(s >= 0.0) || t < s) throw InvalidInput("transition_matrix requires 0 <= s <= t");
  const auto K = static_cast<Eigen::Index>(spec.states());
  TransitionMatrix P = TransitionMatrix::Identity(K, K);
  if (t == s) return P;
  if (spec.homogeneous() && options.use_matrix_exponential) {
    const Eigen::MatrixXd A = spec.generator(s);
    return (A * (t - s)).exp();
  }
  std::vector<double> cuts{s};
  for (double b : spec.breakpoints()) {
    if (b > s && b < t) cuts.push_back(b);
  }
  cuts.push_back(t);
  double h = std::min(0.01, (t - s) / 8.0);
  std::size_t steps = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    h = std::min(h, cuts[i + 1] - cuts[i]);
    integrate_segment(spec, cuts[i], cuts[i + 1], P, options, h, steps);
  }
  return P;
}

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

bool declared(const MarkovSpec& spec, std::size_t from, std::size_t to) {
  const auto& trs = spec.transitions();
  return std::any_of(trs.begin(), trs.end(),
                     [&](const Transition& tr) { return tr.from == from && tr.to == to; });
}

double p(const MarkovSpec& spec, std::size_t h, std::size_t j, double s, double t,
         const OdeOptions& opt) {
  return transition_matrix(spec, s, t, opt)(static_cast<Eigen::Index>(h),
                                            static_cast<Eigen::Index>(j));
}

double continuous_loglik(const MarkovSpec& spec, const ContinuousPath& path,
                         const OdeOptions& opt) {
  if (path.initial_state >= spec.states()) throw InvalidInput("initial state out of range");
  double ll = 0.0;
  double last_t = path.start;
  std::size_t x = path.initial_state;
  for (const auto& [time, next] : path.jumps) {
    if (next >= spec.states()) throw InvalidInput("state out of range");
    if (!(time > last_t) || time > path.end) {
      throw InconsistentObservation("transition times must increase within the window");
    }
    if (!declared(spec, x, next)) {
      throw InconsistentObservation("observed transition is not allowed by the model");
    }
    ll += safe_log(p(spec, x, x, last_t, time, opt)) + safe_log(spec.alpha(x, next, time));
    last_t = time;
    x = next;
  }
  if (path.end < last_t) throw InconsistentObservation("observation ends before last jump");
  return ll + safe_log(p(spec, x, x, last_t, path.end, opt));
}

double panel_loglik(const MarkovSpec& spec, const PanelPath& panel, const OdeOptions& opt) {
  if (panel.times.size() != panel.states.size() || panel.times.empty()) {
    throw InvalidInput("panel needs one state per visit");
  }
  double ll = 0.0;
  for (std::size_t r = 0; r + 1 < panel.times.size(); ++r) {
    const std::size_t h = panel.states[r];
    const std::size_t j = panel.states[r + 1];
    if (h >= spec.states() || j >= spec.states()) throw InvalidInput("state out of range");
    if (!(panel.times[r + 1] > panel.times[r])) {
      throw InconsistentObservation("visit times must increase");
    }
    if (!spec.reachable(h, j)) {
      throw InconsistentObservation("panel moves to a state unreachable in the model");
    }
    ll += safe_log(p(spec, h, j, panel.times[r], panel.times[r + 1], opt));
  }
  return ll;
}

double illness_death_loglik(const MarkovSpec& spec, const IllnessDeathRecord& rec,
                            const OdeOptions& opt) {
  if (spec.states() != 3 || !spec.compact() || spec.components() != 2) {
    throw UnsupportedModel("mixed-scheme heuristic likelihood is defined for illness-death only");
  }
  const auto& v = rec.visits;
  if (v.empty()) throw InvalidInput("record needs at least the initial visit");
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) throw InconsistentObservation("visit times must increase");
  }
  const double T = rec.follow_up;
  const double d = rec.died ? 1.0 : 0.0;
  if (rec.first_ill_visit) {
    const std::size_t l = *rec.first_ill_visit;
    if (l == 0 || l >= v.size()) throw InvalidInput("first ill visit index out of range");
    if (T < v[l]) throw InconsistentObservation("death before the visit that found illness");
    // p00(v0, v_{l-1}) p01(v_{l-1}, v_l) p11(v_l, T) alpha12(T)^delta
    double ll = safe_log(p(spec, 0, 0, v[0], v[l - 1], opt)) +
                safe_log(p(spec, 0, 1, v[l - 1], v[l], opt)) +
                safe_log(p(spec, 1, 1, v[l], T, opt));
    if (rec.died) ll += safe_log(spec.alpha(1, 2, T));
    return ll;
  }
  const double vm = v.back();
  if (T < vm) throw InconsistentObservation("death before the last visit");
  // p00(v0, vm) [p00(vm, T) alpha02(T)^delta + p01(vm, T) alpha12(T)^delta]
  const TransitionMatrix P = transition_matrix(spec, vm, T, opt);
  const double a02 = d > 0.0 ? spec.alpha(0, 2, T) : 1.0;
  const double a12 = d > 0.0 ? spec.alpha(1, 2, T) : 1.0;
  return safe_log(p(spec, 0, 0, v[0], vm, opt)) + safe_log(P(0, 0) * a02 + P(0, 1) * a12);
}

}  // namespace

double heuristic_loglik(const MarkovSpec& spec, const HeuristicData& data,
                        const OdeOptions& options) {
  return std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, ContinuousPath>) {
          return continuous_loglik(spec, d, options);
        } else if constexpr (std::is_same_v<T, PanelPath>) {
          return panel_loglik(spec, d, options);
        } else {
          return illness_death_loglik(spec, d, options);
        }
      },
      data);
}

}  // namespace gcmp
