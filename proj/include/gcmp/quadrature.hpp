#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "gcmp/error.hpp"

namespace gcmp::quad {

struct Tolerance {
  double rel = 1e-8;
  double abs = 1e-12;
  std::size_t max_evaluations = 100000;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
};

template <class F>
double sample(F& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "integrand is not finite at x = " << x;
    throw DomainError(msg.str(), x);
  }
  return y;
}

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double uflow = std::numeric_limits<double>::min();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  std::array<double, 7> f1{};
  std::array<double, 7> f2{};
  const double fc = sample(f, center);
  double res_gauss = fc * gauss_weights[3];
  double res_kronrod = fc * kronrod_weights[7];
  double res_abs = std::abs(res_kronrod);
  for (int j = 0; j < 3; ++j) {
    const int k = 2 * j + 1;
    const double dx = half * kronrod_nodes[k];
    const double lo = sample(f, center - dx);
    const double hi = sample(f, center + dx);
    f1[k] = lo;
    f2[k] = hi;
    res_gauss += gauss_weights[j] * (lo + hi);
    res_kronrod += kronrod_weights[k] * (lo + hi);
    res_abs += kronrod_weights[k] * (std::abs(lo) + std::abs(hi));
  }
  for (int j = 0; j < 4; ++j) {
    const int k = 2 * j;
    const double dx = half * kronrod_nodes[k];
    const double lo = sample(f, center - dx);
    const double hi = sample(f, center + dx);
    f1[k] = lo;
    f2[k] = hi;
    res_kronrod += kronrod_weights[k] * (lo + hi);
    res_abs += kronrod_weights[k] * (std::abs(lo) + std::abs(hi));
  }
  const double mean = 0.5 * res_kronrod;
  double res_asc = kronrod_weights[7] * std::abs(fc - mean);
  for (int k = 0; k < 7; ++k) {
    res_asc += kronrod_weights[k] * (std::abs(f1[k] - mean) + std::abs(f2[k] - mean));
  }
  const double h = std::abs(half);
  res_asc *= h;
  res_abs *= h;
  double err = std::abs((res_kronrod - res_gauss) * half);
  if (res_asc != 0.0 && err != 0.0) {
    err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
  }
  if (res_abs > uflow / (50.0 * eps)) {
    err = std::max(50.0 * eps * res_abs, err);
  }
  return Panel{a, b, res_kronrod * half, err};
}

inline bool error_order(const Panel& x, const Panel& y) {
  if (x.error != y.error) return x.error < y.error;
  return x.a > y.a;
}

inline std::vector<double> panel_edges(double a, double b, std::span<const double> breakpoints) {
  std::vector<double> edges;
  edges.reserve(breakpoints.size() + 2);
  edges.push_back(a);
  for (double x : breakpoints) {
    if (x > a && x < b) edges.push_back(x);
  }
  edges.push_back(b);
  std::sort(edges.begin() + 1, edges.end() - 1);
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over (a, b].
///
/// The interval is first cut at every breakpoint inside (a, b) so that no
/// panel straddles a declared discontinuity; the worst panel is then bisected
/// until the summed error estimate meets max(rel * |value|, abs). Endpoints
/// are never sampled. Throws ToleranceFailure when the evaluation budget runs
/// out and DomainError on a non-finite sample.
template <class F>
QuadResult integrate_1d(F&& f, double a, double b, std::span<const double> breakpoints = {},
                        const Tolerance& tol = {}) {
  if (!(a <= b)) throw InvalidInput("integrate_1d: lower bound exceeds upper bound");
  QuadResult out;
  if (a == b) return out;

  const auto edges = detail::panel_edges(a, b, breakpoints);
  std::vector<detail::Panel> heap;
  heap.reserve(edges.size() + 64);
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    heap.push_back(detail::gauss_kronrod_15(f, edges[i], edges[i + 1]));
    out.evaluations += 15;
    total += heap.back().value;
    total_err += heap.back().error;
  }
  std::make_heap(heap.begin(), heap.end(), detail::error_order);

  constexpr double min_rel_width = 64.0 * std::numeric_limits<double>::epsilon();
  while (total_err > std::max(tol.rel * std::abs(total), tol.abs)) {
    if (out.evaluations + 30 > tol.max_evaluations) {
      throw ToleranceFailure("integrate_1d: evaluation budget exhausted", total_err);
    }
    std::pop_heap(heap.begin(), heap.end(), detail::error_order);
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    const double min_width = min_rel_width * std::max(std::abs(worst.a), std::abs(worst.b));
    if (worst.b - worst.a <= min_width || mid <= worst.a || mid >= worst.b) {
      throw ToleranceFailure("integrate_1d: panel width underflow", total_err);
    }
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), detail::error_order);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), detail::error_order);
  }

  // Re-sum in abscissa order so the result does not depend on heap history.
  std::sort(heap.begin(), heap.end(),
            [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
  out.value = 0.0;
  out.error = 0.0;
  for (const auto& p : heap) {
    out.value += p.value;
    out.error += p.error;
  }
  return out;
}

/// A bound that is either a constant or a function of the outer variables.
class Bound {
 public:
  Bound(double value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  Bound(std::function<double(std::span<const double>)> fn) : fn_(std::move(fn)) {}  // NOLINT

  double operator()(std::span<const double> outer) const { return fn_ ? fn_(outer) : value_; }

 private:
  double value_ = 0.0;
  std::function<double(std::span<const double>)> fn_;
};

struct Dimension {
  Bound lower;
  Bound upper;
  std::vector<double> breakpoints;
  // Values above 1 integrate in u with x = lower + (upper - lower) * u^p,
  // which flattens a power singularity of the integrand at the lower bound.
  double lower_power = 1.0;
};

/// Axis-aligned box whose inner bounds may depend on outer variables.
/// Dimension 0 is outermost.
struct IntegrationRegion {
  std::vector<Dimension> dims;
  // Inner dimensions additionally split at the current value of each outer
  // variable, where indicators of the form 1{s_l < s_j} flip.
  bool split_at_outer = true;
};

inline constexpr std::size_t max_nested_dimensions = 4;

namespace detail {

template <class F>
struct NestedState {
  F& f;
  const IntegrationRegion& region;
  Tolerance tol;
  std::array<double, max_nested_dimensions> point{};
  std::size_t evaluations = 0;
  double inner_error = 0.0;
};

template <class F>
QuadResult integrate_level(NestedState<F>& st, std::size_t level) {
  const auto& dim = st.region.dims[level];
  const std::span<const double> outer(st.point.data(), level);
  const double lo = dim.lower(outer);
  const double hi = dim.upper(outer);
  if (!(hi > lo)) return {};

  std::vector<double> cuts = dim.breakpoints;
  if (st.region.split_at_outer) cuts.insert(cuts.end(), outer.begin(), outer.end());

  const bool innermost = level + 1 == st.region.dims.size();
  Tolerance level_tol = st.tol;
  if (st.tol.max_evaluations <= st.evaluations) {
    throw ToleranceFailure("integrate_nested: evaluation budget exhausted", st.inner_error);
  }
  level_tol.max_evaluations = st.tol.max_evaluations - st.evaluations;
  if (!innermost) level_tol.max_evaluations = std::numeric_limits<std::size_t>::max();
  // Inner levels run tighter so outer adaptivity is not driven by inner noise.
  const double shrink = std::pow(0.1, static_cast<double>(level));
  level_tol.rel = st.tol.rel * shrink;
  level_tol.abs = st.tol.abs * shrink;

  auto integrand = [&](double s) {
    st.point[level] = s;
    if (innermost) {
      ++st.evaluations;
      return st.f(std::span<const double>(st.point.data(), st.region.dims.size()));
    }
    const auto inner = integrate_level(st, level + 1);
    st.inner_error = std::max(st.inner_error, inner.error);
    return inner.value;
  };
  QuadResult r;
  if (dim.lower_power > 1.0) {
    const double p = dim.lower_power;
    const double w = hi - lo;
    std::vector<double> ucuts;
    for (double c : cuts) {
      if (c > lo && c < hi) ucuts.push_back(std::pow((c - lo) / w, 1.0 / p));
    }
    auto mapped = [&](double u) {
      const double x = std::min(hi, lo + w * std::pow(u, p));
      return integrand(x) * p * w * std::pow(u, p - 1.0);
    };
    r = integrate_1d(mapped, 0.0, 1.0, ucuts, level_tol);
  } else {
    r = integrate_1d(integrand, lo, hi, cuts, level_tol);
  }
  if (innermost) {
    if (st.evaluations > st.tol.max_evaluations) {
      throw ToleranceFailure("integrate_nested: evaluation budget exhausted", r.error);
    }
  }
  return r;
}

}  // namespace detail

/// Iterated integration, innermost dimension first. The integrand receives
/// the full point (outer variables first). The reported error is the outer
/// estimate plus the outer length times the largest inner estimate seen.
template <class F>
QuadResult integrate_nested(F&& f, const IntegrationRegion& region, const Tolerance& tol = {}) {
  const std::size_t k = region.dims.size();
  if (k == 0) throw InvalidInput("integrate_nested: region has no dimensions");
  if (k > max_nested_dimensions) {
    throw UnsupportedModel("integrate_nested: at most 4 dimensions are supported");
  }
  detail::NestedState<std::remove_reference_t<F>> st{f, region, tol};
  auto r = detail::integrate_level(st, 0);
  const double outer_len = std::abs(region.dims[0].upper({}) - region.dims[0].lower({}));
  r.error += outer_len * st.inner_error;
  r.evaluations = st.evaluations;
  return r;
}

}  // namespace gcmp::quad
