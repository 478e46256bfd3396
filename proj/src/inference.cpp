#include "gcmp/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gcmp/error.hpp"

namespace gcmp {

namespace {

double subject_loglik(const IntensityModel& model, const Subject& s, double horizon,
                      const LikelihoodOptions& options) {
  if (s.covariates.size() == 0 && model.covariate_names().empty()) {
    return conditional_loglik(model, s.atom, horizon, s.entry, options);
  }
  return conditional_loglik(model.with_covariates(s.covariates), s.atom, horizon, s.entry,
                            options);
}

// Evaluates every subject; failures are stored per subject instead of thrown.
void evaluate_all(const IntensityModel& model, const Dataset& data,
                  const LikelihoodOptions& options, unsigned threads, std::vector<double>& out,
                  std::vector<std::exception_ptr>& errors) {
  const std::size_t n = data.subjects.size();
  out.assign(n, minus_infinity);
  errors.assign(n, nullptr);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out[i] = subject_loglik(model, data.subjects[i], data.horizon, options);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (k == 1) {
    work(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(k);
  for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work, n * t / k, n * (t + 1) / k);
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<double> subject_logliks(const IntensityModel& model, const Dataset& data,
                                    const LikelihoodOptions& options, unsigned threads) {
  std::vector<double> out;
  std::vector<std::exception_ptr> errors;
  evaluate_all(model, data, options, threads, out, errors);
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

double dataset_loglik(const IntensityModel& model, const Dataset& data,
                      const LikelihoodOptions& options, unsigned threads) {
  const auto v = subject_logliks(model, data, options, threads);
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum;
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double step_scale) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon()) * step_scale;
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = base * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f(a) - f(b)) / (a[i] - b[i]);
  }
  return g;
}

namespace {

// Sequential driver around the parallel objective; values are cached per point.
class Objective {
 public:
  Objective(const IntensityModel& model, const Dataset& data, const FitOptions& options)
      : model_(model), data_(data), options_(options), theta0_(model.theta()) {
    for (Eigen::Index i = 0; i < theta0_.size(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (k >= options.fixed.size() || !options.fixed[k]) free_.push_back(i);
    }
  }

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(free_.size()); }

  Eigen::VectorXd full(const Eigen::VectorXd& x) const {
    Eigen::VectorXd theta = theta0_;
    for (std::size_t k = 0; k < free_.size(); ++k) theta[free_[k]] = x[static_cast<Eigen::Index>(k)];
    return theta;
  }

  Eigen::VectorXd start() const {
    Eigen::VectorXd x(dimension());
    for (std::size_t k = 0; k < free_.size(); ++k) x[static_cast<Eigen::Index>(k)] = theta0_[free_[k]];
    return x;
  }

  // Log-likelihood; any failure counts as minus infinity.
  double loglik(const Eigen::VectorXd& x) {
    std::vector<double> key(x.data(), x.data() + x.size());
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    ++evaluations_;
    double value = minus_infinity;
    try {
      std::vector<double> v;
      std::vector<std::exception_ptr> errors;
      evaluate_all(model_.with_theta(full(x)), data_, options_.likelihood, options_.threads, v,
                   errors);
      double sum = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) sum += errors[i] ? minus_infinity : v[i];
      value = std::isnan(sum) ? minus_infinity : sum;
    } catch (const Error&) {
      value = minus_infinity;
    }
    cache_.emplace(std::move(key), value);
    return value;
  }

  // Minimized by the search.
  double operator()(const Eigen::VectorXd& x) {
    const double ll = loglik(x);
    return ll == minus_infinity ? std::numeric_limits<double>::infinity() : -ll;
  }

  std::size_t evaluations() const { return evaluations_; }
  const std::vector<Eigen::Index>& free() const { return free_; }

 private:
  const IntensityModel& model_;
  const Dataset& data_;
  const FitOptions& options_;
  Eigen::VectorXd theta0_;
  std::vector<Eigen::Index> free_;
  std::map<std::vector<double>, double> cache_;
  std::size_t evaluations_ = 0;
};

struct SearchState {
  Eigen::VectorXd x;
  double value = 0.0;
  std::size_t iterations = 0;
  double diameter = 0.0;
};

SearchState nelder_mead(Objective& f, const Eigen::VectorXd& x0, const FitOptions& opt) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> val(static_cast<std::size_t>(n + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    pts[static_cast<std::size_t>(i + 1)][i] += opt.initial_step * std::max(1.0, std::abs(x0[i]));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) val[i] = f(pts[i]);

  std::vector<std::size_t> order(pts.size());
  SearchState st;
  auto diameter = [&]() {
    double d = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) d = std::max(d, (pts[i] - pts[0]).norm());
    return d;
  };
  for (; st.iterations < opt.max_iterations; ++st.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    {
      std::vector<Eigen::VectorXd> p2;
      std::vector<double> v2;
      for (std::size_t k : order) {
        p2.push_back(pts[k]);
        v2.push_back(val[k]);
      }
      pts = std::move(p2);
      val = std::move(v2);
    }
    if (diameter() < opt.simplex_tol) break;

    const std::size_t worst = pts.size() - 1;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < worst; ++i) centroid += pts[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = f(xr);
    if (fr < val[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[worst - 1]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = f(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
      val[i] = f(pts[i]);
    }
  }
  st.x = pts[0];
  st.value = val[0];
  st.diameter = diameter();
  return st;
}

struct PolishState {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::size_t iterations = 0;
};

// Function values below this are indistinguishable from summation round-off.
double noise_floor(double value) { return 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value)); }

// BFGS on central-difference gradients. Near the optimum the decrease in the
// objective drops below round-off, so a step is also accepted when the value
// is unchanged within noise and the gradient norm shrinks.
PolishState bfgs(Objective& f, Eigen::VectorXd x, double value, const FitOptions& opt) {
  const Eigen::Index n = x.size();
  auto grad = [&](const Eigen::VectorXd& y) {
    return numeric_gradient([&](const Eigen::VectorXd& z) { return f(z); }, y);
  };
  PolishState st;
  Eigen::VectorXd g = grad(x);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  for (; st.iterations < 200; ++st.iterations) {
    if (!g.allFinite() || g.norm() < opt.gradient_tol) break;
    Eigen::VectorXd dir = -H * g;
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      scaled = false;
      dir = -g;
    }
    double step = 1.0;
    bool moved = false;
    Eigen::VectorXd xn, gn;
    double fn = 0.0;
    for (int k = 0; k < 40; ++k, step *= 0.5) {
      xn = x + step * dir;
      fn = f(xn);
      if (fn <= value + 1e-4 * step * dir.dot(g)) {
        moved = true;
        gn = grad(xn);
        break;
      }
      if (fn <= value + noise_floor(value)) {
        gn = grad(xn);
        if (gn.allFinite() && gn.norm() < g.norm()) {
          moved = true;
          break;
        }
      }
    }
    if (!moved) break;
    const Eigen::VectorXd s = xn - x;
    const Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    x = xn;
    value = fn;
    g = gn;
  }
  st.x = x;
  st.value = value;
  st.gradient = g;
  return st;
}

// Hessian of the log-likelihood from function values, step eps^(1/4) * max(1, |x|).
Eigen::MatrixXd numeric_hessian(Objective& f, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = base * std::max(1.0, std::abs(x[i]));
  auto ll = [&](const Eigen::VectorXd& y) { return f.loglik(y); };
  const double f0 = ll(x);
  Eigen::MatrixXd H(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd a = x, b = x;
    a[i] += h[i];
    b[i] -= h[i];
    H(i, i) = (ll(a) - 2.0 * f0 + ll(b)) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += h[i], pp[j] += h[j];
      pm[i] += h[i], pm[j] -= h[j];
      mp[i] -= h[i], mp[j] += h[j];
      mm[i] -= h[i], mm[j] -= h[j];
      H(i, j) = H(j, i) = (ll(pp) - ll(pm) - ll(mp) + ll(mm)) / (4.0 * h[i] * h[j]);
    }
  }
  return H;
}

}  // namespace

FitResult fit_mle(const IntensityModel& model, const Dataset& data, const FitOptions& options) {
  if (data.subjects.empty()) throw InvalidInput("fit_mle: dataset is empty");
  if (!options.fixed.empty() && options.fixed.size() != model.parameters().size()) {
    throw InvalidInput("fit_mle: fixed mask does not match the parameter count");
  }
  Objective f(model, data, options);
  FitResult r;
  for (const auto& p : model.parameters()) r.names.push_back(p.name);

  {
    std::vector<double> v;
    std::vector<std::exception_ptr> errors;
    evaluate_all(model, data, options.likelihood, options.threads, v, errors);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (errors[i] || v[i] == minus_infinity || std::isnan(v[i])) {
        std::string why = "log-likelihood is minus infinity";
        if (errors[i]) {
          try {
            std::rethrow_exception(errors[i]);
          } catch (const std::exception& e) {
            why = e.what();
          }
        }
        throw InvalidStart("fit_mle: subject " + data.subjects[i].id +
                               " is impossible at the initial parameters (" + why + ")",
                           data.subjects[i].id);
      }
    }
  }
  const Eigen::VectorXd x0 = f.start();
  r.initial_loglik = f.loglik(x0);

  Eigen::VectorXd x = x0;
  double value = -r.initial_loglik;
  if (f.dimension() > 0) {
    const SearchState nm = nelder_mead(f, x0, options);
    r.iterations = nm.iterations;
    r.simplex_diameter = nm.diameter;
    x = nm.x;
    value = nm.value;
    const PolishState qn = bfgs(f, x, value, options);
    r.iterations += qn.iterations;
    if (qn.value <= value + noise_floor(value)) {
      x = qn.x;
      value = qn.value;
    }
    r.gradient_norm = numeric_gradient([&](const Eigen::VectorXd& z) { return f(z); }, x).norm();
  }
  if (value > -r.initial_loglik) {
    x = x0;
    value = -r.initial_loglik;
  }

  const Eigen::VectorXd theta = f.full(x);
  r.theta_unconstrained = theta;
  r.theta_hat.resize(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    r.theta_hat[i] = to_natural(model.parameters()[static_cast<std::size_t>(i)].scale, theta[i]);
  }
  r.loglik = -value;
  r.converged = r.simplex_diameter < options.simplex_tol && r.gradient_norm < options.gradient_tol;

  std::ostringstream msg;
  if (options.standard_errors && f.dimension() > 0) {
    const Eigen::MatrixXd H = numeric_hessian(f, x);
    const Eigen::LLT<Eigen::MatrixXd> llt(-H);
    if (H.allFinite() && llt.info() == Eigen::Success) {
      const Eigen::MatrixXd cov_free = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
      const Eigen::Index p = theta.size();
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
      const auto& idx = f.free();
      for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
          cov(idx[a], idx[b]) = cov_free(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
      }
      Eigen::VectorXd se(p);
      for (Eigen::Index i = 0; i < p; ++i) {
        const bool log_scale = model.parameters()[static_cast<std::size_t>(i)].scale == Scale::log;
        const double jac = log_scale ? r.theta_hat[i] : 1.0;
        se[i] = std::abs(jac) * std::sqrt(std::max(0.0, cov(i, i)));
      }
      r.covariance = cov;
      r.std_errors = se;
    } else {
      msg << "Hessian is not negative definite; no standard errors. ";
    }
  }
  r.evaluations = f.evaluations();
  if (!r.converged) {
    msg << "not converged: simplex diameter " << r.simplex_diameter << ", gradient norm "
        << r.gradient_norm;
  }
  r.message = msg.str();
  return r;
}

}  // namespace gcmp
