#pragma once

// Local minimizers over R^n for objectives that may return +inf to reject a
// point. All of them count evaluations against a shared budget and record the
// best value seen after each iteration.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace darkwire::minimize {

struct TracePoint {
  int iteration;
  double value;  // best value so far
};

struct Result {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

struct Options {
  int max_evaluations = 5000;
  /// Stop when the tracked value changes by less than this (relative) over `window` iterations.
  double rel_tol = 1e-9;
  int window = 10;
  double simplex_step = 0.1;      // Nelder-Mead initial edge
  double fd_step = 1e-5;          // central-difference step
  double first_step = 0.01;       // quasi-Newton first move (max-norm)
  int lbfgs_memory = 10;
};

namespace detail {

template <class F>
class Counted {
 public:
  Counted(F& f, int budget) : f_(f), budget_(budget) {}
  double operator()(const Eigen::VectorXd& x) {
    ++count_;
    const double v = f_(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  }
  bool exhausted() const { return count_ >= budget_; }
  int count() const { return count_; }
  int remaining() const { return budget_ - count_; }

 private:
  F& f_;
  int budget_;
  int count_ = 0;
};

/// Relative change of a tracked sequence over the last `window` entries.
class Stall {
 public:
  Stall(double tol, int window) : tol_(tol), window_(window) {}
  bool push(double v) {
    hist_.push_back(v);
    if (static_cast<int>(hist_.size()) > window_ + 1) hist_.pop_front();
    if (static_cast<int>(hist_.size()) <= window_) return false;
    const double a = hist_.front(), b = hist_.back();
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    return std::abs(a - b) <= tol_ * std::max(std::abs(b), 1e-300);
  }

 private:
  double tol_;
  int window_;
  std::deque<double> hist_;
};

template <class F>
Eigen::VectorXd central_gradient(Counted<F>& f, const Eigen::VectorXd& x, double fx, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = f(xp);
    xp[i] = x[i] - h;
    const double dn = f(xp);
    xp[i] = x[i];
    if (std::isfinite(up) && std::isfinite(dn)) {
      g[i] = (up - dn) / (2 * h);
    } else if (std::isfinite(up)) {
      g[i] = (up - fx) / h;
    } else if (std::isfinite(dn)) {
      g[i] = (fx - dn) / h;
    } else {
      g[i] = 0.0;
    }
  }
  return g;
}

}  // namespace detail

/// Nelder-Mead with dimension-adaptive coefficients (Gao & Han). Converges
/// when the mean simplex value stalls.
template <class F>
Result nelder_mead(F&& func, const Eigen::VectorXd& x0, const Options& opt = {}) {
  detail::Counted<std::remove_reference_t<F>> f(func, opt.max_evaluations);
  const int n = static_cast<int>(x0.size());
  Result res;
  res.x = x0;
  if (n == 0) {
    res.value = f(x0);
    res.evaluations = f.count();
    res.converged = true;
    res.trace.push_back({0, res.value});
    return res;
  }
  const double alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 1.0 / (2.0 * n), delta = 1.0 - 1.0 / n;

  std::vector<Eigen::VectorXd> pts(n + 1, x0);
  std::vector<double> val(n + 1);
  val[0] = f(x0);
  for (int i = 0; i < n; ++i) {
    pts[i + 1][i] += opt.simplex_step;
    val[i + 1] = f(pts[i + 1]);
  }
  std::vector<int> order(n + 1);
  detail::Stall stall(opt.rel_tol, opt.window);

  int it = 0;
  auto best_value = [&] { return *std::min_element(val.begin(), val.end()); };
  res.trace.push_back({0, best_value()});
  while (!f.exhausted()) {
    ++it;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
    const int lo = order[0], hi = order[n], nh = order[n - 1];

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) centroid += pts[order[k]];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[hi]);
    const double fr = f(xr);
    if (fr < val[lo]) {
      const Eigen::VectorXd xe = centroid + beta * (xr - centroid);
      const double fe = f(xe);
      if (fe < fr) {
        pts[hi] = xe;
        val[hi] = fe;
      } else {
        pts[hi] = xr;
        val[hi] = fr;
      }
    } else if (fr < val[nh]) {
      pts[hi] = xr;
      val[hi] = fr;
    } else {
      bool shrink = false;
      if (fr < val[hi]) {
        const Eigen::VectorXd xc = centroid + gamma * (xr - centroid);
        const double fc = f(xc);
        if (fc <= fr) {
          pts[hi] = xc;
          val[hi] = fc;
        } else {
          shrink = true;
        }
      } else {
        const Eigen::VectorXd xc = centroid - gamma * (xr - centroid);
        const double fc = f(xc);
        if (fc < val[hi]) {
          pts[hi] = xc;
          val[hi] = fc;
        } else {
          shrink = true;
        }
      }
      if (shrink) {
        for (int k = 1; k <= n; ++k) {
          const int idx = order[k];
          pts[idx] = pts[lo] + delta * (pts[idx] - pts[lo]);
          val[idx] = f(pts[idx]);
        }
      }
    }
    res.trace.push_back({it, best_value()});

    double mean = 0.0;
    bool finite = true;
    for (double v : val) {
      finite = finite && std::isfinite(v);
      mean += v;
    }
    if (finite && stall.push(mean / (n + 1))) {
      res.converged = true;
      break;
    }
  }
  const int lo = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());
  res.x = pts[lo];
  res.value = val[lo];
  res.evaluations = f.count();
  res.iterations = it;
  return res;
}

namespace detail {

/// Backtracking (Armijo) search along `dir`; returns step taken or 0.
template <class F>
double backtrack(Counted<F>& f, const Eigen::VectorXd& x, double fx, const Eigen::VectorXd& g,
                 const Eigen::VectorXd& dir, double step, Eigen::VectorXd& x_new, double& f_new) {
  const double slope = g.dot(dir);
  if (!(slope < 0.0)) return 0.0;
  for (int k = 0; k < 40 && !f.exhausted(); ++k) {
    x_new = x + step * dir;
    f_new = f(x_new);
    if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) return step;
    step *= 0.5;
  }
  return 0.0;
}

/// Shared driver for the quasi-Newton variants. `direction(g)` returns the
/// search direction; `update(s, y)` absorbs a curvature pair.
template <class F, class Direction, class Update>
Result quasi_newton(F&& func, const Eigen::VectorXd& x0, const Options& opt, Direction direction, Update update) {
  detail::Counted<std::remove_reference_t<F>> f(func, opt.max_evaluations);
  Result res;
  Eigen::VectorXd x = x0;
  double fx = f(x);
  res.trace.push_back({0, fx});
  if (x.size() == 0 || !std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    res.evaluations = f.count();
    res.converged = x.size() == 0;
    return res;
  }
  Eigen::VectorXd g = central_gradient(f, x, fx, opt.fd_step);
  Stall stall(opt.rel_tol, opt.window);
  stall.push(fx);
  int it = 0;
  bool first = true;
  while (f.remaining() > 2 * x.size() + 1) {
    ++it;
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = direction(g);
    if (first) dir *= opt.first_step / std::max(dir.lpNorm<Eigen::Infinity>(), 1e-300);
    if (!(g.dot(dir) < 0.0)) {
      dir = -g * (opt.first_step / g.lpNorm<Eigen::Infinity>());
    }
    Eigen::VectorXd x_new;
    double f_new = fx;
    const double step = backtrack(f, x, fx, g, dir, 1.0, x_new, f_new);
    if (step == 0.0) {
      res.converged = true;  // no descent available at this resolution
      break;
    }
    const Eigen::VectorXd g_new = central_gradient(f, x_new, f_new, opt.fd_step);
    update(Eigen::VectorXd(x_new - x), Eigen::VectorXd(g_new - g));
    first = false;
    x = x_new;
    fx = f_new;
    g = g_new;
    res.trace.push_back({it, fx});
    if (stall.push(fx)) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  res.evaluations = f.count();
  res.iterations = it;
  return res;
}

}  // namespace detail

/// Dense BFGS on the inverse Hessian with finite-difference gradients.
template <class F>
Result bfgs(F&& func, const Eigen::VectorXd& x0, const Options& opt = {}) {
  const int n = static_cast<int>(x0.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  auto direction = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd { return -H * g; };
  auto update = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-300)) return;
    if (!scaled) {
      H *= sy / y.squaredNorm();
      scaled = true;
    }
    const double rho = 1.0 / sy;
    const Eigen::VectorXd Hy = H * y;
    H += (rho * rho * sy + rho * rho * y.dot(Hy)) * (s * s.transpose()) -
         rho * (Hy * s.transpose() + s * Hy.transpose());
  };
  return detail::quasi_newton(std::forward<F>(func), x0, opt, direction, update);
}

/// Limited-memory BFGS (two-loop recursion).
template <class F>
Result lbfgs(F&& func, const Eigen::VectorXd& x0, const Options& opt = {}) {
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;
  auto direction = [&](const Eigen::VectorXd& g) -> Eigen::VectorXd {
    Eigen::VectorXd q = g;
    std::vector<double> a(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = mem[i];
      a[i] = s.dot(q) / s.dot(y);
      q -= a[i] * y;
    }
    if (!mem.empty()) {
      const auto& [s, y] = mem.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      const double b = y.dot(q) / s.dot(y);
      q += (a[i] - b) * s;
    }
    return -q;
  };
  auto update = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    if (!(s.dot(y) > 1e-300)) return;
    mem.emplace_back(s, y);
    if (static_cast<int>(mem.size()) > opt.lbfgs_memory) mem.pop_front();
  };
  return detail::quasi_newton(std::forward<F>(func), x0, opt, direction, update);
}

}  // namespace darkwire::minimize
