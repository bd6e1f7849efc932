#pragma once

#include "koopt/common.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace koopt {

struct SimplexOptions {
  double initial_radius = 0.05;  // fraction of the per-coordinate scale
  double xtol = 1e-8;
  double ftol = 1e-14;
  int max_evals = 2000;
};

struct SimplexResult {
  Vec x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  bool converged = false;
  double radius = 0.0;
};

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2). Infinite
/// objective values are allowed and simply rank last. `scale` sets the size of
/// the initial simplex per coordinate.
inline SimplexResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0,
                                 const Vec& scale, const SimplexOptions& opt = {}) {
  const Index n = x0.size();
  const double inf = std::numeric_limits<double>::infinity();
  SimplexResult res;
  auto eval = [&](const Vec& x) {
    ++res.evals;
    const double v = f(x);
    return std::isnan(v) ? inf : v;
  };

  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> val(static_cast<std::size_t>(n + 1));
  val[0] = eval(x0);
  for (Index i = 0; i < n; ++i) {
    const double step = opt.initial_radius * (scale(i) != 0.0 ? scale(i) : 1.0);
    pts[static_cast<std::size_t>(i + 1)](i) += step;
    val[static_cast<std::size_t>(i + 1)] = eval(pts[static_cast<std::size_t>(i + 1)]);
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(n + 1));
  auto sort = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
  };

  while (true) {
    sort();
    const std::size_t best = order.front(), worst = order.back();
    double radius = 0.0;
    for (const auto& p : pts) radius = std::max(radius, (p - pts[best]).lpNorm<Eigen::Infinity>());
    res.radius = radius;
    const double spread = val[worst] - val[best];
    if (radius <= opt.xtol && (spread <= opt.ftol * (1.0 + std::abs(val[best])) || !std::isfinite(val[best]))) {
      res.converged = true;
      break;
    }
    if (radius <= opt.xtol * 1e-3) {
      res.converged = true;
      break;
    }
    if (res.evals >= opt.max_evals) break;

    Vec centroid = Vec::Zero(n);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += pts[order[k]];
    centroid /= static_cast<double>(n);
    const std::size_t second = order[order.size() - 2];

    const Vec xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < val[best]) {
      const Vec xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        val[worst] = fe;
      } else {
        pts[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Vec xc = outside ? Vec(centroid + 0.5 * (xr - centroid)) : Vec(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(xc);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = xc;
      val[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == best) continue;
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      val[k] = eval(pts[k]);
    }
  }
  sort();
  res.x = pts[order.front()];
  res.f = val[order.front()];
  return res;
}

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 500;
  double gtol = 1e-10;   // infinity norm of the gradient
  double ftol = 1e-15;   // relative decrease between iterations
};

struct LbfgsResult {
  Vec x;
  double f = 0.0;
  Vec grad;
  int iters = 0;
  int evals = 0;
  bool converged = false;
};

// Limited-memory BFGS with a backtracking Armijo line search. `fg` returns the
// objective and writes the gradient. `h0_solve`, when given, applies the
// inverse of the seed Hessian inside the two-loop recursion (preconditioning);
// otherwise the usual scaled identity is used.
inline LbfgsResult lbfgs(const std::function<double(const Vec&, Vec&)>& fg, const Vec& x0,
                         const LbfgsOptions& opt = {},
                         const std::function<Vec(const Vec&)>& h0_solve = {}) {
  LbfgsResult r;
  r.x = x0;
  r.f = fg(r.x, r.grad);
  ++r.evals;
  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (r.iters = 0; r.iters < opt.max_iters; ++r.iters) {
    if (!std::isfinite(r.f)) break;
    if (r.grad.lpNorm<Eigen::Infinity>() <= opt.gtol) {
      r.converged = true;
      break;
    }
    // two-loop recursion
    Vec q = r.grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (h0_solve) q = h0_solve(q);
    else if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Vec dir = -q;
    double slope = r.grad.dot(dir);
    bool steepest = s_hist.empty() && !h0_solve;
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -r.grad;
      slope = -r.grad.squaredNorm();
      steepest = true;
    }

    double step = 1.0;
    if (steepest) step = std::min(1.0, 1.0 / std::max(1e-300, r.grad.lpNorm<Eigen::Infinity>()));
    Vec x_new, g_new;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = r.x + step * dir;
      f_new = fg(x_new, g_new);
      ++r.evals;
      if (std::isfinite(f_new) && f_new <= r.f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vec s = x_new - r.x;
    const Vec y = g_new - r.grad;
    const double sy = s.dot(y);
    const double decrease = r.f - f_new;
    r.x = x_new;
    r.grad = g_new;
    const double f_old = r.f;
    r.f = f_new;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (decrease <= opt.ftol * std::max({1.0, std::abs(f_old), std::abs(f_new)})) {
      r.converged = true;
      ++r.iters;
      break;
    }
  }
  return r;
}

}  // namespace koopt
