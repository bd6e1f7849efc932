#pragma once

#include "koopt/systems.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace koopt {

struct BoundaryPoint {
  Vec x0;
  Vec xT;
  double period = 0.0;
};

// Implicit boundary conditions b(x0, xT, T) = 0, optionally with an explicit
// parametrization p -> (x0, xT, T) of the feasible set.
struct MixedBoundaryConstraint {
  std::string name;
  Index n_x = 0;
  Index n_g = 0;
  std::function<Vec(const Vec&, const Vec&, double)> eval;

  std::function<BoundaryPoint(const Vec&)> reduction;
  Index n_p = 0;
  Vec p_lower;
  Vec p_upper;

  // Search box for the general formulation, v = (x0, xT, T).
  Vec v_lower;
  Vec v_upper;

  bool has_reduction() const { return static_cast<bool>(reduction); }

  Vec operator()(const BoundaryPoint& b) const { return eval(b.x0, b.xT, b.period); }

  double violation(const BoundaryPoint& b) const { return (*this)(b).norm(); }
};

inline Vec pack_boundary(const BoundaryPoint& b) {
  Vec v(2 * b.x0.size() + 1);
  v << b.x0, b.xT, b.period;
  return v;
}

inline BoundaryPoint unpack_boundary(const Vec& v, Index n_x) {
  return {v.head(n_x), v.segment(n_x, n_x), v(2 * n_x)};
}

// Oscillation with amplitude a: x(T) = x(0), x1(0) = a, x2(0) = 0.
// Reduction p = (T) with x0 = xT = (a, 0).
inline MixedBoundaryConstraint periodic_amplitude_mbc(double amplitude, double t_min, double t_max) {
  if (!(t_min > 0.0) || !(t_max > t_min)) throw ConfigError("period bounds must satisfy 0 < T_min < T_max");
  MixedBoundaryConstraint mbc;
  mbc.name = "periodic_amplitude";
  mbc.n_x = 2;
  mbc.n_g = 4;
  mbc.eval = [amplitude](const Vec& x0, const Vec& xT, double) -> Vec {
    Vec g(4);
    g << xT - x0, x0(0) - amplitude, x0(1);
    return g;
  };
  mbc.n_p = 1;
  mbc.p_lower = to_vec({t_min});
  mbc.p_upper = to_vec({t_max});
  mbc.reduction = [amplitude](const Vec& p) {
    const Vec x = to_vec({amplitude, 0.0});
    return BoundaryPoint{x, x, p(0)};
  };
  const double span = std::max(1.0, 2.0 * std::abs(amplitude));
  mbc.v_lower = to_vec({-span, -span, -span, -span, t_min});
  mbc.v_upper = to_vec({span, span, span, span, t_max});
  return mbc;
}

// Symmetric single-step gait with average speed v_avg:
//   x(0) = flip(jump(x(T)))          periodicity
//   step_length(x(0)) / T = v_avg    operating point
//   touchdown_guard(x(0)) = 0        anchor (both feet on the ground)
// Reduction p = (T, dth_st(T), dth_sw(T)): the touchdown spread follows from
// the step length, and the pre-impact rates determine x(0) through the reset.
inline MixedBoundaryConstraint walker_gait_mbc(const CompassGait& walker, double v_avg, double t_min,
                                               double t_max, double rate_bound) {
  if (!(v_avg > 0.0)) throw ConfigError("walker: average speed must be positive");
  if (!(t_min > 0.0) || !(t_max > t_min)) throw ConfigError("period bounds must satisfy 0 < T_min < T_max");
  const double l = walker.params().leg_length;
  if (v_avg * t_max >= 2.0 * l) throw ConfigError("walker: step length exceeds twice the leg length");

  MixedBoundaryConstraint mbc;
  mbc.name = "walker_gait";
  mbc.n_x = 4;
  mbc.n_g = 6;
  mbc.eval = [walker, v_avg](const Vec& x0, const Vec& xT, double period) -> Vec {
    Vec g(6);
    g.head(4) = x0 - CompassGait::flip(walker.jump(xT));
    g(4) = walker.step_length(x0) / period - v_avg;
    g(5) = walker.touchdown_guard(x0);
    return g;
  };
  mbc.n_p = 3;
  mbc.p_lower = to_vec({t_min, -rate_bound, -rate_bound});
  mbc.p_upper = to_vec({t_max, rate_bound, rate_bound});
  mbc.reduction = [walker, v_avg, l](const Vec& p) {
    const double spread = 2.0 * std::asin(v_avg * p(0) / (2.0 * l));
    const auto [st, sw] = walker.touchdown_angles(spread);
    Vec xT(4);
    xT << sw, st, p(1), p(2);
    return BoundaryPoint{CompassGait::flip(walker.jump(xT)), xT, p(0)};
  };
  const double ang = 0.5;
  mbc.v_lower = to_vec({-ang, -ang, -rate_bound, -rate_bound, -ang, -ang, -rate_bound, -rate_bound, t_min});
  mbc.v_upper = to_vec({ang, ang, rate_bound, rate_bound, ang, ang, rate_bound, rate_bound, t_max});
  return mbc;
}

// Boundary conditions pinning x(0) = x(T) = x_eq.
inline MixedBoundaryConstraint equilibrium_mbc(const Vec& x_eq, double t_min, double t_max) {
  MixedBoundaryConstraint mbc;
  mbc.name = "equilibrium";
  mbc.n_x = x_eq.size();
  mbc.n_g = 2 * x_eq.size();
  mbc.eval = [x_eq](const Vec& x0, const Vec& xT, double) -> Vec {
    Vec g(2 * x_eq.size());
    g << x0 - x_eq, xT - x_eq;
    return g;
  };
  mbc.n_p = 1;
  mbc.p_lower = to_vec({t_min});
  mbc.p_upper = to_vec({t_max});
  mbc.reduction = [x_eq](const Vec& p) { return BoundaryPoint{x_eq, x_eq, p(0)}; };
  const Index n = x_eq.size();
  mbc.v_lower = Vec::Constant(2 * n + 1, -1.0);
  mbc.v_upper = Vec::Constant(2 * n + 1, 1.0);
  mbc.v_lower.head(2 * n) += x_eq.replicate(2, 1);
  mbc.v_upper.head(2 * n) += x_eq.replicate(2, 1);
  mbc.v_lower(2 * n) = t_min;
  mbc.v_upper(2 * n) = t_max;
  return mbc;
}

}  // namespace koopt
