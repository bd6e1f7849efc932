#pragma once

#include "koopt/common.hpp"

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

namespace koopt {

// Axis-aligned sampling bounds in state units.
struct StateBox {
  Vec lower;
  Vec upper;

  Index dim() const { return lower.size(); }

  bool contains(const Vec& x) const {
    return ((x.array() >= lower.array()) && (x.array() <= upper.array())).all();
  }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw ConfigError("state box: lower/upper dimension mismatch");
    for (Index i = 0; i < lower.size(); ++i)
      if (!(lower(i) < upper(i)))
        throw ConfigError("state box: degenerate bounds in dimension " + std::to_string(i));
  }
};

// Impact reset and leg relabeling for single-step hybrid walkers. Events only
// happen at the trajectory end point, so there is no event detection here.
struct HybridExtras {
  std::function<Vec(const Vec&)> jump_map;
  std::function<Vec(const Vec&)> flip_map;
  std::function<double(const Vec&)> touchdown_guard;
  double guard_tolerance = 1e-8;
};

// x' = f(x) + G(x) u
struct ControlAffineSystem {
  std::string name;
  Index n_x = 0;
  Index n_u = 0;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> input_map;
  StateBox state_box;
  std::optional<HybridExtras> hybrid;
};

// Piecewise-constant input: row k of `knots` is applied on [kT/N, (k+1)T/N).
struct ControlSignal {
  Mat knots;  // N x n_u
  double period = 0.0;

  Index size() const { return knots.rows(); }
  double step() const { return period / static_cast<double>(knots.rows()); }

  void validate(Index n_u) const {
    if (knots.rows() < 1) throw DomainError("control signal needs at least one knot");
    if (knots.cols() != n_u) throw DomainError("control signal has wrong input dimension");
    if (!(period > 0.0)) throw DomainError("control signal period must be positive");
  }
};

struct Trajectory {
  Vec times;   // N+1 samples, times(0) = 0, times(N) = T
  Mat states;  // (N+1) x n_x

  Index samples() const { return times.size(); }
  double period() const { return times(times.size() - 1); }
};

namespace detail {

inline void check_finite(const Vec& v, const char* what) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) {
      std::ostringstream os;
      os << what << ": non-finite component " << i;
      throw DomainError(os.str());
    }
  }
}

}  // namespace detail

inline Vec eval_rhs(const ControlAffineSystem& sys, const Vec& x, const Vec& u) {
  if (x.size() != sys.n_x) throw DomainError("eval_rhs: state dimension mismatch");
  if (u.size() != sys.n_u) throw DomainError("eval_rhs: input dimension mismatch");
  Vec dx = sys.drift(x);
  if (sys.n_u > 0) {
    const Mat g = sys.input_map(x);
    if (g.rows() != sys.n_x || g.cols() != sys.n_u)
      throw DomainError("eval_rhs: input map has wrong shape");
    dx.noalias() += g * u;
  }
  detail::check_finite(dx, "eval_rhs");
  return dx;
}

// Classical fourth-order Runge-Kutta step with u held constant.
inline Vec rk4_step(const ControlAffineSystem& sys, const Vec& x, const Vec& u, double h) {
  if (!(h > 0.0)) throw IntegrationError("rk4_step: step must be positive");
  try {
    const Vec k1 = eval_rhs(sys, x, u);
    const Vec k2 = eval_rhs(sys, x + 0.5 * h * k1, u);
    const Vec k3 = eval_rhs(sys, x + 0.5 * h * k2, u);
    const Vec k4 = eval_rhs(sys, x + h * k3, u);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  } catch (const DomainError& e) {
    throw IntegrationError(std::string("rk4_step: non-finite stage (") + e.what() + ")");
  }
}

inline Trajectory simulate(const ControlAffineSystem& sys, const Vec& x0, const ControlSignal& u,
                           int substeps = 16) {
  if (substeps < 1) throw IntegrationError("simulate: substeps must be >= 1");
  u.validate(sys.n_u);
  const Index n = u.size();
  const double h_knot = u.step();
  const double h = h_knot / substeps;

  Trajectory traj;
  traj.times = Vec::LinSpaced(n + 1, 0.0, u.period);
  traj.states.resize(n + 1, sys.n_x);
  Vec x = x0;
  traj.states.row(0) = x.transpose();
  for (Index k = 0; k < n; ++k) {
    const Vec uk = u.knots.row(k).transpose();
    for (int s = 0; s < substeps; ++s) x = rk4_step(sys, x, uk, h);
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

// flip(jump(x)) for a state sitting on the touchdown surface.
inline Vec apply_reset(const HybridExtras& extras, const Vec& x) {
  const double g = extras.touchdown_guard(x);
  if (!(std::abs(g) <= extras.guard_tolerance)) {
    std::ostringstream os;
    os << "apply_reset: touchdown guard violated (" << g << ")";
    throw HybridEventError(os.str());
  }
  return extras.flip_map(extras.jump_map(x));
}

}  // namespace koopt
