#pragma once

#include "koopt/boundary.hpp"
#include "koopt/lower_level.hpp"
#include "koopt/optimize.hpp"
#include "koopt/parallel.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace koopt {

struct UpperConfig {
  Index knots = 100;
  double cost_scale = 1.0;
  int starts = 20;           // grid points along the first reduced coordinate
  std::optional<Vec> p_guess;  // remaining reduced coordinates (default: box midpoint)
  SimplexOptions simplex{0.02, 1e-7, 1e-14, 400};
  int workers = 1;

  // augmented Lagrangian (general formulation)
  double al_rho0 = 10.0;
  double al_growth = 10.0;
  int al_outer = 25;
  double al_tol = 1e-6;
  double al_stall = 0.25;
  SimplexOptions al_simplex{0.05, 1e-9, 1e-15, 6000};

  void validate() const {
    if (knots < 2) throw ConfigError("upper level: knots must be >= 2");
    if (starts < 1) throw ConfigError("upper level: at least one start required");
    if (workers < 1) throw ConfigError("upper level: workers must be >= 1");
    if (!(cost_scale > 0.0)) throw ConfigError("upper level: cost scale must be positive");
  }
};

struct UpperEvaluation {
  double c = std::numeric_limits<double>::infinity();
  bool ok = false;
  std::string diagnostic;
  std::optional<LowerLevelSolution> lower;
};

// Original cost c of the lower-level optimum at fixed (x0, xT, T); +inf when
// the lower level fails.
inline UpperEvaluation evaluate_upper(const GeneratorModel& model, const BoundaryVariant& variant,
                                      const BoundaryPoint& b, Index knots, double cost_scale = 1.0) {
  UpperEvaluation e;
  try {
    LowerLevelProblem p{&model, variant, b.x0, b.xT, b.period, knots, cost_scale};
    LowerLevelSolution s = solve_lower(p);
    if (!std::isfinite(s.c)) throw DegenerateQpError("non-finite cost", 0.0);
    e.c = s.c;
    e.ok = true;
    e.lower = std::move(s);
  } catch (const NumericError& err) {
    e.diagnostic = err.what();
  } catch (const ConfigError& err) {
    e.diagnostic = err.what();
  }
  return e;
}

inline double upper_objective(const GeneratorModel& model, const BoundaryVariant& variant,
                              const Vec& x0, const Vec& xT, double period, Index knots,
                              double cost_scale = 1.0) {
  return evaluate_upper(model, variant, BoundaryPoint{x0, xT, period}, knots, cost_scale).c;
}

struct StartRecord {
  Vec p_start;
  Vec p;
  double c = std::numeric_limits<double>::infinity();
  int evals = 0;
};

struct BilevelSolution {
  BoundaryPoint boundary;
  Vec p;  // reduced coordinates, when a reduction was used
  LowerLevelSolution lower;
  Trajectory x;  // C z*
  Mat u;
  double c = 0.0;
  double c_hat = 0.0;
  double violation = 0.0;
  int evaluations = 0;
  std::vector<StartRecord> starts;
  std::vector<double> violation_history;  // AL outer iterations
};

namespace detail {

inline bool inside(const Vec& v, const Vec& lo, const Vec& hi) {
  return ((v.array() >= lo.array()) && (v.array() <= hi.array())).all();
}

inline BilevelSolution finish(const GeneratorModel& model, const BoundaryVariant& variant,
                              const MixedBoundaryConstraint& mbc, const BoundaryPoint& b,
                              const UpperConfig& cfg) {
  UpperEvaluation e = evaluate_upper(model, variant, b, cfg.knots, cfg.cost_scale);
  if (!e.ok) throw ConvergenceError("bilevel: lower level failed at the optimum: " + e.diagnostic);
  BilevelSolution s;
  s.boundary = b;
  s.lower = std::move(*e.lower);
  s.x = s.lower.state_trajectory(model.n_x());
  s.u = s.lower.u;
  s.c = s.lower.c;
  s.c_hat = s.lower.c_hat;
  s.violation = mbc.violation(b);
  return s;
}

// lower T first, then lexicographic x0
inline bool tie_before(const BoundaryPoint& a, const BoundaryPoint& b) {
  if (a.period != b.period) return a.period < b.period;
  for (Index i = 0; i < a.x0.size(); ++i)
    if (a.x0(i) != b.x0(i)) return a.x0(i) < b.x0(i);
  return false;
}

}  // namespace detail

/// Multistart over a uniform grid of the first reduced coordinate (the period
/// for every shipped preset), each start refined by Nelder-Mead on p.
inline BilevelSolution solve_reduced(const GeneratorModel& model, const BoundaryVariant& variant,
                                     const MixedBoundaryConstraint& mbc, const UpperConfig& cfg) {
  cfg.validate();
  if (!mbc.has_reduction()) throw ConfigError("solve_reduced: constraint has no reduction");
  const Index np = mbc.n_p;
  const Vec lo = mbc.p_lower, hi = mbc.p_upper;
  const Vec scale = hi - lo;

  Vec base = 0.5 * (lo + hi);
  if (cfg.p_guess) {
    if (cfg.p_guess->size() != np) throw ConfigError("solve_reduced: p_guess has wrong size");
    base = *cfg.p_guess;
  }

  std::vector<Vec> start_points;
  for (int k = 0; k < cfg.starts; ++k) {
    Vec p = base;
    if (cfg.starts > 1) p(0) = lo(0) + scale(0) * static_cast<double>(k) / (cfg.starts - 1);
    start_points.push_back(p);
  }

  auto objective = [&](const Vec& p) {
    if (!detail::inside(p, lo, hi)) return std::numeric_limits<double>::infinity();
    try {
      return evaluate_upper(model, variant, mbc.reduction(p), cfg.knots, cfg.cost_scale).c;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::vector<StartRecord> records(start_points.size());
  parallel_for(start_points.size(), cfg.workers, [&](std::size_t i) {
    const SimplexResult r = nelder_mead(objective, start_points[i], scale, cfg.simplex);
    records[i] = StartRecord{start_points[i], r.x, r.f, r.evals};
  });

  std::optional<std::size_t> best;
  int evals = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    evals += records[i].evals;
    if (!std::isfinite(records[i].c)) continue;
    if (!best || records[i].c < records[*best].c ||
        (records[i].c == records[*best].c &&
         detail::tie_before(mbc.reduction(records[i].p), mbc.reduction(records[*best].p))))
      best = i;
  }
  if (!best) throw ConvergenceError("solve_reduced: every start failed");

  BilevelSolution s = detail::finish(model, variant, mbc, mbc.reduction(records[*best].p), cfg);
  s.p = records[*best].p;
  s.starts = std::move(records);
  s.evaluations = evals;
  return s;
}

struct NonConvergence : ConvergenceError {
  NonConvergence(const std::string& what, BoundaryPoint best_iterate, double best_violation)
      : ConvergenceError(what), best(std::move(best_iterate)), violation(best_violation) {}
  BoundaryPoint best;
  double violation;
};

/// Augmented Lagrangian on v = (x0, xT, T): Nelder-Mead minimizes
/// c(v) + lambda'b(v) + rho/2 |b(v)|^2, then lambda += rho b and rho grows when
/// the violation stalls.
inline BilevelSolution solve_general(const GeneratorModel& model, const BoundaryVariant& variant,
                                     const MixedBoundaryConstraint& mbc, const UpperConfig& cfg,
                                     const BoundaryPoint& guess) {
  cfg.validate();
  const Index nx = model.n_x();
  if (mbc.n_x != nx) throw ConfigError("solve_general: constraint and model disagree on n_x");
  const Vec lo = mbc.v_lower, hi = mbc.v_upper;
  const Vec scale = hi - lo;

  Vec v = pack_boundary(guess);
  Vec lambda = Vec::Zero(mbc.n_g);
  double rho = cfg.al_rho0;
  double prev = std::numeric_limits<double>::infinity();
  double best_violation = std::numeric_limits<double>::infinity();
  Vec best_v = v;
  std::vector<double> history;
  int evals = 0;
  SimplexOptions sopt = cfg.al_simplex;

  for (int outer = 0; outer < cfg.al_outer; ++outer) {
    auto merit = [&](const Vec& w) {
      if (!detail::inside(w, lo, hi)) return std::numeric_limits<double>::infinity();
      const BoundaryPoint b = unpack_boundary(w, nx);
      const double c = evaluate_upper(model, variant, b, cfg.knots, cfg.cost_scale).c;
      if (!std::isfinite(c)) return c;
      const Vec g = mbc(b);
      return c + lambda.dot(g) + 0.5 * rho * g.squaredNorm();
    };
    const SimplexResult r = nelder_mead(merit, v, scale, sopt);
    evals += r.evals;
    if (std::isfinite(r.f)) v = r.x;
    const Vec g = mbc(unpack_boundary(v, nx));
    const double viol = g.norm();
    if (viol < best_violation) {
      best_violation = viol;
      best_v = v;
    }
    history.push_back(best_violation);
    if (viol <= cfg.al_tol && r.converged) break;
    lambda += rho * g;
    if (viol > cfg.al_stall * prev) rho *= cfg.al_growth;
    prev = viol;
    sopt.initial_radius = std::max(1e-4, 0.5 * sopt.initial_radius);
  }

  const Vec g = mbc(unpack_boundary(v, nx));
  if (!(g.norm() <= cfg.al_tol)) {
    std::ostringstream os;
    os << "solve_general: constraint violation " << best_violation << " above " << cfg.al_tol;
    throw NonConvergence(os.str(), unpack_boundary(best_v, nx), best_violation);
  }
  BilevelSolution s = detail::finish(model, variant, mbc, unpack_boundary(v, nx), cfg);
  s.violation_history = std::move(history);
  s.evaluations = evals;
  return s;
}

struct SweepRow {
  double period = 0.0;
  double c = std::numeric_limits<double>::quiet_NaN();
  double c_hat = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::quiet_NaN();
  double manifold_defect_max = std::numeric_limits<double>::quiet_NaN();
  std::string diagnostic;
  bool ok() const { return std::isfinite(c); }
};

inline std::vector<SweepRow> sweep_period(const GeneratorModel& model, const BoundaryVariant& variant,
                                          const MixedBoundaryConstraint& mbc, const std::vector<double>& grid,
                                          Index knots, double cost_scale = 1.0, int workers = 1) {
  if (!mbc.has_reduction() || mbc.n_p != 1) throw ConfigError("sweep_period: needs a one-dimensional reduction");
  std::vector<SweepRow> rows(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.period = grid[i];
    try {
      const UpperEvaluation e = evaluate_upper(model, variant, mbc.reduction(to_vec({grid[i]})), knots, cost_scale);
      if (!e.ok) {
        row.diagnostic = e.diagnostic;
        return;
      }
      row.c = e.c;
      row.c_hat = e.lower->c_hat;
      row.kkt_residual = std::max(e.lower->kkt.stationarity, e.lower->kkt.feasibility);
      row.manifold_defect_max = e.lower->manifold_defect.maxCoeff();
    } catch (const Error& err) {
      row.diagnostic = err.what();
    }
  });
  return rows;
}

// Interior local minima of a sweep, as row indices.
inline std::vector<std::size_t> local_minima(const std::vector<SweepRow>& rows) {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i)
    if (rows[i].ok() && rows[i - 1].ok() && rows[i + 1].ok() && rows[i].c < rows[i - 1].c &&
        rows[i].c <= rows[i + 1].c)
      out.push_back(i);
  return out;
}

}  // namespace koopt
