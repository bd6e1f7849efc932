#pragma once

#include "koopt/boundary.hpp"
#include "koopt/dynamics.hpp"
#include "koopt/optimize.hpp"

#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace koopt {

// Direct transcription of the periodic/boundary-value problem: decision vector
// v = (x_0, ..., x_N, u_0, ..., u_{N-1}, T), defects
// x_{k+1} - RK4(x_k, u_k, T/N) and the boundary rows b(x_0, x_N, T).
class TranscribedNlp {
 public:
  TranscribedNlp(const ControlAffineSystem& sys, MixedBoundaryConstraint mbc, Index knots,
                 double cost_scale = 1.0, int substeps = 1)
      : sys_(&sys), mbc_(std::move(mbc)), n_(knots), scale_(cost_scale), substeps_(substeps) {
    if (knots < 2) throw ConfigError("transcribe: need at least two intervals");
    if (substeps < 1) throw ConfigError("transcribe: substeps must be >= 1");
    if (mbc_.n_x != sys.n_x) throw ConfigError("transcribe: constraint and system disagree on n_x");
  }

  Index knots() const { return n_; }
  Index n_x() const { return sys_->n_x; }
  Index n_u() const { return sys_->n_u; }
  Index n_vars() const { return (n_ + 1) * n_x() + n_ * n_u() + 1; }
  Index n_defects() const { return n_ * n_x(); }
  Index n_boundary() const { return mbc_.n_g; }
  Index n_constraints() const { return n_defects() + n_boundary(); }
  double cost_scale() const { return scale_; }
  int substeps() const { return substeps_; }
  const ControlAffineSystem& system() const { return *sys_; }
  const MixedBoundaryConstraint& boundary() const { return mbc_; }

  Index x_index(Index k) const { return k * n_x(); }
  Index u_index(Index k) const { return (n_ + 1) * n_x() + k * n_u(); }
  Index t_index() const { return n_vars() - 1; }

  Vec pack(const Mat& states, const Mat& inputs, double period) const {
    if (states.rows() != n_ + 1 || states.cols() != n_x() || inputs.rows() != n_ || inputs.cols() != n_u())
      throw ConfigError("transcribe: guess has wrong shape");
    Vec v(n_vars());
    for (Index k = 0; k <= n_; ++k) v.segment(x_index(k), n_x()) = states.row(k).transpose();
    for (Index k = 0; k < n_; ++k) v.segment(u_index(k), n_u()) = inputs.row(k).transpose();
    v(t_index()) = period;
    return v;
  }

  Mat states(const Vec& v) const {
    Mat x(n_ + 1, n_x());
    for (Index k = 0; k <= n_; ++k) x.row(k) = v.segment(x_index(k), n_x()).transpose();
    return x;
  }

  Mat inputs(const Vec& v) const {
    Mat u(n_, n_u());
    for (Index k = 0; k < n_; ++k) u.row(k) = v.segment(u_index(k), n_u()).transpose();
    return u;
  }

  double period(const Vec& v) const { return v(t_index()); }

  double objective(const Vec& v) const {
    const double h = period(v) / static_cast<double>(n_);
    return scale_ * h * v.segment(u_index(0), n_ * n_u()).squaredNorm();
  }

  Vec objective_gradient(const Vec& v) const {
    const double h = period(v) / static_cast<double>(n_);
    Vec g = Vec::Zero(n_vars());
    const auto u = v.segment(u_index(0), n_ * n_u());
    g.segment(u_index(0), n_ * n_u()) = 2.0 * scale_ * h * u;
    g(t_index()) = scale_ * u.squaredNorm() / static_cast<double>(n_);
    return g;
  }

  Vec flow(const Vec& x, const Vec& u, double h) const {
    Vec y = x;
    const double hs = h / substeps_;
    for (int s = 0; s < substeps_; ++s) y = rk4_step(*sys_, y, u, hs);
    return y;
  }

  Vec defects(const Vec& v) const {
    const double h = period(v) / static_cast<double>(n_);
    Vec d(n_defects());
    for (Index k = 0; k < n_; ++k) {
      const Vec xk = v.segment(x_index(k), n_x());
      const Vec uk = v.segment(u_index(k), n_u());
      d.segment(k * n_x(), n_x()) = v.segment(x_index(k + 1), n_x()) - flow(xk, uk, h);
    }
    return d;
  }

  Vec boundary_rows(const Vec& v) const {
    return mbc_.eval(v.segment(x_index(0), n_x()), v.segment(x_index(n_), n_x()), period(v));
  }

  Vec constraints(const Vec& v) const {
    Vec c(n_constraints());
    c << defects(v), boundary_rows(v);
    return c;
  }

  // Dense constraint Jacobian; each defect block only depends on
  // (x_k, u_k, T), so central differences are taken block by block.
  Mat jacobian(const Vec& v, double fd_step = 1e-6) const {
    Mat j = Mat::Zero(n_constraints(), n_vars());
    const double period_v = period(v);
    const Index nx = n_x(), nu = n_u();
    for (Index k = 0; k < n_; ++k) {
      const Vec xk = v.segment(x_index(k), nx);
      const Vec uk = v.segment(u_index(k), nu);
      const Index row = k * nx;
      j.block(row, x_index(k + 1), nx, nx).setIdentity();
      auto local = [&](const Vec& x, const Vec& u, double t) { return flow(x, u, t / static_cast<double>(n_)); };
      for (Index i = 0; i < nx; ++i) {
        const double e = fd_step * std::max(1.0, std::abs(xk(i)));
        Vec xp = xk, xm = xk;
        xp(i) += e;
        xm(i) -= e;
        j.block(row, x_index(k) + i, nx, 1) = -(local(xp, uk, period_v) - local(xm, uk, period_v)) / (2.0 * e);
      }
      for (Index i = 0; i < nu; ++i) {
        const double e = fd_step * std::max(1.0, std::abs(uk(i)));
        Vec up = uk, um = uk;
        up(i) += e;
        um(i) -= e;
        j.block(row, u_index(k) + i, nx, 1) = -(local(xk, up, period_v) - local(xk, um, period_v)) / (2.0 * e);
      }
      // relative step keeps both stencil points at positive periods
      const double e = fd_step * std::abs(period_v);
      j.block(row, t_index(), nx, 1) = -(local(xk, uk, period_v + e) - local(xk, uk, period_v - e)) / (2.0 * e);
    }
    // boundary rows depend on x_0, x_N and T
    const Index row = n_defects();
    std::vector<Index> cols;
    for (Index i = 0; i < nx; ++i) cols.push_back(x_index(0) + i);
    for (Index i = 0; i < nx; ++i) cols.push_back(x_index(n_) + i);
    cols.push_back(t_index());
    for (Index col : cols) {
      const double e = fd_step * std::max(1.0, std::abs(v(col)));
      Vec vp = v, vm = v;
      vp(col) += e;
      vm(col) -= e;
      j.block(row, col, n_boundary(), 1) = (boundary_rows(vp) - boundary_rows(vm)) / (2.0 * e);
    }
    return j;
  }

 private:
  const ControlAffineSystem* sys_;
  MixedBoundaryConstraint mbc_;
  Index n_;
  double scale_;
  int substeps_;
};

inline TranscribedNlp transcribe(const ControlAffineSystem& sys, const MixedBoundaryConstraint& mbc,
                                 Index knots, double cost_scale = 1.0, int substeps = 1) {
  return TranscribedNlp(sys, mbc, knots, cost_scale, substeps);
}

struct NlpConfig {
  double rho0 = 1e6;  // relative to the normalized objective
  double growth = 10.0;
  int max_outer = 30;
  double feas_tol = 1e-6;
  double stall = 0.25;
  double fd_step = 1e-6;
  LbfgsOptions inner{20, 3000, 1e-11, 1e-16};
  int projection_iters = 20;
  // Objective weight inside the AL is 1 / max(c(start), floor), so costs of
  // very different magnitude see comparable penalty balance.
  bool normalize_objective = true;
  double normalize_floor = 1e-12;
  // Start from the Gauss-Newton projection of the guess with least-squares
  // multipliers, instead of lambda = 0.
  bool warm_multipliers = true;
};

struct NlpIteration {
  int outer = 0;
  int inner_iters = 0;
  double cost = 0.0;
  double violation = 0.0;
  double rho = 0.0;
};

struct NlpSolution {
  Vec v;
  Trajectory x;
  Mat u;
  double period = 0.0;
  double c = 0.0;
  double max_defect = 0.0;
  double mbc_violation = 0.0;
  Vec multipliers;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  std::vector<NlpIteration> log;
};

struct NlpNonConvergence : ConvergenceError {
  NlpNonConvergence(const std::string& what, NlpSolution best)
      : ConvergenceError(what), best_iterate(std::move(best)) {}
  NlpSolution best_iterate;
};

namespace detail {

inline void fill_solution(const TranscribedNlp& nlp, const Vec& v, NlpSolution& s) {
  s.v = v;
  s.period = nlp.period(v);
  s.x.times = Vec::LinSpaced(nlp.knots() + 1, 0.0, s.period);
  s.x.states = nlp.states(v);
  s.u = nlp.inputs(v);
  s.c = nlp.objective(v);
  const Vec d = nlp.defects(v);
  s.max_defect = d.size() ? d.lpNorm<Eigen::Infinity>() : 0.0;
  const Vec b = nlp.boundary_rows(v);
  s.mbc_violation = b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0;
}

}  // namespace detail

// Gauss-Newton restoration of c(v) = 0 with minimum-norm steps, halved until
// the residual norm decreases.
inline Vec project_feasible(const TranscribedNlp& nlp, Vec v, int iters = 20, double tol = 1e-12,
                            double fd_step = 1e-6) {
  auto residual = [&](const Vec& w) {
    try {
      return nlp.constraints(w).norm();
    } catch (const NumericError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double r = residual(v);
  for (int it = 0; it < iters && std::isfinite(r); ++it) {
    const Vec c = nlp.constraints(v);
    if (c.lpNorm<Eigen::Infinity>() <= tol) break;
    Mat j;
    try {
      j = nlp.jacobian(v, fd_step);
    } catch (const NumericError&) {
      break;
    }
    const Vec step = j.transpose() * (j * j.transpose()).ldlt().solve(c);
    bool moved = false;
    for (double a = 1.0; a > 1e-6; a *= 0.5) {
      const Vec w = v - a * step;
      const double rw = residual(w);
      if (rw < r) {
        v = w;
        r = rw;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return v;
}

/// Augmented Lagrangian over all equalities (defects and boundary rows) with an
/// L-BFGS inner loop, followed by a feasibility projection.
inline NlpSolution solve_nlp(const TranscribedNlp& nlp, const Vec& guess, const NlpConfig& cfg = {}) {
  if (guess.size() != nlp.n_vars()) throw ConfigError("solve_nlp: guess has wrong dimension");
  if (!(guess(nlp.t_index()) > 0.0)) throw ConfigError("solve_nlp: guess period must be positive");
  Vec v = guess;
  Vec lambda = Vec::Zero(nlp.n_constraints());
  double rho = cfg.rho0;
  double prev = std::numeric_limits<double>::infinity();
  NlpSolution out;
  if (cfg.warm_multipliers) v = project_feasible(nlp, v, cfg.projection_iters, 1e-12, cfg.fd_step);
  // Scale from the (projected) start: a guess with zero inputs would otherwise
  // inflate the objective weight by orders of magnitude.
  const double fw = cfg.normalize_objective ? 1.0 / std::max(nlp.objective(v), cfg.normalize_floor) : 1.0;
  if (cfg.warm_multipliers) {
    const Mat j = nlp.jacobian(v, cfg.fd_step);
    lambda = -(j * j.transpose()).ldlt().solve(j * (fw * nlp.objective_gradient(v)));
    if (!lambda.allFinite()) lambda.setZero();
  }

  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    auto fg = [&](const Vec& w, Vec& grad) -> double {
      if (!(w(nlp.t_index()) > 0.0)) {
        grad = Vec::Zero(w.size());
        return std::numeric_limits<double>::infinity();
      }
      try {
        const Vec c = nlp.constraints(w);
        const Mat j = nlp.jacobian(w, cfg.fd_step);
        const Vec mult = lambda + rho * c;
        grad = fw * nlp.objective_gradient(w) + j.transpose() * mult;
        return fw * nlp.objective(w) + lambda.dot(c) + 0.5 * rho * c.squaredNorm();
      } catch (const NumericError&) {
        grad = Vec::Zero(w.size());
        return std::numeric_limits<double>::infinity();
      }
    };
    // Gauss-Newton seed Hessian of the AL at the outer iterate.
    Mat h0;
    try {
      const Mat j = nlp.jacobian(v, cfg.fd_step);
      h0 = rho * (j.transpose() * j);
    } catch (const NumericError&) {
      break;  // left the integrable region; hand the iterate to the projection
    }
    const double h = nlp.period(v) / static_cast<double>(nlp.knots());
    h0.diagonal().segment(nlp.u_index(0), nlp.knots() * nlp.n_u()).array() += fw * 2.0 * nlp.cost_scale() * h;
    const double mu = 1e-10 * h0.trace() / static_cast<double>(h0.rows());
    h0.diagonal().array() += mu;
    const Eigen::LDLT<Mat> h0_ldlt(h0);
    const LbfgsResult r = lbfgs(fg, v, cfg.inner, [&](const Vec& q) { return Vec(h0_ldlt.solve(q)); });
    if (std::isfinite(r.f)) v = r.x;
    out.inner_iterations += r.iters;
    const Vec c = nlp.constraints(v);
    const double viol = c.lpNorm<Eigen::Infinity>();
    out.log.push_back({outer, r.iters, nlp.objective(v), viol, rho});
    out.outer_iterations = outer + 1;
    lambda += rho * c;
    if (viol <= cfg.feas_tol && r.iters <= 1) break;
    if (viol > cfg.stall * prev) rho *= cfg.growth;
    prev = viol;
  }

  v = project_feasible(nlp, v, cfg.projection_iters, 1e-12, cfg.fd_step);
  detail::fill_solution(nlp, v, out);
  out.multipliers = lambda / fw;
  out.converged = out.max_defect <= cfg.feas_tol && out.mbc_violation <= cfg.feas_tol;
  if (!out.converged) {
    std::ostringstream os;
    os << "solve_nlp: not converged (defect " << out.max_defect << ", boundary " << out.mbc_violation << ")";
    throw NlpNonConvergence(os.str(), out);
  }
  return out;
}

struct SolutionCheck {
  double cost = 0.0;
  double max_defect = 0.0;
  double mbc_violation = 0.0;
  double energy_start = std::numeric_limits<double>::quiet_NaN();
  double energy_end = std::numeric_limits<double>::quiet_NaN();
};

// Recomputes cost and residuals from the trajectories alone.
inline SolutionCheck evaluate_solution(const TranscribedNlp& nlp, const NlpSolution& s,
                                       const std::function<double(const Vec&)>& energy = {}) {
  const Vec v = nlp.pack(s.x.states, s.u, s.period);
  SolutionCheck chk;
  chk.cost = nlp.objective(v);
  const Vec d = nlp.defects(v);
  chk.max_defect = d.size() ? d.lpNorm<Eigen::Infinity>() : 0.0;
  const Vec b = nlp.boundary_rows(v);
  chk.mbc_violation = b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0;
  if (energy) {
    chk.energy_start = energy(s.x.states.row(0).transpose());
    chk.energy_end = energy(s.x.states.row(s.x.states.rows() - 1).transpose());
  }
  return chk;
}

struct ProbeResult {
  double worst_change = std::numeric_limits<double>::infinity();  // min over probes of c' - c
  double max_violation = 0.0;  // residual after restoring feasibility
};

// Random perturbations of norm `magnitude` tangent to the constraint set,
// projected back onto it; reports the most negative cost change.
inline ProbeResult optimality_probe(const TranscribedNlp& nlp, const Vec& v, int count = 20,
                                    double magnitude = 1e-3, std::uint64_t seed = 7) {
  const Mat j = nlp.jacobian(v);
  Eigen::JacobiSVD<Mat> svd(j, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-10 * sv(0)) ++rank;
  const Mat null = svd.matrixV().rightCols(j.cols() - rank);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double base = nlp.objective(v);
  ProbeResult res;
  for (int i = 0; i < count; ++i) {
    Vec coef(null.cols());
    for (Index k = 0; k < coef.size(); ++k) coef(k) = normal(rng);
    Vec d = null * coef;
    d *= magnitude / d.norm();
    const Vec w = project_feasible(nlp, v + d, 20, 1e-13);
    res.worst_change = std::min(res.worst_change, nlp.objective(w) - base);
    res.max_violation = std::max(res.max_violation, nlp.constraints(w).lpNorm<Eigen::Infinity>());
  }
  return res;
}

}  // namespace koopt
