#pragma once

#include "koopt/gedmd.hpp"
#include "koopt/numerics.hpp"

#include <string>

namespace koopt {

struct BoundaryVariant {
  enum class Kind { LiftInitial, LiftTerminal, Soft };

  Kind kind = Kind::LiftInitial;
  double w = 0.0;

  static BoundaryVariant b0() { return {Kind::LiftInitial, 0.0}; }
  static BoundaryVariant bT() { return {Kind::LiftTerminal, 0.0}; }
  static BoundaryVariant soft(double w) {
    BoundaryVariant v{Kind::Soft, w};
    v.validate();
    return v;
  }

  // "b0", "bT" or "soft"
  static BoundaryVariant parse(const std::string& name, double w = 0.5) {
    if (name == "b0") return b0();
    if (name == "bT") return bT();
    if (name == "soft") return soft(w);
    throw ConfigError("unknown boundary variant '" + name + "' (expected b0, bT or soft)");
  }

  void validate() const {
    if (kind == Kind::Soft && !(w > 0.0 && w < 1.0))
      throw ConfigError("soft boundary weight must lie strictly inside (0, 1)");
    if (kind != Kind::Soft && w != 0.0) throw ConfigError("hard boundary variants carry w = 0");
  }

  bool lifts_initial() const { return kind != Kind::LiftInitial; }

  std::string name() const {
    switch (kind) {
      case Kind::LiftInitial: return "b0";
      case Kind::LiftTerminal: return "bT";
      case Kind::Soft: return "soft";
    }
    return "?";
  }

  std::string tag() const {
    if (kind != Kind::Soft) return name();
    std::string s = std::to_string(w);
    while (s.size() > 1 && s.back() == '0') s.pop_back();
    return "soft_w" + s;
  }
};

struct LowerLevelProblem {
  const GeneratorModel* model = nullptr;
  BoundaryVariant variant;
  Vec x0;
  Vec xT;
  double period = 0.0;
  Index knots = 100;          // N input intervals, N+1 state samples
  double cost_scale = 1.0;    // c = cost_scale * int |u|^2 dt

  void validate() const {
    if (model == nullptr) throw ConfigError("lower level: no model");
    variant.validate();
    if (x0.size() != model->n_x() || xT.size() != model->n_x())
      throw ConfigError("lower level: boundary state dimension mismatch");
    if (!(period > 0.0) || !std::isfinite(period)) throw DomainError("lower level: period must be positive");
    if (knots < 2) throw ConfigError("lower level: need at least two intervals");
    if (!(cost_scale > 0.0)) throw ConfigError("lower level: cost scale must be positive");
    if (!x0.allFinite() || !xT.allFinite()) throw DomainError("lower level: non-finite boundary");
  }
};

inline Vec choose_linearization_point(const BoundaryVariant& v, const Vec& x0, const Vec& xT,
                                      const ObservableDictionary& dict) {
  return v.kind == BoundaryVariant::Kind::LiftTerminal ? dict.eval(xT) : dict.eval(x0);
}

// Condensed QP in v = (z0, u_0, ..., u_{N-1}); for b0 the z0 block is absent.
struct LowerQp {
  Mat h;
  Vec g;
  Mat aeq;
  Vec beq;
  Index z_vars = 0;  // size of the leading z0 block in v
  Vec z0_fixed;      // b0 only
  Vec z_bar;
  ZohPair zoh;
  Mat phi;    // Ad^N
  Mat gamma;  // [Ad^{N-1} Bd, ..., Bd]
};

inline LowerQp build_qp(const LowerLevelProblem& p) {
  p.validate();
  const GeneratorModel& m = *p.model;
  const Index nx = m.n_x(), nz = m.n_z(), nu = m.n_u(), n = p.knots;
  const double step = p.period / static_cast<double>(n);
  const ObservableDictionary& dict = m.dict;

  LowerQp qp;
  qp.z_bar = choose_linearization_point(p.variant, p.x0, p.xT, dict);
  const LiftedLTI lti = linearize(m, qp.z_bar);
  qp.zoh = zoh_discretize(lti.a, lti.b, step);

  qp.gamma.resize(nz, n * nu);
  Mat power = Mat::Identity(nz, nz);
  for (Index k = n - 1; k >= 0; --k) {
    qp.gamma.middleCols(k * nu, nu) = power * qp.zoh.bd;
    power = qp.zoh.ad * power;
  }
  qp.phi = power;

  const Mat c = dict.recovery_matrix();
  const Vec psi0 = dict.eval(p.x0);
  const Vec psiT = dict.eval(p.xT);
  const double w = p.variant.w;
  const double u_weight = 2.0 * (1.0 - w) * p.cost_scale * step;

  if (p.variant.kind == BoundaryVariant::Kind::LiftInitial) {
    qp.z_vars = 0;
    qp.z0_fixed = psi0;
    qp.h = u_weight * Mat::Identity(n * nu, n * nu);
    qp.g = Vec::Zero(n * nu);
    qp.aeq = c * qp.gamma;
    qp.beq = p.xT - c * qp.phi * psi0;
    return qp;
  }

  const Index nv = nz + n * nu;
  qp.z_vars = nz;
  qp.h = Mat::Zero(nv, nv);
  qp.h.bottomRightCorner(n * nu, n * nu).diagonal().setConstant(u_weight);
  qp.g = Vec::Zero(nv);

  Mat terminal(nz, nv);  // z_N = terminal * v
  terminal << qp.phi, qp.gamma;

  if (p.variant.kind == BoundaryVariant::Kind::LiftTerminal) {
    qp.aeq = Mat::Zero(nx + nz, nv);
    qp.aeq.topLeftCorner(nx, nz) = c;
    qp.aeq.bottomRows(nz) = terminal;
    qp.beq.resize(nx + nz);
    qp.beq << p.x0, psiT;
    return qp;
  }

  // soft: w (|z0 - psi(x0)|^2 + |z_N - psi(xT)|^2)
  qp.h.topLeftCorner(nz, nz).diagonal().array() += 2.0 * w;
  qp.h.noalias() += 2.0 * w * terminal.transpose() * terminal;
  qp.h = 0.5 * (qp.h + qp.h.transpose());
  qp.g.head(nz) -= 2.0 * w * psi0;
  qp.g.noalias() -= 2.0 * w * terminal.transpose() * psiT;
  qp.aeq = Mat::Zero(2 * nx, nv);
  qp.aeq.topLeftCorner(nx, nz) = c;
  qp.aeq.bottomRows(nx) = c * terminal;
  qp.beq.resize(2 * nx);
  qp.beq << p.x0, p.xT;
  return qp;
}

struct LowerLevelSolution {
  Mat z;  // (N+1) x n_z
  Mat u;  // N x n_u
  double period = 0.0;
  double c = 0.0;
  double c_hat = 0.0;
  double w = 0.0;
  KktResult kkt;
  Vec manifold_defect;  // per sample
  double dynamics_defect = 0.0;

  Index knots() const { return u.rows(); }

  Trajectory state_trajectory(Index n_x) const {
    Trajectory t;
    t.times = Vec::LinSpaced(z.rows(), 0.0, period);
    t.states = z.leftCols(n_x);
    return t;
  }
};

inline LowerLevelSolution solve_lower(const LowerLevelProblem& p) {
  const LowerQp qp = build_qp(p);
  const GeneratorModel& m = *p.model;
  const Index nz = m.n_z(), nu = m.n_u(), n = p.knots;
  const double step = p.period / static_cast<double>(n);

  LowerLevelSolution s;
  s.period = p.period;
  s.w = p.variant.w;
  s.kkt = solve_kkt(qp.h, qp.g, qp.aeq, qp.beq);

  const Vec z0 = qp.z_vars > 0 ? Vec(s.kkt.primal.head(nz)) : qp.z0_fixed;
  const Vec uvec = s.kkt.primal.tail(n * nu);
  s.u = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      uvec.data(), n, nu);

  s.z.resize(n + 1, nz);
  s.z.row(0) = z0.transpose();
  Vec z = z0;
  for (Index k = 0; k < n; ++k) {
    const Vec uk = s.u.row(k).transpose();
    const Vec next = qp.zoh.ad * z + qp.zoh.bd * uk;
    z = next;
    s.z.row(k + 1) = z.transpose();
  }
  if (!s.z.allFinite()) throw DegenerateQpError("solve_lower: non-finite lifted trajectory", 0.0);

  // The recursion above is the definition of the trajectory; the defect
  // against the condensed terminal map measures roundoff in the condensing.
  const Vec zn_condensed = qp.phi * z0 + qp.gamma * uvec;
  s.dynamics_defect = (zn_condensed - s.z.row(n).transpose()).norm() / (1.0 + z0.norm());

  s.c = p.cost_scale * step * s.u.squaredNorm();
  s.c_hat = (z0 - m.dict.eval(p.x0)).squaredNorm() +
            (s.z.row(n).transpose() - m.dict.eval(p.xT)).squaredNorm();
  s.manifold_defect.resize(n + 1);
  for (Index k = 0; k <= n; ++k) s.manifold_defect(k) = manifold_defect(m.dict, s.z.row(k).transpose());
  return s;
}

struct LowerCostBreakdown {
  double c = 0.0;
  double c_hat = 0.0;
  double weighted_total = 0.0;
};

inline LowerCostBreakdown lower_cost_breakdown(const LowerLevelSolution& s) {
  return {s.c, s.c_hat, (1.0 - s.w) * s.c + s.w * s.c_hat};
}

}  // namespace koopt
