#include "koopt/lower_level.hpp"
#include "koopt/systems.hpp"

#include <gtest/gtest.h>

using namespace koopt;

namespace {

const GeneratorModel& pendulum_model() {
  static const GeneratorModel m = identify(make_pendulum(), pendulum_dictionary(), 5000, 1);
  return m;
}

const GeneratorModel& oscillator_model() {
  static const GeneratorModel m = identify(make_oscillator("conventional"), affine_dictionary(2), 200, 1);
  return m;
}

double deg(double d) { return d * kPi / 180.0; }

LowerLevelProblem pendulum_problem(BoundaryVariant v, double period = 2 * kPi, Index knots = 100) {
  const Vec x = to_vec({deg(40), 0.0});
  return LowerLevelProblem{&pendulum_model(), v, x, x, period, knots, 1.0};
}

const BoundaryVariant kVariants[] = {BoundaryVariant::b0(), BoundaryVariant::bT(), BoundaryVariant::soft(0.5)};

}  // namespace

TEST(Variant, ParseAndValidate) {
  EXPECT_EQ(BoundaryVariant::parse("bT").name(), "bT");
  EXPECT_EQ(BoundaryVariant::parse("soft", 0.25).tag(), "soft_w0.25");
  EXPECT_THROW(BoundaryVariant::parse("b1"), ConfigError);
  EXPECT_THROW(BoundaryVariant::soft(0.0), ConfigError);
  EXPECT_THROW(BoundaryVariant::soft(1.0), ConfigError);
}

TEST(LinearizationPoint, FollowsTheLiftedBoundary) {
  const auto dict = pendulum_dictionary();
  const Vec x0 = to_vec({0.1, 0.2}), xT = to_vec({-0.3, 0.0});
  EXPECT_EQ(choose_linearization_point(BoundaryVariant::b0(), x0, xT, dict), dict.eval(x0));
  EXPECT_EQ(choose_linearization_point(BoundaryVariant::bT(), x0, xT, dict), dict.eval(xT));
  EXPECT_EQ(choose_linearization_point(BoundaryVariant::soft(0.3), x0, xT, dict), dict.eval(x0));
  for (const auto& v : kVariants) EXPECT_EQ(choose_linearization_point(v, x0, x0, dict), dict.eval(x0));
}

TEST(BuildQp, ConstraintRowsPerVariant) {
  const Index nx = 2, nz = 12;
  EXPECT_EQ(build_qp(pendulum_problem(BoundaryVariant::b0())).aeq.rows(), nx);
  EXPECT_EQ(build_qp(pendulum_problem(BoundaryVariant::bT())).aeq.rows(), nx + nz);
  EXPECT_EQ(build_qp(pendulum_problem(BoundaryVariant::soft(0.5))).aeq.rows(), 2 * nx);
}

TEST(BuildQp, HessianIsPositiveSemidefinite) {
  for (const auto& v : {BoundaryVariant::b0(), BoundaryVariant::bT(), BoundaryVariant::soft(0.1),
                        BoundaryVariant::soft(0.9)}) {
    const Mat h = build_qp(pendulum_problem(v, 5.0, 30)).h;
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(h).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-10 * h.norm()) << v.tag();
  }
}

TEST(BuildQp, RejectsBadProblems) {
  auto p = pendulum_problem(BoundaryVariant::b0());
  p.x0 = to_vec({0.0});
  EXPECT_THROW(build_qp(p), ConfigError);
  p = pendulum_problem(BoundaryVariant::b0());
  p.period = -1.0;
  EXPECT_THROW(build_qp(p), DomainError);
  p = pendulum_problem(BoundaryVariant::b0());
  p.knots = 1;
  EXPECT_THROW(build_qp(p), ConfigError);
}

TEST(SolveLower, ZeroBoundaryCostsNothing) {
  const Vec zero = Vec::Zero(2);
  for (const auto& v : {BoundaryVariant::b0(), BoundaryVariant::bT()}) {
    const auto s = solve_lower(LowerLevelProblem{&oscillator_model(), v, zero, zero, 3.0, 50, 1.0});
    EXPECT_LT(s.u.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(s.c, 1e-20);
  }
}

TEST(SolveLower, VariantInvariants) {
  const auto& m = pendulum_model();
  const Mat c = m.recovery_matrix();
  const Vec x0 = to_vec({deg(30), 0.1}), xT = to_vec({deg(20), -0.2});
  for (const auto& v : kVariants) {
    const auto s = solve_lower(LowerLevelProblem{&m, v, x0, xT, 5.0, 60, 1.0});
    const Vec z0 = s.z.row(0).transpose();
    const Vec zn = s.z.row(60).transpose();
    const LowerQp qp = build_qp(LowerLevelProblem{&m, v, x0, xT, 5.0, 60, 1.0});
    for (Index k = 0; k < 60; ++k) {
      const Vec zk = s.z.row(k).transpose();
      const Vec next = qp.zoh.ad * zk + qp.zoh.bd * s.u.row(k).transpose();
      EXPECT_LE((s.z.row(k + 1).transpose() - next).norm(), 1e-9 * (1.0 + zk.norm()));
    }
    switch (v.kind) {
      case BoundaryVariant::Kind::LiftInitial:
        EXPECT_EQ(z0, m.dict.eval(x0));
        EXPECT_EQ(s.manifold_defect(0), 0.0);
        EXPECT_LE((c * zn - xT).norm(), 1e-9);
        break;
      case BoundaryVariant::Kind::LiftTerminal:
        EXPECT_LE((zn - m.dict.eval(xT)).norm(), 1e-9);
        EXPECT_LE((c * z0 - x0).norm(), 1e-9);
        break;
      case BoundaryVariant::Kind::Soft:
        EXPECT_LE((c * z0 - x0).norm(), 1e-9);
        EXPECT_LE((c * zn - xT).norm(), 1e-9);
        break;
    }
    EXPECT_LT(s.dynamics_defect, 1e-9);
    EXPECT_NEAR(s.c, 1.0 * (5.0 / 60) * s.u.squaredNorm(), 1e-15);
  }
}

TEST(SolveLower, MatchesUncondensedOracle) {
  // All z_k and u_k as variables with explicit dynamics rows.
  const Index n = 5;
  for (const auto& v : {BoundaryVariant::b0(), BoundaryVariant::bT()}) {
    const auto p = pendulum_problem(v, 2 * kPi, n);
    const auto& m = *p.model;
    const Index nz = m.n_z(), nx = 2;
    const LowerQp qp = build_qp(p);
    const double h = p.period / n;
    const Index nv = (n + 1) * nz + n;
    Mat hess = Mat::Zero(nv, nv);
    hess.bottomRightCorner(n, n).diagonal().setConstant(2.0 * h);
    const bool lift0 = v.kind == BoundaryVariant::Kind::LiftInitial;
    const Index rows = n * nz + (lift0 ? nz + nx : nx + nz);
    Mat a = Mat::Zero(rows, nv);
    Vec b = Vec::Zero(rows);
    for (Index k = 0; k < n; ++k) {
      a.block(k * nz, (k + 1) * nz, nz, nz) = Mat::Identity(nz, nz);
      a.block(k * nz, k * nz, nz, nz) = -qp.zoh.ad;
      a.block(k * nz, (n + 1) * nz + k, nz, 1) = -qp.zoh.bd;
    }
    Index r = n * nz;
    if (lift0) {
      a.block(r, 0, nz, nz).setIdentity();
      b.segment(r, nz) = m.dict.eval(p.x0);
      a.block(r + nz, n * nz, nx, nx).setIdentity();
      b.segment(r + nz, nx) = p.xT;
    } else {
      a.block(r, 0, nx, nx).setIdentity();
      b.segment(r, nx) = p.x0;
      a.block(r + nx, n * nz, nz, nz).setIdentity();
      b.segment(r + nx, nz) = m.dict.eval(p.xT);
    }
    // z carries no cost but is pinned by the dynamics rows, so the KKT matrix is regular.
    const auto oracle = solve_kkt(hess, Vec::Zero(nv), a, b, 0.0);
    const auto s = solve_lower(p);
    const Vec u_oracle = oracle.primal.tail(n);
    EXPECT_LT((Eigen::Map<const Vec>(s.u.data(), n) - u_oracle).lpNorm<Eigen::Infinity>(), 1e-8) << v.name();
  }
}

TEST(SolveLower, OscillatorMatchesMinimumNormOracle) {
  // b0 on a linear system: u* = Gamma^+ (xT - Phi x0) with the exact ZOH.
  const Mat a = oscillator_matrix("conventional");
  const Mat bmat = (Mat(2, 1) << 0.0, 1.0).finished();
  const Vec x = to_vec({deg(30), 0.0});
  const Index n = 100;
  for (double t : {1.01 * 2 * kPi, 2.01 * 2 * kPi}) {
    const ZohPair z = zoh_discretize(a, bmat, t / n);
    Mat gamma(2, n);
    Mat power = Mat::Identity(2, 2);
    for (Index k = n - 1; k >= 0; --k) {
      gamma.col(k) = power * z.bd;
      power = z.ad * power;
    }
    const Vec u = gamma.transpose() * (gamma * gamma.transpose()).ldlt().solve(x - power * x);
    const double c_oracle = 0.5 * (t / n) * u.squaredNorm();
    const auto s = solve_lower(LowerLevelProblem{&oscillator_model(), BoundaryVariant::b0(), x, x, t, n, 0.5});
    EXPECT_NEAR(s.c, c_oracle, 1e-9 * c_oracle);
  }
}

TEST(SolveLower, OscillatorCostCurveValues) {
  const Vec x = to_vec({deg(30), 0.0});
  auto c = [&](double t_over_2pi) {
    return solve_lower(
               LowerLevelProblem{&oscillator_model(), BoundaryVariant::b0(), x, x, t_over_2pi * 2 * kPi, 100, 0.5})
        .c;
  };
  EXPECT_NEAR(c(1.01), 0.0168, 0.0168 * 0.02);
  EXPECT_NEAR(c(2.01), 0.0307, 0.0307 * 0.02);
}

TEST(SolveLower, SoftWeightTradesCostForAccuracy) {
  std::vector<LowerCostBreakdown> r;
  for (double w : {0.1, 0.5, 0.9}) r.push_back(lower_cost_breakdown(solve_lower(pendulum_problem(BoundaryVariant::soft(w)))));
  for (std::size_t i = 1; i < r.size(); ++i) {
    EXPECT_GE(r[i].c, r[i - 1].c);
    EXPECT_LE(r[i].c_hat, r[i - 1].c_hat);
  }
}

TEST(SolveLower, BreakdownOfHardVariantsIsTheCost) {
  const auto s = solve_lower(pendulum_problem(BoundaryVariant::bT()));
  const auto b = lower_cost_breakdown(s);
  EXPECT_EQ(b.weighted_total, s.c);
}

TEST(SolveLower, SoftReachableBoundaryHasNoLiftingPenalty) {
  const Vec zero = Vec::Zero(2);
  const auto s =
      solve_lower(LowerLevelProblem{&oscillator_model(), BoundaryVariant::soft(0.5), zero, zero, 3.0, 40, 1.0});
  EXPECT_LT(s.c_hat, 1e-12);
}

TEST(SolveLower, DiscretizationRefinementIsStable) {
  const Vec x = to_vec({deg(30), 0.0});
  const double t = 1.005 * 2 * kPi;
  const double c1 = solve_lower(LowerLevelProblem{&oscillator_model(), BoundaryVariant::b0(), x, x, t, 101, 0.5}).c;
  const double c2 = solve_lower(LowerLevelProblem{&oscillator_model(), BoundaryVariant::b0(), x, x, t, 202, 0.5}).c;
  EXPECT_LT(std::abs(c2 - c1) / c1, 0.01);
}
