#include "koopt/numerics.hpp"
#include "koopt/systems.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace koopt;

namespace {

Mat random_matrix(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Mat m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST(Expm, ZeroGivesIdentity) { EXPECT_EQ(expm(Mat::Zero(4, 4)), Mat::Identity(4, 4)); }

TEST(Expm, Diagonal) {
  const Vec d = to_vec({-2.0, 0.0, 0.5, 3.0});
  const Mat e = expm(d.asDiagonal().toDenseMatrix());
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(e(i, i), std::exp(d(i)), 1e-14 * std::exp(d(i)));
  EXPECT_NEAR((e - Mat(e.diagonal().asDiagonal())).norm(), 0.0, 1e-15);
}

TEST(Expm, QuarterRotation) {
  Mat a(2, 2);
  a << 0.0, -kPi / 2, kPi / 2, 0.0;
  Mat r(2, 2);
  r << 0.0, -1.0, 1.0, 0.0;
  EXPECT_LT((expm(a) - r).norm(), 1e-14);
}

TEST(Expm, SemigroupProperty) {
  const Mat a = random_matrix(8, 8, 5);
  const Mat e1 = expm(a);
  const Mat e2 = expm(2.0 * a);
  EXPECT_LT((e1 * e1 - e2).norm() / e2.norm(), 1e-12);
}

TEST(Expm, NonFiniteThrows) {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = std::nan("");
  EXPECT_THROW(expm(a), NumericError);
}

TEST(Zoh, ZeroDynamicsIntegratesTheInput) {
  const ZohPair z = zoh_discretize(Mat::Zero(2, 2), (Mat(2, 1) << 1.0, 2.0).finished(), 0.25);
  EXPECT_EQ(z.ad, Mat::Identity(2, 2));
  EXPECT_LT((z.bd - (Mat(2, 1) << 0.25, 0.5).finished()).norm(), 1e-16);
}

TEST(Zoh, ScalarClosedForm) {
  const double a = -0.7, b = 1.3, h = 0.4;
  const ZohPair z = zoh_discretize(Mat::Constant(1, 1, a), Mat::Constant(1, 1, b), h);
  EXPECT_NEAR(z.ad(0, 0), std::exp(a * h), 1e-15);
  EXPECT_NEAR(z.bd(0, 0), (std::exp(a * h) - 1.0) / a * b, 1e-15);
}

TEST(Zoh, MatchesFineRk4) {
  const Mat a = oscillator_matrix("conventional");
  const Mat b = (Mat(2, 1) << 0.0, 1.0).finished();
  const auto sys = make_oscillator("conventional");
  const double h = 0.3;
  const ZohPair z = zoh_discretize(a, b, h);
  const Vec x0 = to_vec({0.4, -0.2});
  const Vec u = to_vec({0.8});
  Vec x = x0;
  for (int s = 0; s < 256; ++s) x = rk4_step(sys, x, u, h / 256);
  EXPECT_LT((z.ad * x0 + z.bd * u - x).norm(), 1e-10);
}

TEST(Zoh, RejectsBadStep) { EXPECT_THROW(zoh_discretize(Mat::Zero(1, 1), Mat::Zero(1, 1), 0.0), NumericError); }

TEST(Pinv, Identity) {
  const auto p = pinv_svd(Mat::Identity(3, 3));
  EXPECT_EQ(p.rank, 3);
  EXPECT_LT((p.pinv - Mat::Identity(3, 3)).norm(), 1e-15);
}

TEST(Pinv, RankOne) {
  const Vec a = to_vec({1.0, 2.0, 2.0});
  const Vec b = to_vec({3.0, 4.0});
  const Mat m = a * b.transpose();
  const auto p = pinv_svd(m);
  EXPECT_EQ(p.rank, 1);
  const Mat expected = b * a.transpose() / (a.squaredNorm() * b.squaredNorm());
  EXPECT_LT((p.pinv - expected).norm(), 1e-15);
}

TEST(Pinv, PenroseIdentities) {
  Mat m = random_matrix(6, 9, 2);
  m.row(5) = m.row(0) + m.row(1);  // rank 5
  const auto p = pinv_svd(m);
  const Mat& x = p.pinv;
  EXPECT_EQ(p.rank, 5);
  EXPECT_LT((m * x * m - m).norm(), 1e-12);
  EXPECT_LT((x * m * x - x).norm(), 1e-12);
  EXPECT_LT((m * x - (m * x).transpose()).norm(), 1e-12);
  EXPECT_LT((x * m - (x * m).transpose()).norm(), 1e-12);
}

TEST(Kkt, Unconstrained) {
  const Mat h = (Mat(2, 2) << 2.0, 0.0, 0.0, 4.0).finished();
  const Vec g = to_vec({-2.0, 4.0});
  const auto r = solve_kkt(h, g, Mat(0, 2), Vec(0), 0.0);
  EXPECT_LT((r.primal - to_vec({1.0, -1.0})).norm(), 1e-14);
}

TEST(Kkt, SymmetricEqualityConstraint) {
  // min x^2 + y^2 s.t. x + y = 2
  const Mat h = 2.0 * Mat::Identity(2, 2);
  const auto r = solve_kkt(h, Vec::Zero(2), Mat::Ones(1, 2), to_vec({2.0}), 0.0);
  EXPECT_LT((r.primal - to_vec({1.0, 1.0})).norm(), 1e-14);
  EXPECT_NEAR(r.dual(0), -2.0, 1e-14);
  EXPECT_LT(r.stationarity, 1e-13);
  EXPECT_LT(r.feasibility, 1e-13);
}

TEST(Kkt, MatchesNullspaceOracle) {
  const Mat q = random_matrix(10, 10, 7);
  const Mat h = q * q.transpose() + Mat::Identity(10, 10);
  const Vec g = random_matrix(10, 1, 8);
  const Mat a = random_matrix(3, 10, 9);
  const Vec b = random_matrix(3, 1, 10);
  const auto r = solve_kkt(h, g, a, b, 0.0);
  // x = x_p + N y, y minimizes the reduced quadratic
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Mat n = svd.matrixV().rightCols(7);
  const Vec xp = a.transpose() * (a * a.transpose()).ldlt().solve(b);
  const Vec y = (n.transpose() * h * n).ldlt().solve(-n.transpose() * (h * xp + g));
  EXPECT_LT((r.primal - (xp + n * y)).norm(), 1e-9);
}

TEST(Kkt, FeasiblePerturbationsDoNotImprove) {
  const Mat q = random_matrix(6, 6, 17);
  const Mat h = q * q.transpose() + 0.1 * Mat::Identity(6, 6);
  const Vec g = random_matrix(6, 1, 18);
  const Mat a = random_matrix(2, 6, 19);
  const Vec b = random_matrix(2, 1, 20);
  const auto r = solve_kkt(h, g, a, b, 0.0);
  auto f = [&](const Vec& x) { return 0.5 * x.dot(h * x) + g.dot(x); };
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Mat n = svd.matrixV().rightCols(4);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 20; ++i) {
    Vec y(4);
    for (Index k = 0; k < 4; ++k) y(k) = nd(rng);
    const Vec d = 1e-3 * n * y;
    EXPECT_GE(f(r.primal + d) - f(r.primal), -1e-14);
  }
}

TEST(Kkt, SingularSystemIsDegenerate) {
  EXPECT_THROW(solve_kkt(Mat::Zero(2, 2), Vec::Zero(2), Mat(0, 2), Vec(0), 0.0), DegenerateQpError);
}

TEST(Kkt, AsymmetricHessianRejected) {
  const Mat h = (Mat(2, 2) << 1.0, 1.0, 0.0, 1.0).finished();
  EXPECT_THROW(solve_kkt(h, Vec::Zero(2), Mat(0, 2), Vec(0)), NumericError);
}

TEST(Pearson, KnownValue) {
  const Vec a = to_vec({1.0, 2.0, 3.0});
  const Vec b = to_vec({2.0, 4.0, 7.0});
  // centered: (-1, 0, 1) and (-7/3, -1/3, 8/3), so r = 5 / sqrt(2 * 114 / 9)
  const double expected = 5.0 / std::sqrt(2.0 * (49.0 + 1.0 + 64.0) / 9.0);
  EXPECT_NEAR(pearson(a, b), expected, 1e-15);
  EXPECT_NEAR(expected, 0.9933992677987828, 1e-15);
}

TEST(Pearson, SignAndAffineInvariance) {
  const Vec a = to_vec({0.3, -1.0, 2.5, 0.7});
  EXPECT_NEAR(pearson(a, a), 1.0, 1e-15);
  EXPECT_NEAR(pearson(a, -a), -1.0, 1e-15);
  const Vec b = to_vec({1.0, 0.0, -2.0, 4.0});
  const Vec b2 = (3.0 * b.array() + 7.0).matrix();
  EXPECT_NEAR(pearson(a, b), pearson(a, b2), 1e-14);
}

TEST(Pearson, ZeroVarianceThrows) {
  EXPECT_THROW(pearson(to_vec({1.0, 1.0, 1.0}), to_vec({1.0, 2.0, 3.0})), NumericError);
  EXPECT_THROW(pearson(to_vec({1.0}), to_vec({1.0})), NumericError);
}

TEST(Resample, TimeReversedRampCorrelatesNegatively) {
  Trajectory t;
  t.times = Vec::LinSpaced(11, 0.0, 2.0);
  t.states = Vec::LinSpaced(11, 0.0, 1.0);
  Trajectory r = t;
  r.states = t.states.colwise().reverse();
  const auto [a, b] = resample_common_grid(t, r, 101);
  EXPECT_NEAR(mean_pearson(a, b), -1.0, 1e-14);
}

TEST(Resample, DifferentPeriodsShareNormalizedTime) {
  Trajectory a, b;
  a.times = Vec::LinSpaced(201, 0.0, 1.0);
  b.times = Vec::LinSpaced(51, 0.0, 3.0);
  a.states = a.times.unaryExpr([](double t) { return std::sin(2 * kPi * t); });
  b.states = b.times.unaryExpr([](double t) { return std::sin(2 * kPi * t / 3.0); });
  const Mat ra = resample_normalized(a, 101);
  const Mat rb = resample_normalized(b, 101);
  EXPECT_EQ(ra.rows(), 101);
  EXPECT_NEAR(ra(50, 0), 0.0, 1e-12);
  EXPECT_GT(mean_pearson(ra, rb), 0.999);
}

TEST(Resample, LinearInterpolationIsExactOnLines) {
  Trajectory t;
  t.times = to_vec({0.0, 0.3, 1.0});
  t.states = (Mat(3, 1) << 1.0, 1.6, 3.0).finished();
  const Mat r = resample_normalized(t, 5);
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(r(i, 0), 1.0 + 2.0 * i / 4.0, 1e-15);
}
