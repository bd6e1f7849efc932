#include "koopt/lifting.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace koopt;

TEST(Lifting, LeadingEntriesCopyTheState) {
  const auto dict = pendulum_dictionary();
  const Vec x = to_vec({0.4, -0.3});
  const Vec z = lift(dict, x).z;
  EXPECT_EQ(z.head(2), x);
  EXPECT_EQ(unlift(dict, z), x);
  EXPECT_EQ(dict.recovery_matrix() * z, x);
}

TEST(Lifting, PendulumDictionaryAtRest) {
  const Vec z = lift(pendulum_dictionary(), to_vec({0.0, 0.0})).z;
  Vec expected = Vec::Zero(12);
  expected(3) = 1.0;   // cos x1
  expected(11) = 1.0;  // constant
  EXPECT_EQ(z, expected);
}

TEST(Lifting, PendulumDictionaryValues) {
  const double a = 0.7, b = -1.3;
  const Vec z = lift(pendulum_dictionary(), to_vec({a, b})).z;
  const Vec expected = to_vec({a, b, std::sin(a), std::cos(a), b * std::sin(a), b * std::cos(a),
                               b * b * std::sin(a), b * b * std::cos(a), a * b, a * a, b * b, 1.0});
  EXPECT_LT((z - expected).norm(), 1e-15);
}

TEST(Lifting, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (const auto& dict : {pendulum_dictionary(), walker_dictionary(), affine_dictionary(3)}) {
    for (int trial = 0; trial < 5; ++trial) {
      Vec x(dict.n_x());
      for (Index i = 0; i < x.size(); ++i) x(i) = d(rng);
      const Mat g = lift_gradient(dict, x);
      ASSERT_EQ(g.rows(), dict.n_z());
      ASSERT_EQ(g.cols(), dict.n_x());
      const double h = 1e-5;
      for (Index i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const Vec fd = (dict.eval(xp) - dict.eval(xm)) / (2.0 * h);
        EXPECT_LT((fd - g.col(i)).lpNorm<Eigen::Infinity>(), 1e-6);
      }
    }
  }
}

TEST(Lifting, ManifoldDefect) {
  const auto dict = pendulum_dictionary();
  Vec z = dict.eval(to_vec({0.2, 0.1}));
  EXPECT_EQ(manifold_defect(dict, z), 0.0);
  z(3) += 1.0;
  EXPECT_NEAR(manifold_defect(dict, z), 1.0, 1e-15);
}

TEST(Lifting, RejectsDimensionMismatch) {
  const auto dict = pendulum_dictionary();
  EXPECT_THROW(dict.eval(to_vec({0.0})), DomainError);
  EXPECT_THROW(unlift(dict, Vec::Zero(5)), DomainError);
  EXPECT_THROW(lift(dict, to_vec({std::nan(""), 0.0})), DomainError);
}

TEST(Lifting, StateCopyMustLead) {
  EXPECT_THROW(ObservableDictionary(2, {Term::state(1), Term::state(0)}), ConfigError);
  EXPECT_THROW(ObservableDictionary(2, {Term::state(0)}), ConfigError);
  EXPECT_THROW(ObservableDictionary(1, {Term::state(0), Term::sin({3})}), ConfigError);
}

TEST(Lifting, PolynomialDictionarySizes) {
  EXPECT_EQ(polynomial_dictionary(4, 3).n_z(), 35);
  EXPECT_EQ(polynomial_dictionary(2, 2).n_z(), 6);
  EXPECT_EQ(polynomial_dictionary(2, 1).n_z(), 3);
  const auto labels = polynomial_dictionary(2, 2).labels();
  EXPECT_EQ(labels.size(), 6u);
  EXPECT_THROW(polynomial_dictionary(0, 2), ConfigError);
}

TEST(Lifting, PolynomialDictionaryValues) {
  const auto dict = polynomial_dictionary(2, 3);
  const Vec z = dict.eval(to_vec({2.0, 3.0}));
  // x1 x2 | x1^2 x1x2 x2^2 | x1^3 x1^2x2 x1x2^2 x2^3 | 1
  EXPECT_EQ(z, to_vec({2, 3, 4, 6, 9, 8, 12, 18, 27, 1}));
}

TEST(Lifting, JsonRoundTrip) {
  const auto dict = pendulum_dictionary();
  nlohmann::json j = dict;
  const auto back = dictionary_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.n_z(), dict.n_z());
  EXPECT_EQ(back.labels(), dict.labels());
  const Vec x = to_vec({0.3, 0.9});
  EXPECT_EQ(back.eval(x), dict.eval(x));
}

TEST(Lifting, JsonRejectsUnknownKeysAndKinds) {
  auto j = nlohmann::json::parse(R"({"n_x": 1, "terms": [{"kind": "monomial", "indices": [0], "extra": 1}]})");
  EXPECT_THROW(dictionary_from_json(j), ConfigError);
  j = nlohmann::json::parse(R"({"n_x": 1, "terms": [{"kind": "monomial", "indices": [0]}, {"kind": "tan"}]})");
  EXPECT_THROW(dictionary_from_json(j), ConfigError);
}
