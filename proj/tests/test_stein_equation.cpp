#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "steingauge/stein_equation.hpp"

using namespace steingauge;

TEST(TestFunctions, GaussianMeans) {
  EXPECT_NEAR(test_identity().eh, 0.0, 1e-14);
  EXPECT_NEAR(test_sine(1).eh, 0.0, 1e-14);
  EXPECT_NEAR(test_cosine().eh, std::exp(-0.5), 1e-12);
  EXPECT_NEAR(test_constant(2.0).eh, 2.0, 1e-13);
}

TEST(TestFunctions, DeclaredNormsChecked) {
  EXPECT_THROW(make_test_function("bad", [](double x) { return std::sin(2 * x); },
                                  [](double x) { return 2 * std::cos(2 * x); },
                                  [](double x) { return -4 * std::sin(2 * x); }, 1.0, 4.0),
               InvalidArgument);
  EXPECT_TRUE(battery_function("sin"));
  EXPECT_FALSE(battery_function("nope"));
}

TEST(Solve, ConstantGivesZero) {
  const auto s = solve(test_constant(3.0));
  EXPECT_LE(sup_norm(s.f), 1e-12);
  EXPECT_LE(holder_check_second(s, 1.0, 1.0, 1.0).max_ratio, 1e-9);
}

TEST(Solve, IdentityGivesMinusOne) {
  const auto s = solve(test_identity());
  for (double f : s.f) ASSERT_NEAR(f, -1.0, 1e-9);
  EXPECT_LE(sup_norm(s.f1), 1e-9);
  EXPECT_LE(holder_check_first(s, 1.0, 1.0).max_ratio, 1e-8);
  EXPECT_LE(holder_check_second(s, 1.0, 1.0, 0.0).max_ratio, 1e-8);
}

TEST(Solve, SineResidualAndHolder) {
  const auto tf = test_sine(1);
  const auto s = solve(tf);
  EXPECT_LE(s.max_residual, 1e-7);
  EXPECT_LE(holder_check_first(s, 1.0, tf.sup_h1).max_ratio, 1.0);
  EXPECT_LE(holder_check_first(s, 0.5, tf.sup_h1).max_ratio, 1.0);
}

TEST(Solve, CosineSecondDerivativeHolder) {
  const auto tf = test_cosine();
  const auto s = solve(tf);
  for (double d : {0.5, 1.0}) EXPECT_LE(holder_check_second(s, d, tf.sup_h1, tf.sup_h2).max_ratio, 1.0);
}

TEST(Solve, ArgumentChecks) {
  EXPECT_THROW(solve(test_sine(1), 3.0), InvalidArgument);
  EXPECT_THROW(solve(test_sine(1), 8.0, 1000), InvalidArgument);
  EXPECT_THROW(holder_check_first(solve(test_sine(1)), 0.0, 1.0), InvalidArgument);
}

TEST(Solve, SupNormBoundsOnBattery) {
  for (const auto& tf : stein_battery()) {
    const auto s = solve(tf);
    EXPECT_LE(s.max_residual, 1e-7) << tf.name;
    EXPECT_LE(sup_norm(s.f1), std::sqrt(2.0 / std::numbers::pi) * tf.sup_h1 + 1e-9) << tf.name;
    EXPECT_LE(sup_norm(s.f2), 2.0 * tf.sup_h1 + 1e-9) << tf.name;
    EXPECT_LE(sup_norm(s.f3), 2.0 * tf.sup_h2 + 1e-9) << tf.name;
  }
}

// f' from the integral representation against a centred finite difference of f.
TEST(Solve, DerivativeConsistency) {
  const auto s = solve(test_tanh(), 8.0, 4001);
  const double h = s.grid[1] - s.grid[0];
  for (std::size_t i = 1; i + 1 < s.grid.size(); i += 37)
    EXPECT_NEAR((s.f[i + 1] - s.f[i - 1]) / (2 * h), s.f1[i], 1e-4);
}

TEST(Holder, PairBudget) {
  const auto r = holder_check_first(solve(test_sine(2)), 0.25, 1.0);
  EXPECT_GT(r.pairs, 64u * 3000u);
  EXPECT_LE(r.pairs, 1'000'000u);
  EXPECT_EQ(r.per_point.size(), 4001u);
}
