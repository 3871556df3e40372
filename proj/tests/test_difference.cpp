#include <gtest/gtest.h>

#include <cmath>

#include "steingauge/difference.hpp"
#include "steingauge/harness/inequality_battery.hpp"
#include "steingauge/profile.hpp"

using namespace steingauge;

namespace {

std::vector<double> v(std::initializer_list<double> l) { return l; }

const DistributionSpec kTwoPoint = DistributionSpec::finite_support({{0.0, 0.5}, {2.0, 0.5}});
const DistributionSpec kSkew = DistributionSpec::finite_support({{-1.0, 0.3}, {0.5, 0.1}, {2.0, 0.6}});

// Same statistic without its closed form, so the generic paths are used.
StatisticModel strip(StatisticModel m) {
  m.closed_form.reset();
  m.family = BlackBoxInfo{"stripped"};
  return m;
}

}  // namespace

TEST(DiffAlpha, PartialSumAnyAlpha) {
  const auto ps = partial_sum(ProductSpace({kTwoPoint, DistributionSpec::rademacher(), kTwoPoint}));
  for (double a : {0.0, 0.3, 1.0}) {
    EXPECT_EQ(diff_alpha(ps, v({2, -1, 0}), 0, a).value, 1.0);
    EXPECT_EQ(diff_alpha(ps, v({2, -1, 0}), 2, a).value, -1.0);
  }
}

TEST(DiffAlpha, ProductExample) {
  const auto p = product_example(3);
  EXPECT_EQ(diff_alpha(p, v({1, 1, -1}), 0, 1.0).value, 0.0);
  EXPECT_EQ(diff_alpha(p, v({1, 1, -1}), 1, 1.0).value, 0.0);
  EXPECT_DOUBLE_EQ(diff_alpha(p, v({1, 1, -1}), 0, 0.5).value, -0.5);
  const auto s = strip(p);
  EXPECT_DOUBLE_EQ(diff_alpha(s, v({1, 1, -1}), 0, 0.5).value, -0.5);
}

TEST(ZAlpha, Examples) {
  const auto ps = partial_sum(ProductSpace({kTwoPoint, kTwoPoint, DistributionSpec::rademacher()}));
  EXPECT_DOUBLE_EQ(z_alpha(ps, v({2, 0, -1}), 0.4).value, 3.0);
  for (std::size_t n : {3, 6}) {
    std::vector<double> x(n, 1.0);
    x[1] = -1.0;
    EXPECT_DOUBLE_EQ(z_alpha(product_example(n), x, 0.0).value, static_cast<double>(n - 1));
  }
  EXPECT_DOUBLE_EQ(z_alpha(product_example(3), v({1, 1, -1}), 1.0).value, 4.0);
  EXPECT_DOUBLE_EQ(z_alpha(strip(product_example(3)), v({1, 1, -1}), 1.0).value, 4.0);
}

TEST(ZAlphaBeta, PartialSumFormula) {
  const auto sp = ProductSpace({kSkew, kTwoPoint, kSkew});
  const auto ps = partial_sum(sp);
  const auto x = v({0.5, 2.0, -1.0});
  double expected = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double y = x[k] - sp[k].mean();
    expected += 0.5 * (y * y * y - 3.0 * sp[k].variance() * y);
  }
  EXPECT_NEAR(z_alpha_beta(ps, x, 0.3, 0.8).value, expected, 1e-14);
  EXPECT_NEAR(z_alpha_beta(strip(ps), x, 0.3, 0.8).value, expected, 1e-12);
  const auto r = partial_sum(ProductSpace::iid(DistributionSpec::rademacher(), 4));
  EXPECT_DOUBLE_EQ(z_alpha_beta(r, v({1, 1, -1, 1}), 0.5, 0.5).value, -2.0);
}

TEST(ZAlphaBeta, ProductExampleAlphaZero) {
  const auto p = product_example(5);
  const EnumerableSpace es(p.space);
  std::vector<double> x(5);
  for (double beta : {0.0, 0.5, 1.0})
    for (std::size_t idx = 0; idx < es.size(); ++idx) {
      es.decode(idx, x);
      ASSERT_NEAR(z_alpha_beta(p, x, 0.0, beta).value, -p(x), 1e-12);
    }
}

TEST(PointEvaluators, BudgetMissing) {
  const auto bb = black_box(ProductSpace::iid(DistributionSpec::uniform_symmetric(1.0), 3),
                            [](std::span<const double> x) { return x[0] * x[1] + x[2]; });
  EXPECT_THROW(diff_alpha(bb, v({0.1, 0.2, 0.3}), 0, 0.5), BudgetMissing);
  McBudget b;
  b.inner = 512;
  // D_0^(1/2) of x0 x1 + x2 is x0 x1 / 2 (forward half integrates x1 out).
  const auto e = diff_alpha(bb, v({0.5, 0.8, 0.3}), 0, 0.5, b);
  EXPECT_GT(e.se, 0.0);
  EXPECT_LE(std::abs(e.value - 0.2), 5.0 * e.se + 1e-12);
}

TEST(CovarianceIdentity, Examples) {
  const auto r4 = ProductSpace::iid(DistributionSpec::rademacher(), 4);
  const auto ps = partial_sum(r4);
  for (double a : {0.0, 0.5, 1.0}) EXPECT_LE(covariance_identity_residual(r4, ps.evaluate, ps.evaluate, a), 1e-9);
  const auto cst = [](std::span<const double>) { return 2.5; };
  EXPECT_EQ(covariance_identity_residual(r4, cst, ps.evaluate, 0.5), 0.0);
  const auto p3 = product_example(3);
  EXPECT_LE(covariance_identity_residual(p3.space, p3.evaluate, p3.evaluate, 0.5), 1e-9);
  EXPECT_DOUBLE_EQ(
      enumerate_expectation(p3.space, [&](std::span<const double> x) { return p3(x) * p3(x); }), 2.0);
}

TEST(CovarianceBattery, NoViolations) {
  const BatteryReport rep = covariance_battery(20260101, 220);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.passed()) << c.name << " viol=" << c.max_violation << " res=" << c.max_residual;
  EXPECT_GE(rep.statistics, 200u);
}

TEST(Profile, RademacherSumExact) {
  const auto ps = partial_sum(ProductSpace::iid(DistributionSpec::rademacher(), 4));
  for (const auto& model : {ps, strip(ps)}) {
    const DiffProfile p = profile(model, {0.5, 0.5, 0.5}, 1.0, ProfileLevel::d2);
    for (double m : p.entry(Entry::m2)) EXPECT_NEAR(m, 1.0, 1e-14);
    for (double z : p.entry(Entry::z2)) EXPECT_NEAR(z, 0.0, 1e-14);
    EXPECT_NEAR(p.variance.value, 4.0, 1e-14);
    EXPECT_NEAR(p.third_moment->value, 0.0, 1e-14);
  }
}

TEST(Profile, ConstantStatisticIsZero) {
  const auto bb = black_box(ProductSpace::iid(kSkew, 4), [](std::span<const double>) { return 3.0; });
  const DiffProfile p = profile(bb, {}, 1.0, ProfileLevel::d2);
  for (Entry e : kAllEntries)
    for (double x : p.entry(e)) EXPECT_EQ(x, 0.0) << entry_name(e);
}

TEST(Profile, ProductExampleSigma) {
  const DiffProfile p = profile(product_example(5), {}, 1.0);
  EXPECT_EQ(p.variance.value, 4.0);
  const DiffProfile q = profile(strip(product_example(5)), {}, 1.0);
  EXPECT_NEAR(q.variance.value, 4.0, 1e-13);
}

TEST(Profile, AnalyticMatchesEnumeration) {
  for (const auto& model : {partial_sum(ProductSpace({kSkew, kTwoPoint, kSkew, DistributionSpec::rademacher()})),
                            product_example(6)}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      const AlphaParams ap{alpha, 0.3, 0.7};
      const DiffProfile a = profile(model, ap, 0.6);
      const DiffProfile e = profile(strip(model), ap, 0.6);
      EXPECT_NE(a.method, e.method);
      for (Entry en : kD1Entries)
        for (std::size_t k = 0; k < a.n; ++k)
          EXPECT_NEAR(a.entry(en)[k], e.entry(en)[k], 1e-10) << model.name << " " << entry_name(en) << " k=" << k;
    }
  }
  const auto sym = partial_sum(ProductSpace({kTwoPoint, DistributionSpec::rademacher(), kTwoPoint}));
  const DiffProfile a = profile(sym, {0.5, 0.5, 0.5}, 0.6, ProfileLevel::d2);
  const DiffProfile e = profile(strip(sym), {0.5, 0.5, 0.5}, 0.6, ProfileLevel::d2);
  for (Entry en : kAllEntries)
    for (std::size_t k = 0; k < a.n; ++k) EXPECT_NEAR(a.entry(en)[k], e.entry(en)[k], 1e-10) << entry_name(en);
}

TEST(Profile, MomentGate) {
  const auto ps = partial_sum(ProductSpace::iid(DistributionSpec::standardized_pareto(3.2), 4));
  EXPECT_NO_THROW(profile(ps, {}, 1.0));
  EXPECT_THROW(profile(ps, {}, 0.5, ProfileLevel::d2), MomentDoesNotExist);
  EXPECT_THROW(profile(ps, {}, 1.5), InvalidArgument);
}

// Inner integrals over pairs and triples are Monte Carlo here; m1/m2 only
// need exact single-coordinate integrals, so they are unbiased.
TEST(Profile, NestedMonteCarloAgreesWithExact) {
  const auto sp = ProductSpace({kSkew, kTwoPoint, kSkew, kTwoPoint});
  const auto bb = black_box(sp, [](std::span<const double> x) { return x[0] * x[1] + x[2] * x[3] * x[0] - x[1] * x[3]; });
  const AlphaParams ap{1.0, 0.0, 0.0};
  const DiffProfile exact = profile(bb, ap, 1.0);
  McBudget b;
  b.outer = 2000;
  b.inner = 8;
  b.exact_set_limit = 3;
  b.seed = 5;
  const DiffProfile mc = profile(bb, ap, 1.0, ProfileLevel::d1, b, 1);
  EXPECT_EQ(mc.mode, ProfileMode::nested_mc);
  for (Entry en : {Entry::m1, Entry::m2}) {
    const auto t = mc.total(en);
    EXPECT_GT(t.se, 0.0);
    EXPECT_LE(std::abs(t.value - exact.total(en).value), 5.0 * t.se) << entry_name(en);
  }
  EXPECT_LE(std::abs(mc.z_alpha_mean.value - exact.variance.value), 5.0 * mc.z_alpha_mean.se + 0.05);
  EXPECT_FALSE(mc.drift.empty());
}

TEST(Profile, ClosedFormMonteCarloAgreesWithExact) {
  const auto model = m_runs(ProductSpace::iid(kTwoPoint, 7), 2);
  const DiffProfile exact = profile(model, {}, 1.0);
  McBudget b;
  b.outer = 20000;
  b.seed = 9;
  const DiffProfile mc = profile(model, {}, 1.0, ProfileLevel::d1, b, 1);
  EXPECT_EQ(mc.mode, ProfileMode::closed_form_mc);
  for (Entry en : kD1Entries) {
    const auto t = mc.total(en);
    EXPECT_LE(std::abs(t.value - exact.total(en).value), 5.0 * t.se + 1e-12) << entry_name(en);
  }
}

TEST(ThirdMomentCheck, Examples) {
  for (std::size_t n : {3, 5, 9}) {
    const auto c = third_moment_check(product_example(n));
    EXPECT_NEAR(c.third_moment.value, 0.0, 1e-12);
    EXPECT_NEAR(c.twice_z_alpha_beta.value, 0.0, 1e-12);
  }
  const auto r = third_moment_check(partial_sum(ProductSpace::iid(DistributionSpec::rademacher(), 5)), {0.5, 0.5, 0});
  EXPECT_NEAR(r.third_moment.value, 0.0, 1e-12);
  EXPECT_NEAR(r.twice_z_alpha_beta.value, 0.0, 1e-12);
  const auto t = third_moment_check(partial_sum(ProductSpace::iid(kTwoPoint, 2)));
  EXPECT_NEAR(t.third_moment.value, 0.0, 1e-12);
  EXPECT_NEAR(t.twice_z_alpha_beta.value, 0.0, 1e-12);
  const auto s = third_moment_check(partial_sum(ProductSpace::iid(kSkew, 3)), {1.0, 0.0, 0.0});
  EXPECT_GT(std::abs(s.third_moment.value), 0.1);
  EXPECT_LE(s.residual, 1e-9);
}
