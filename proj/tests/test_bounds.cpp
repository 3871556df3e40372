#include <gtest/gtest.h>

#include <cmath>

#include "steingauge/bounds.hpp"

using namespace steingauge;

namespace {

const DistributionSpec kRad = DistributionSpec::rademacher();
const DistributionSpec kSkew = DistributionSpec::finite_support({{-1.0, 0.3}, {0.5, 0.1}, {2.0, 0.6}});

StatisticModel strip(StatisticModel m) {
  m.closed_form.reset();
  m.family = BlackBoxInfo{"stripped"};
  return m;
}

}  // namespace

TEST(Constants, PrintedFormulas) {
  EXPECT_DOUBLE_EQ(partial_sum_d1_constant(1.0), 16.0);
  const double c1 = 40.0 + 8.0 * std::pow(std::cbrt(3.0) * (2.0 + std::pow(3.0, 4.0 / 3.0)), 0.75);
  EXPECT_NEAR(partial_sum_d2_constant(1.0), c1, 1e-12);
  EXPECT_NEAR(partial_sum_d2_constant(1.0), 82.0, 0.1);
  EXPECT_DOUBLE_EQ(mdep_d1_constant(1, 1), 128.0);
  EXPECT_DOUBLE_EQ(mdep_d2_constant(1, 1), 1792.0);
  EXPECT_DOUBLE_EQ(mdep_d1_constant(2, 1), 64.0 * 32.0);
  EXPECT_DOUBLE_EQ(mdep_d2_constant(2, 1), 256.0 * (16.0 * 36.0 + 16.0 * 6.0 + 16.0));
}

TEST(Constants, MonotoneInM) {
  for (double d : {0.25, 0.5, 1.0})
    for (double m : {1.0, 2.0}) {
      EXPECT_LT(mdep_d1_constant(m, d), mdep_d1_constant(m + 1, d));
      EXPECT_LT(mdep_d2_constant(m, d), mdep_d2_constant(m + 1, d));
    }
}

TEST(D1Bound, RademacherAggregate) {
  for (std::size_t n : {1, 4, 9, 16, 256}) {
    const auto model = partial_sum(ProductSpace::iid(kRad, n));
    const auto r = d1_bound(profile(model, {0.5, 0.5, 0.5}, 1.0), BoundForm::aggregate);
    EXPECT_NEAR(r.total, 8.0 / std::sqrt(static_cast<double>(n)), 1e-12) << n;
    EXPECT_NEAR(r.diagnostics.at("lyapunov_ratio"), 1.0 / std::sqrt(static_cast<double>(n)), 1e-14);
  }
}

TEST(D1Bound, ProductExampleTermwise) {
  for (std::size_t n : {2, 5, 17, 65, 257, 1025}) {
    for (double beta : {0.0, 0.5, 1.0}) {
      const auto r = d1_bound(profile(product_example(n), {0.0, beta, 0.0}, 1.0), BoundForm::termwise);
      EXPECT_NEAR(r.total, 8.0 / std::sqrt(static_cast<double>(n - 1)), 1e-12) << n;
    }
  }
  // enumeration path reproduces it
  const auto r = d1_bound(profile(strip(product_example(9)), {0.0, 0.3, 0.0}, 1.0), BoundForm::termwise);
  EXPECT_NEAR(r.total, 8.0 / std::sqrt(8.0), 1e-12);
}

TEST(D1Bound, ZeroStatisticRejected) {
  const auto z = quadratic_form(ProductSpace::iid(kRad, 3), zero_matrix(3));
  EXPECT_THROW(d1_bound(profile(z, {}, 1.0), BoundForm::aggregate), InvalidArgument);
}

TEST(D2Bound, ProductExampleTermwise) {
  for (std::size_t n : {5, 17, 65, 257}) {
    const auto r = d2_bound(profile(product_example(n), {0.0, 0.5, 0.0}, 1.0, ProfileLevel::d2), BoundForm::termwise);
    EXPECT_NEAR(r.total, 24.0 / static_cast<double>(n - 1), 1e-12) << n;
  }
  const auto r = d2_bound(profile(strip(product_example(7)), {0.0, 0.5, 0.0}, 1.0, ProfileLevel::d2), BoundForm::termwise);
  EXPECT_NEAR(r.total, 4.0, 1e-12);
}

TEST(D2Bound, RademacherAggregate) {
  for (std::size_t n : {2, 16, 64}) {
    const auto r = d2_bound(profile(partial_sum(ProductSpace::iid(kRad, n)), {0.5, 0.5, 0.5}, 1.0, ProfileLevel::d2),
                            BoundForm::aggregate);
    EXPECT_NEAR(r.total, 24.0 / static_cast<double>(n), 1e-12) << n;
  }
}

TEST(D2Bound, SkewedRejected) {
  const auto model = partial_sum(ProductSpace::iid(kSkew, 3));
  EXPECT_THROW(d2_bound(profile(model, {}, 1.0, ProfileLevel::d2), BoundForm::aggregate), ThirdMomentNotZero);
  EXPECT_THROW(d2_bound(profile(model, {}, 1.0), BoundForm::aggregate), MissingProfileEntry);
}

TEST(LyapunovRatio, Examples) {
  EXPECT_DOUBLE_EQ(lyapunov_ratio(profile(partial_sum(ProductSpace::iid(kRad, 1)), {}, 1.0)), 1.0);
  // E|X1+..+X4|^3 = (2*4^3 + 8*2^3)/16
  const double e3 = (2.0 * 64.0 + 8.0 * 8.0) / 16.0;
  EXPECT_NEAR(lyapunov_ratio(profile(product_example(5), {}, 1.0)), (4.0 + e3) / 8.0, 1e-12);
}

TEST(PartialSumBounds, Examples) {
  EXPECT_DOUBLE_EQ(partial_sum_d1_bound(ProductSpace::iid(kRad, 4), 1.0).total, 8.0);
  EXPECT_DOUBLE_EQ(partial_sum_d1_bound(ProductSpace::iid(kRad, 1), 1.0).total, 16.0);
  const auto u = partial_sum_d1_bound(ProductSpace::iid(DistributionSpec::uniform_symmetric(std::sqrt(3.0)), 100), 1.0);
  EXPECT_NEAR(u.total, 16.0 * 100.0 * 3.0 * std::sqrt(3.0) / 4.0 / 1000.0, 1e-12);
  for (std::size_t n : {1, 16, 1024}) {
    const auto r = partial_sum_d2_bound(ProductSpace::iid(kRad, n), 1.0);
    EXPECT_NEAR(r.total, partial_sum_d2_constant(1.0) / static_cast<double>(n), 1e-12);
  }
  EXPECT_THROW(partial_sum_d2_bound(ProductSpace::iid(DistributionSpec::centered_exponential(1.0), 4), 1.0),
               ThirdMomentNotZero);
}

TEST(MDepBounds, RunsRates) {
  for (std::size_t m : {1, 2, 3})
    for (std::size_t n : {16, 64}) {
      const auto model = m_runs(ProductSpace::iid(kRad, n + m - 1), m);
      const double dn = static_cast<double>(n);
      EXPECT_NEAR(m_dep_bounds(model, 1.0, ProfileLevel::d1).total, mdep_d1_constant(m, 1) / std::sqrt(dn), 1e-9);
      EXPECT_NEAR(m_dep_bounds(model, 1.0, ProfileLevel::d2).total, mdep_d2_constant(m, 1) / dn, 1e-9);
    }
}

TEST(MDepBounds, M1MatchesConstantTimesPartialSumMoments) {
  const auto sp = ProductSpace::iid(DistributionSpec::finite_support({{0.0, 0.5}, {2.0, 0.5}}), 5);
  const auto md = m_dependent_sum(sp, 1, [](std::span<const double> w) { return w[0]; });
  EXPECT_NEAR(m_dep_bounds(md, 1.0, ProfileLevel::d1).total, 128.0 / std::sqrt(5.0), 1e-12);
}

TEST(MDepBounds, ParetoThirdMomentGate) {
  const auto model = m_runs(ProductSpace::iid(DistributionSpec::standardized_pareto(3.5), 9), 2);
  EXPECT_NO_THROW(m_dep_bounds(model, 1.0, ProfileLevel::d1));
  EXPECT_THROW(m_dep_bounds(model, 1.0, ProfileLevel::d2), MomentDoesNotExist);
  EXPECT_NO_THROW(m_dep_bounds(model, 0.25, ProfileLevel::d2));
}

TEST(QuadForm, Examples) {
  const auto z = quadratic_form(ProductSpace::iid(kRad, 4), zero_matrix(4));
  const auto rz = quadform_d1_bound(z, 1.0);
  for (const auto& [k, v] : rz.terms) EXPECT_EQ(v, 0.0);
  DenseMatrix A = zero_matrix(2);
  A(0, 1) = A(1, 0) = 1.0;
  const auto r = quadform_d1_bound(quadratic_form(ProductSpace::iid(kRad, 2), A), 1.0);
  EXPECT_DOUBLE_EQ(r.diagnostics.at("S1_row_power_sum"), 2.0);
  const auto band = circulant_band(8);
  const auto q = quadform_functionals(std::get<QuadraticFormInfo>(quadratic_form(ProductSpace::iid(kRad, 8), band).family).matrix, 1.0);
  EXPECT_NEAR(q.trace_a4, trace_a4_by_product(band), 1e-9);
}

TEST(QuadForm, LTildeScaling) {
  for (std::size_t n : {16, 64, 256}) {
    const auto r = quadform_d1_bound(quadratic_form(ProductSpace::iid(kRad, n), circulant_band(n)), 1.0);
    EXPECT_NEAR(r.diagnostics.at("L_tilde"), 2.0 / static_cast<double>(n), 1e-14);
  }
}

TEST(BoundProperties, ScaleInvariance) {
  const auto sp = ProductSpace({kSkew, kRad, kSkew, kRad, kSkew});
  const auto base = black_box(sp, [](std::span<const double> x) { return x[0] * x[1] + x[2] - x[3] * x[4] * x[0]; });
  const AlphaParams ap{0.5, 0.5, 0.0};
  const auto p0 = profile(base, ap, 0.7);
  for (double c : {0.5, 3.0}) {
    const auto scaled = black_box(sp, [c, f = base.evaluate](std::span<const double> x) { return c * f(x); });
    const auto pc = profile(scaled, ap, 0.7);
    EXPECT_NEAR(pc.sigma(), c * p0.sigma(), 1e-12);
    EXPECT_NEAR(pc.total(Entry::m2).value, std::pow(c, 2.7) * p0.total(Entry::m2).value, 1e-10);
    for (BoundForm f : {BoundForm::termwise, BoundForm::aggregate})
      EXPECT_NEAR(d1_bound(pc, f).total, d1_bound(p0, f).total, 1e-10);
  }
}

TEST(BoundProperties, AggregateDominatesTermwise) {
  const auto sp = ProductSpace({kSkew, kRad, kSkew, kRad, kSkew, kRad});
  const auto bb = black_box(sp, [](std::span<const double> x) { return x[0] * x[1] + x[2] * x[5] - x[3] * x[4]; });
  for (double a : {0.0, 0.5, 1.0})
    for (double d : {0.25, 1.0}) {
      const auto p = profile(bb, {a, a, a}, d);
      EXPECT_GE(d1_bound(p, BoundForm::aggregate).total, d1_bound(p, BoundForm::termwise).total * (1 - 1e-12));
    }
  const auto sym = partial_sum(ProductSpace::iid(DistributionSpec::finite_support({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}}), 6));
  const auto p2 = profile(strip(sym), {0.5, 0.5, 0.5}, 0.5, ProfileLevel::d2);
  EXPECT_GE(d2_bound(p2, BoundForm::aggregate).total, d2_bound(p2, BoundForm::termwise).total * (1 - 1e-12));
}

TEST(Report, JsonAndCsv) {
  const auto r = d1_bound(profile(product_example(5), {}, 1.0), BoundForm::termwise);
  const auto j = report_to_json(r);
  EXPECT_EQ(j["bound_id"], "D1_TERMWISE");
  EXPECT_EQ(j["terms"].size(), 2u);
  EXPECT_EQ(csv_header(r), "bound_total,bound_term_z_term,bound_term_f_term");
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_NEAR(o1_expression(profile(partial_sum(ProductSpace::iid(kRad, 16)), {}, 1.0), 0.5), 0.0, 1e-15);
}
