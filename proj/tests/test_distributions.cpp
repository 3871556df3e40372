#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"

using namespace steingauge;

namespace {

double mc_abs_moment(const DistributionSpec& d, double p, std::size_t count, double& se) {
  const auto m = sample(ProductSpace::iid(d, 1), 99, count);
  KahanSum s, s2;
  const double mu = d.mean();
  for (double x : m.data) {
    const double v = abs_pow(x - mu, p);
    s += v;
    s2 += v * v;
  }
  const double mean = s.value() / count;
  se = std::sqrt((s2.value() / count - mean * mean) / count);
  return mean;
}

}  // namespace

TEST(ExactAbsMoment, RademacherThird) { EXPECT_DOUBLE_EQ(exact_abs_moment(DistributionSpec::rademacher(), 3), 1.0); }

TEST(ExactAbsMoment, UniformUnitVariance) {
  EXPECT_NEAR(exact_abs_moment(DistributionSpec::uniform_symmetric(std::sqrt(3.0)), 2), 1.0, 1e-15);
}

TEST(ExactAbsMoment, ExponentialMatchesQuadrature) {
  const auto d = DistributionSpec::centered_exponential(1.0);
  // independent oracle: integrate |y-1|^3 e^{-y} directly on [0, 60]
  const double cuts[] = {1.0};
  const double q = integrate([](double y) { return std::pow(std::abs(y - 1.0), 3) * std::exp(-y); }, 0.0, 60.0, cuts);
  EXPECT_NEAR(exact_abs_moment(d, 3), q, 1e-12);
  EXPECT_NEAR(exact_abs_moment(d, 2), 1.0, 1e-13);
}

TEST(ExactAbsMoment, ParetoBelowCeiling) {
  const auto d = DistributionSpec::standardized_pareto(3.5);
  EXPECT_NEAR(exact_abs_moment(d, 2), 1.0, 1e-14);
  const double k[] = {0.0};
  EXPECT_NEAR(exact_abs_moment(d, 3), expect(d, [](double x) { return std::pow(std::abs(x), 3); }, k), 1e-8);
  EXPECT_THROW(exact_abs_moment(d, 3.5), MomentDoesNotExist);
  EXPECT_THROW(exact_abs_moment(d, 4), MomentDoesNotExist);
}

TEST(ExactAbsMoment, OrderBelowOne) { EXPECT_THROW(exact_abs_moment(DistributionSpec::rademacher(), 0.5), InvalidOrder); }

TEST(ExactAbsMoment, QuadratureAgreesWithClosedForms) {
  for (const auto& d : {DistributionSpec::uniform_symmetric(2.0), DistributionSpec::centered_exponential(0.7),
                        DistributionSpec::standardized_pareto(4.5)}) {
    for (double p : {2.0, 2.5, 3.0, 3.5, 4.0}) {
      if (p >= d.moment_ceiling()) continue;
      const double mu = d.mean();
      const double k[] = {mu};
      const double q = expect(d, [&](double x) { return abs_pow(x - mu, p); }, k);
      EXPECT_NEAR(q, exact_abs_moment(d, p), 1e-9 * exact_abs_moment(d, p)) << d.label() << " p=" << p;
    }
  }
}

// Pareto with tail 9 keeps |X|^p square integrable for p <= 4, so the MC
// standard error is meaningful.
TEST(ExactAbsMoment, MonteCarloWithinFiveStandardErrors) {
  for (const auto& d : {DistributionSpec::uniform_symmetric(1.0), DistributionSpec::centered_exponential(1.0),
                        DistributionSpec::standardized_pareto(9.0)}) {
    for (double p : {2.0, 2.5, 3.0, 3.5, 4.0}) {
      double se = 0.0;
      const double mc = mc_abs_moment(d, p, 10'000'000, se);
      EXPECT_LE(std::abs(mc - exact_abs_moment(d, p)), 5.0 * se) << d.label() << " p=" << p;
    }
  }
}

TEST(Sample, RademacherSupport) {
  const auto m = sample(ProductSpace::iid(DistributionSpec::rademacher(), 3), 5, 4);
  EXPECT_EQ(m.rows, 4u);
  EXPECT_EQ(m.cols, 3u);
  for (double v : m.data) EXPECT_TRUE(v == 1.0 || v == -1.0);
}

TEST(Sample, SameSeedSameMatrix) {
  const auto sp = ProductSpace({DistributionSpec::centered_exponential(2.0), DistributionSpec::standardized_pareto(3.5),
                                DistributionSpec::uniform_symmetric(1.0)});
  EXPECT_EQ(sample(sp, 42, 5000), sample(sp, 42, 5000));
  EXPECT_NE(sample(sp, 42, 5000), sample(sp, 43, 5000));
}

TEST(Sample, ThreadCountInvariant) {
  const auto sp = ProductSpace::iid(DistributionSpec::centered_exponential(1.0), 4);
  set_thread_count(1);
  const auto a = sample(sp, 7, 10'000);
  set_thread_count(8);
  const auto b = sample(sp, 7, 10'000);
  set_thread_count(0);
  EXPECT_EQ(a, b);
}

TEST(Sample, RademacherMean) {
  const auto m = sample(ProductSpace::iid(DistributionSpec::rademacher(), 1), 11, 1'000'000);
  EXPECT_LE(std::abs(kahan_sum(m.data) / 1e6), 4e-3);
}

TEST(Enumerate, Examples) {
  const auto r2 = ProductSpace::iid(DistributionSpec::rademacher(), 2);
  EXPECT_EQ(enumerate_expectation(r2, [](std::span<const double> x) { return x[0] * x[1]; }), 0.0);
  const auto r3 = ProductSpace::iid(DistributionSpec::rademacher(), 3);
  EXPECT_DOUBLE_EQ(enumerate_expectation(r3, [](std::span<const double> x) {
                     const double s = x[0] + x[1] + x[2];
                     return s * s;
                   }),
                   3.0);
  const auto fs = ProductSpace::iid(DistributionSpec::finite_support({{0.0, 0.5}, {2.0, 0.5}}), 1);
  EXPECT_DOUBLE_EQ(enumerate_expectation(fs, [](std::span<const double> x) { return x[0] * x[0] * x[0]; }), 4.0);
}

TEST(Enumerate, ConstantOneIsExact) {
  const auto skew = DistributionSpec::finite_support({{-1.0, 0.3}, {0.5, 0.1}, {2.0, 0.6}});
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto sp = ProductSpace::iid(skew, n);
    EXPECT_NEAR(enumerate_expectation(sp, [](std::span<const double>) { return 1.0; }), 1.0, 1e-15);
  }
}

TEST(Enumerate, CapEnforced) {
  EXPECT_THROW(EnumerableSpace(ProductSpace::iid(DistributionSpec::rademacher(), 25)), SupportTooLarge);
  EXPECT_THROW(EnumerableSpace(ProductSpace::iid(DistributionSpec::uniform_symmetric(1), 2)), SupportTooLarge);
}

TEST(DistributionJson, RoundTrip) {
  for (const auto& d : {DistributionSpec::rademacher(), DistributionSpec::uniform_symmetric(1.5),
                        DistributionSpec::centered_exponential(2.0), DistributionSpec::standardized_pareto(3.2),
                        DistributionSpec::finite_support({{0.0, 0.25}, {4.0, 0.75}})}) {
    nlohmann::json j = d;
    EXPECT_EQ(distribution_from_json(j), d) << j.dump();
  }
  const auto p = distribution_from_json({{"family", "symmetric_pareto"}, {"params", {{"tail_index", 3.2}}}});
  EXPECT_NEAR(p.variance(), 1.0, 1e-14);
}

TEST(DistributionSpec, Validation) {
  EXPECT_THROW(DistributionSpec::uniform_symmetric(0.0), InvalidArgument);
  EXPECT_THROW(DistributionSpec::symmetric_pareto(2.0, 1.0), InvalidArgument);
  EXPECT_THROW(DistributionSpec::finite_support({{1.0, 0.4}}), InvalidArgument);
  EXPECT_THROW(DistributionSpec::finite_support({{1.0, 1.0}}), InvalidArgument);  // zero variance
}

TEST(DistributionSpec, ThirdMoments) {
  EXPECT_EQ(DistributionSpec::rademacher().third_central_moment(), 0.0);
  EXPECT_DOUBLE_EQ(DistributionSpec::centered_exponential(1.0).third_central_moment(), 2.0);
  EXPECT_THROW((void)DistributionSpec::standardized_pareto(3.0).third_central_moment(), MomentDoesNotExist);
  EXPECT_NEAR(DistributionSpec::finite_support({{0.0, 0.5}, {2.0, 0.5}}).third_central_moment(), 0.0, 1e-15);
}
