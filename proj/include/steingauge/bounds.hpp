#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "steingauge/difference.hpp"
#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/profile.hpp"
#include "steingauge/statistics.hpp"

namespace steingauge {

enum class BoundId {
  D1_TERMWISE,
  D1_AGGREGATE,
  D2_TERMWISE,
  D2_AGGREGATE,
  PARTIAL_SUM_D1,
  PARTIAL_SUM_D2,
  MDEP_D1,
  MDEP_D2,
  QUADFORM_D1
};

inline const char* to_string(BoundId id) {
  switch (id) {
    case BoundId::D1_TERMWISE: return "D1_TERMWISE";
    case BoundId::D1_AGGREGATE: return "D1_AGGREGATE";
    case BoundId::D2_TERMWISE: return "D2_TERMWISE";
    case BoundId::D2_AGGREGATE: return "D2_AGGREGATE";
    case BoundId::PARTIAL_SUM_D1: return "PARTIAL_SUM_D1";
    case BoundId::PARTIAL_SUM_D2: return "PARTIAL_SUM_D2";
    case BoundId::MDEP_D1: return "MDEP_D1";
    case BoundId::MDEP_D2: return "MDEP_D2";
    case BoundId::QUADFORM_D1: return "QUADFORM_D1";
  }
  return "?";
}

enum class BoundForm { termwise, aggregate };

struct BoundReport {
  BoundId id = BoundId::D1_AGGREGATE;
  std::vector<std::pair<std::string, double>> terms;
  double total = 0.0;
  std::vector<std::pair<std::string, double>> constants;
  std::map<std::string, double> diagnostics;
  double delta = 1.0;
  AlphaParams alphas;
  std::string provenance;
  std::string formula;

  void finish() {
    KahanSum s;
    for (const auto& [name, v] : terms) s += v;
    total = s.value();
  }
};

// ---------------------------------------------------------------------------
// Constants.

inline double partial_sum_d1_constant(double delta) { return 8.0 + std::pow(2.0, 2.0 + delta); }

inline double partial_sum_d2_constant(double delta) {
  const double inner = std::pow(3.0, delta / 3.0) * (2.0 + std::pow(3.0, (3.0 + delta) / 3.0));
  return 8.0 + std::pow(2.0, 2.0 + delta) * std::pow(inner, 3.0 / (3.0 + delta)) + std::pow(2.0, 4.0 + delta);
}

inline double mdep_d1_constant(double m, double delta) {
  return std::pow(2.0 * m, 2.0 + delta) * (8.0 * (2.0 * m - 1.0) + std::pow(2.0, 2.0 + delta));
}

inline double mdep_d2_constant(double m, double delta) {
  const double q = 4.0 * m - 2.0;
  return std::pow(2.0 * m, 3.0 + delta) * (16.0 * q * q + std::pow(2.0, 3.0 + delta) * q + std::pow(2.0, 3.0 + delta));
}

namespace detail {

inline double checked_sigma(const DiffProfile& p) {
  const double s = p.sigma();
  if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("bound needs sigma > 0");
  return s;
}

inline void gate_third_moment(const DiffProfile& p) {
  if (!p.third_moment) throw MissingProfileEntry("profile carries no E[F^3]");
  const double s = p.sigma();
  const double t = p.third_moment->value;
  const bool exact = p.mode == ProfileMode::exact;
  const double tol = exact ? 1e-10 * std::max(1.0, s * s * s) : 5.0 * p.third_moment->se;
  if (std::abs(t) > tol) {
    std::ostringstream msg;
    msg << "E[(F-EF)^3] = " << t << " is not zero within " << tol;
    throw ThirdMomentNotZero(msg.str());
  }
}

inline void finish_profile_report(BoundReport& r, const DiffProfile& p) {
  r.delta = p.delta;
  r.alphas = p.params;
  r.provenance = p.method;
  r.finish();
  r.diagnostics["sigma"] = p.sigma();
  r.diagnostics["variance_se"] = p.variance.se;
  r.diagnostics["z_alpha_mean"] = p.z_alpha_mean.value;
}

}  // namespace detail

inline double lyapunov_ratio(const DiffProfile& p) {
  const double s = detail::checked_sigma(p);
  return p.total(Entry::m2).value / std::pow(s, 2.0 + p.delta);
}

// L_n^{(d - eps)/2} / sigma^{2+d} sum E|D_k Z|^{(2+d)/2} at one n; eps in (0, d].
inline double o1_expression(const DiffProfile& p, double eps) {
  if (!(eps > 0.0 && eps <= p.delta)) throw InvalidArgument("eps must lie in (0, delta]");
  const double s = detail::checked_sigma(p);
  return std::pow(lyapunov_ratio(p), (p.delta - eps) / 2.0) / std::pow(s, 2.0 + p.delta) * p.total(Entry::z2).value;
}

inline BoundReport d1_bound(const DiffProfile& p, BoundForm form) {
  const double s = detail::checked_sigma(p);
  const double d = p.delta;
  const double scale = std::pow(s, 2.0 + d);
  BoundReport r;
  if (form == BoundForm::termwise) {
    r.id = BoundId::D1_TERMWISE;
    r.formula = "2/s^(2+d) sum E[(|DF|^d + E_k|DF|^d)|D^(b)Z^(a)|] + 2^(1+d)/s^(2+d) sum E[(|DF|^(1+d) + E_k|DF|^(1+d))|D^(a)F|]";
    r.constants = {{"c1", 2.0}, {"c2", std::pow(2.0, 1.0 + d)}};
    r.terms = {{"z_term", 2.0 / scale * p.total(Entry::t1_d1).value},
               {"f_term", std::pow(2.0, 1.0 + d) / scale * p.total(Entry::t2_d1).value}};
  } else {
    r.id = BoundId::D1_AGGREGATE;
    r.formula = "4/s^(2+d) (sum E|DF|^(2+d))^(d/(2+d)) (sum E|DZ^(a)|^((2+d)/2))^(2/(2+d)) + 2^(2+d)/s^(2+d) sum E|DF|^(2+d)";
    const double m2 = p.total(Entry::m2).value;
    const double z2 = p.total(Entry::z2).value;
    r.constants = {{"c1", 4.0}, {"c2", std::pow(2.0, 2.0 + d)}};
    r.terms = {{"z_term", 4.0 / scale * std::pow(m2, d / (2.0 + d)) * std::pow(z2, 2.0 / (2.0 + d))},
               {"f_term", std::pow(2.0, 2.0 + d) / scale * m2}};
  }
  detail::finish_profile_report(r, p);
  if (p.has(Entry::m2)) r.diagnostics["lyapunov_ratio"] = lyapunov_ratio(p);
  return r;
}

inline BoundReport d2_bound(const DiffProfile& p, BoundForm form) {
  const double s = detail::checked_sigma(p);
  detail::gate_third_moment(p);
  const double d = p.delta;
  const double scale = std::pow(s, 3.0 + d);
  BoundReport r;
  if (form == BoundForm::termwise) {
    r.id = BoundId::D2_TERMWISE;
    r.formula = "4/s^(3+d) sum E[(|DF|^d + E_k|DF|^d)|D^(g)Z^(a,b)|] + 2^(2+d)/s^(3+d) sum E[(|DF|^(1+d) + E_k|DF|^(1+d))|D^(b)Z^(a)|] + 2^(2+d)/s^(3+d) sum E[(|DF|^(2+d) + E_k|DF|^(2+d))|D^(a)F|]";
    const double c = std::pow(2.0, 2.0 + d);
    r.constants = {{"c1", 4.0}, {"c2", c}, {"c3", c}};
    r.terms = {{"zz_term", 4.0 / scale * p.total(Entry::t1_d2).value},
               {"z_term", c / scale * p.total(Entry::t2_d2).value},
               {"f_term", c / scale * p.total(Entry::t3_d2).value}};
  } else {
    r.id = BoundId::D2_AGGREGATE;
    r.formula = "8/s^(3+d) (sum E|DF|^(3+d))^(d/(3+d)) (sum E|DZ^(a,b)|^((3+d)/3))^(3/(3+d)) + 2^(3+d)/s^(3+d) (sum E|DF|^(3+d))^((1+d)/(3+d)) (sum E|DZ^(a)|^((3+d)/2))^(2/(3+d)) + 2^(3+d)/s^(3+d) sum E|DF|^(3+d)";
    const double m3 = p.total(Entry::m3).value;
    const double w3 = p.total(Entry::w3).value;
    const double z3 = p.total(Entry::z3).value;
    const double c = std::pow(2.0, 3.0 + d);
    r.constants = {{"c1", 8.0}, {"c2", c}, {"c3", c}};
    r.terms = {{"zz_term", 8.0 / scale * std::pow(m3, d / (3.0 + d)) * std::pow(w3, 3.0 / (3.0 + d))},
               {"z_term", c / scale * std::pow(m3, (1.0 + d) / (3.0 + d)) * std::pow(z3, 2.0 / (3.0 + d))},
               {"f_term", c / scale * m3}};
  }
  detail::finish_profile_report(r, p);
  r.diagnostics["third_moment"] = p.third_moment->value;
  r.diagnostics["third_moment_se"] = p.third_moment->se;
  if (p.z_alpha_beta_mean) r.diagnostics["twice_z_alpha_beta_mean"] = 2.0 * p.z_alpha_beta_mean->value;
  return r;
}

// ---------------------------------------------------------------------------
// Specialised bounds.

inline BoundReport partial_sum_d1_bound(const ProductSpace& space, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  KahanSum var, mom;
  for (const auto& c : space.components()) {
    var += c.variance();
    mom += exact_abs_moment(c, 2.0 + delta);
  }
  const double C = partial_sum_d1_constant(delta);
  BoundReport r;
  r.id = BoundId::PARTIAL_SUM_D1;
  r.formula = "(8 + 2^(2+d))/s^(2+d) sum E|X_k - mu_k|^(2+d)";
  r.constants = {{"C_delta", C}};
  r.terms = {{"moment_term", C / std::pow(var.value(), (2.0 + delta) / 2.0) * mom.value()}};
  r.delta = delta;
  r.provenance = "closed_form";
  r.finish();
  r.diagnostics["sigma"] = std::sqrt(var.value());
  r.diagnostics["moment_sum"] = mom.value();
  return r;
}

inline BoundReport partial_sum_d2_bound(const ProductSpace& space, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  KahanSum var, mom, third, abs3;
  for (const auto& c : space.components()) {
    var += c.variance();
    mom += exact_abs_moment(c, 3.0 + delta);
    third += c.third_central_moment();
    abs3 += exact_abs_moment(c, 3.0);
  }
  if (std::abs(third.value()) > 1e-12 * std::max(1.0, abs3.value()))
    throw ThirdMomentNotZero("sum of third central moments is " + std::to_string(third.value()));
  const double C = partial_sum_d2_constant(delta);
  BoundReport r;
  r.id = BoundId::PARTIAL_SUM_D2;
  r.formula = "C_d/s^(3+d) sum E|X_k - mu_k|^(3+d), C_d = 8 + 2^(2+d)(3^(d/3)(2 + 3^((3+d)/3)))^(3/(3+d)) + 2^(4+d)";
  r.constants = {{"C_delta", C}};
  r.terms = {{"moment_term", C / std::pow(var.value(), (3.0 + delta) / 2.0) * mom.value()}};
  r.delta = delta;
  r.provenance = "closed_form";
  r.finish();
  r.diagnostics["sigma"] = std::sqrt(var.value());
  r.diagnostics["moment_sum"] = mom.value();
  r.diagnostics["third_moment"] = third.value();
  return r;
}

namespace detail {

inline const MDependentInfo& mdep_info(const StatisticModel& model) {
  const auto* info = std::get_if<MDependentInfo>(&model.family);
  if (!info) throw InvalidArgument("m_dep_bounds needs an m-dependent sum");
  return *info;
}

inline bool window_enumerable(const ProductSpace& space, std::size_t first, std::size_t width) {
  const std::size_t s = window_support(space, first, width);
  return s != 0 && s <= kEnumerationCap;
}

inline bool all_zero_means(const ProductSpace& space) {
  for (const auto& c : space.components())
    if (c.mean() != 0.0) return false;
  return true;
}

// E|xi_i - E xi_i|^p with its standard error.
inline Estimate kernel_abs_moment(const StatisticModel& model, std::size_t i, double p, std::uint64_t seed) {
  const auto& info = mdep_info(model);
  const auto& space = model.space;
  const std::size_t m = info.m;
  const double mu = info.kernel_means[i];
  const auto& kernel = info.kernels[i];
  if (window_enumerable(space, i, m)) {
    std::vector<DistributionSpec> w(space.components().begin() + static_cast<std::ptrdiff_t>(i),
                                    space.components().begin() + static_cast<std::ptrdiff_t>(i + m));
    return {enumerate_expectation(ProductSpace(w), [&](std::span<const double> x) { return abs_pow(kernel(x) - mu, p); }),
            0.0};
  }
  if (info.runs && all_zero_means(space)) {
    double prod = 1.0;
    for (std::size_t j = i; j < i + m; ++j) prod *= exact_abs_moment(space[j], p);
    return {prod, 0.0};
  }
  constexpr std::size_t kDraws = 1'000'000;
  constexpr std::size_t kBatches = 40;
  std::vector<double> batch(kBatches);
  parallel_for(kBatches, [&](std::size_t b) {
    Xoshiro256 rng = make_stream(seed, {stream_tag::kKernelMoments, 1000 + i, b});
    std::vector<double> x(m);
    KahanSum acc;
    for (std::size_t s = 0; s < kDraws / kBatches; ++s) {
      for (std::size_t j = 0; j < m; ++j) x[j] = space[i + j].sample(rng);
      acc += abs_pow(kernel(x) - mu, p);
    }
    batch[b] = acc.value() / static_cast<double>(kDraws / kBatches);
  });
  const double mean = kahan_sum(batch) / kBatches;
  KahanSum ss;
  for (double v : batch) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss.value() / (kBatches - 1) / kBatches)};
}

// E[prod of centred kernels over `windows`], exact. Requires either
// enumerable union windows or zero-mean runs.
inline double centred_kernel_product(const StatisticModel& model, std::span<const std::size_t> windows) {
  const auto& info = mdep_info(model);
  const auto& space = model.space;
  const std::size_t m = info.m;
  const std::size_t lo = *std::min_element(windows.begin(), windows.end());
  const std::size_t hi = *std::max_element(windows.begin(), windows.end()) + m;
  if (info.runs && all_zero_means(space)) {
    // Kernel means vanish; each coordinate contributes E[X^c] for its multiplicity c.
    double prod = 1.0;
    for (std::size_t j = lo; j < hi; ++j) {
      int c = 0;
      for (std::size_t w : windows) c += (j >= w && j < w + m) ? 1 : 0;
      if (c == 1) return 0.0;
      if (c == 2) prod *= space[j].variance();
      if (c == 3) prod *= space[j].third_central_moment();
    }
    return prod;
  }
  if (!window_enumerable(space, lo, hi - lo))
    throw SupportTooLarge("third moment needs enumerable windows for a general kernel");
  std::vector<DistributionSpec> w(space.components().begin() + static_cast<std::ptrdiff_t>(lo),
                                  space.components().begin() + static_cast<std::ptrdiff_t>(hi));
  return enumerate_expectation(ProductSpace(w), [&](std::span<const double> x) {
    double prod = 1.0;
    for (std::size_t win : windows) prod *= info.kernels[win](x.subspan(win - lo, m)) - info.kernel_means[win];
    return prod;
  });
}

// Exact E[F^3]: only triples whose sorted gaps are below m contribute.
inline double mdep_third_moment(const StatisticModel& model) {
  const auto& info = mdep_info(model);
  const std::size_t n = info.windows, m = info.m;
  KahanSum total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < std::min(n, i + m); ++j)
      for (std::size_t l = j; l < std::min(n, j + m); ++l) {
        const std::size_t w[] = {i, j, l};
        const double mult = (i == j && j == l) ? 1.0 : (i == j || j == l) ? 3.0 : 6.0;
        total += mult * centred_kernel_product(model, w);
      }
  return total.value();
}

inline double mdep_variance(const StatisticModel& model) {
  if (model.variance) return *model.variance;
  const auto& info = mdep_info(model);
  const std::size_t n = info.windows, m = info.m;
  KahanSum total;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < std::min(n, i + m); ++j) {
      const std::size_t w[] = {i, j};
      total += (i == j ? 1.0 : 2.0) * centred_kernel_product(model, w);
    }
  return total.value();
}

}  // namespace detail

inline BoundReport m_dep_bounds(const StatisticModel& model, double delta, ProfileLevel which,
                                std::uint64_t seed = 0) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const auto& info = detail::mdep_info(model);
  const double m = static_cast<double>(info.m);
  const double p = (which == ProfileLevel::d1 ? 2.0 : 3.0) + delta;
  const double ceiling = model.space.min_moment_ceiling();
  if (ceiling <= p) throw MomentDoesNotExist("kernel moments of order " + std::to_string(p) + " are infinite");
  KahanSum mom, se2;
  for (std::size_t i = 0; i < info.windows; ++i) {
    const Estimate e = detail::kernel_abs_moment(model, i, p, seed);
    mom += e.value;
    se2 += e.se * e.se;
  }
  const double var = detail::mdep_variance(model);
  BoundReport r;
  r.delta = delta;
  r.provenance = "closed_form";
  if (which == ProfileLevel::d1) {
    const double c = mdep_d1_constant(m, delta);
    r.id = BoundId::MDEP_D1;
    r.formula = "c_(m,d)/s^(2+d) sum E|xi_k - E xi_k|^(2+d), c_(m,d) = (2m)^(2+d)(8(2m-1) + 2^(2+d))";
    r.constants = {{"c_m_delta", c}};
    r.terms = {{"moment_term", c / std::pow(var, p / 2.0) * mom.value()}};
  } else {
    const double third = detail::mdep_third_moment(model);
    const double scale = std::sqrt(var);
    if (std::abs(third) > 1e-10 * std::max(1.0, scale * scale * scale))
      throw ThirdMomentNotZero("E[F^3] = " + std::to_string(third));
    const double c = mdep_d2_constant(m, delta);
    r.id = BoundId::MDEP_D2;
    r.formula = "C_(m,d)/s^(3+d) sum E|xi_k - E xi_k|^(3+d), C_(m,d) = (2m)^(3+d)(16(4m-2)^2 + 2^(3+d)(4m-2) + 2^(3+d))";
    r.constants = {{"C_m_delta", c}};
    r.terms = {{"moment_term", c / std::pow(var, p / 2.0) * mom.value()}};
    r.diagnostics["third_moment"] = third;
  }
  r.finish();
  r.diagnostics["sigma"] = std::sqrt(var);
  r.diagnostics["moment_sum"] = mom.value();
  r.diagnostics["moment_sum_se"] = std::sqrt(se2.value());
  return r;
}

// Matrix functionals entering the quadratic-form bound.
struct QuadFormFunctionals {
  double row_power_sum = 0.0;     // S1 = sum_u (sum_v a_uv^2)^((2+d)/2)
  double square_power_sum = 0.0;  // S2 = sum_{u,v} |(A^2)_uv|^((2+d)/2)
  double split_power_sum = 0.0;   // S3 = sum_{u,v} sum_k |a_ku a_kv|^((2+d)/2)
  double sigma2 = 0.0;
  double max_row_square = 0.0;    // max_u sum_v a_uv^2
  double trace_a4 = 0.0;          // sum_{u,v} ((A^2)_uv)^2
};

inline QuadFormFunctionals quadform_functionals(const SparseSymmetric& A, double delta) {
  QuadFormFunctionals q;
  const double h = (2.0 + delta) / 2.0;
  std::map<std::pair<std::size_t, std::size_t>, double> sq;  // (A^2)_uv
  KahanSum s1, s3, var;
  for (std::size_t k = 0; k < A.n; ++k) {
    double row = 0.0, rowh = 0.0;
    for (const auto& e : A.rows[k]) {
      row += e.value * e.value;
      rowh += abs_pow(e.value, h);
      if (e.col > k) var += e.value * e.value;
    }
    s1 += std::pow(row, h);
    s3 += rowh * rowh;
    q.max_row_square = std::max(q.max_row_square, row);
    for (const auto& eu : A.rows[k])
      for (const auto& ev : A.rows[k]) sq[{eu.col, ev.col}] += eu.value * ev.value;
  }
  KahanSum s2, tr;
  for (const auto& [uv, v] : sq) {
    s2 += abs_pow(v, h);
    tr += v * v;
  }
  q.row_power_sum = s1.value();
  q.square_power_sum = s2.value();
  q.split_power_sum = s3.value();
  q.sigma2 = var.value();
  q.trace_a4 = tr.value();
  return q;
}

// Tr(A^4) from the explicit product A^2 A^2.
inline double trace_a4_by_product(const DenseMatrix& A) {
  const std::size_t n = A.n;
  DenseMatrix A2 = zero_matrix(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t k = 0; k < n; ++k) {
      const double a = A(u, k);
      if (a == 0.0) continue;
      for (std::size_t v = 0; v < n; ++v) A2(u, v) += a * A(k, v);
    }
  KahanSum tr;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t k = 0; k < n; ++k) tr += A2(u, k) * A2(k, u);
  return tr.value();
}

inline BoundReport quadform_d1_bound(const StatisticModel& model, double delta, double c_choice = 1.0) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const auto* info = std::get_if<QuadraticFormInfo>(&model.family);
  if (!info) throw InvalidArgument("quadform_d1_bound needs a quadratic form");
  double M = 0.0;
  for (const auto& c : model.space.components()) M = std::max(M, exact_abs_moment(c, 2.0 + delta));
  const QuadFormFunctionals q = quadform_functionals(info->matrix, delta);
  BoundReport r;
  r.id = BoundId::QUADFORM_D1;
  r.formula = "C * M^2/s^(2+d) {S1^(d/(2+d)) (S2 + S3)^(2/(2+d)) + S1}, M = max_w E|X_w|^(2+d)";
  r.constants = {{"C_choice", c_choice}, {"M", M}};
  r.delta = delta;
  r.alphas = {0.5, 0.0, 0.0};
  r.provenance = "closed_form";
  double coupled = 0.0, diagonal = 0.0;
  if (q.sigma2 > 0.0) {
    const double pre = c_choice * M * M / std::pow(q.sigma2, (2.0 + delta) / 2.0);
    coupled = pre * std::pow(q.row_power_sum, delta / (2.0 + delta)) *
              std::pow(q.square_power_sum + q.split_power_sum, 2.0 / (2.0 + delta));
    diagonal = pre * q.row_power_sum;
  }
  r.terms = {{"coupled_term", coupled}, {"row_term", diagonal}};
  r.finish();
  r.diagnostics["S1_row_power_sum"] = q.row_power_sum;
  r.diagnostics["S2_square_power_sum"] = q.square_power_sum;
  r.diagnostics["S3_split_power_sum"] = q.split_power_sum;
  r.diagnostics["sigma"] = std::sqrt(q.sigma2);
  r.diagnostics["L_tilde"] = q.sigma2 > 0.0 ? q.max_row_square / q.sigma2 : 0.0;
  r.diagnostics["trace_a4"] = q.trace_a4;
  r.diagnostics["trace_a4_over_sigma4"] = q.sigma2 > 0.0 ? q.trace_a4 / (q.sigma2 * q.sigma2) : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Serialisation.

inline nlohmann::json report_to_json(const BoundReport& r) {
  nlohmann::json j;
  j["bound_id"] = to_string(r.id);
  j["total"] = r.total;
  j["terms"] = nlohmann::json::array();
  for (const auto& [k, v] : r.terms) j["terms"].push_back({{"name", k}, {"value", v}});
  j["constants"] = nlohmann::json::object();
  for (const auto& [k, v] : r.constants) j["constants"][k] = v;
  j["diagnostics"] = r.diagnostics;
  j["delta"] = r.delta;
  j["alphas"] = {{"alpha", r.alphas.alpha}, {"beta", r.alphas.beta}, {"gamma", r.alphas.gamma}};
  j["input_provenance"] = r.provenance;
  j["formula"] = r.formula;
  return j;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_header(const BoundReport& r) {
  std::string h = "bound_total";
  for (const auto& [k, v] : r.terms) h += ",bound_term_" + k;
  return h;
}

inline std::string csv_row(const BoundReport& r) {
  std::string s = format_double(r.total);
  for (const auto& [k, v] : r.terms) s += "," + format_double(v);
  return s;
}

}  // namespace steingauge
