#pragma once

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steingauge/difference.hpp"
#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"
#include "steingauge/random.hpp"
#include "steingauge/statistics.hpp"

namespace steingauge {

enum class ProfileMode { exact, closed_form_mc, nested_mc };
enum class ProfileLevel { d1, d2 };

inline const char* to_string(ProfileMode m) {
  switch (m) {
    case ProfileMode::exact: return "exact";
    case ProfileMode::closed_form_mc: return "closed_form_mc";
    case ProfileMode::nested_mc: return "nested_mc";
  }
  return "?";
}

// Per-coordinate expectations. Orders are in terms of delta:
//   m1 E|D_kF|^{1+d}   m2 E|D_kF|^{2+d}   m3 E|D_kF|^{3+d}
//   z2 E|D_kZa|^{(2+d)/2}   z3 E|D_kZa|^{(3+d)/2}   w3 E|D_kZab|^{(3+d)/3}
//   t1_d1 E[(|D_kF|^d + E_k|D_kF|^d) |D_k^(b) Za|]
//   t2_d1 E[(|D_kF|^{1+d} + E_k|D_kF|^{1+d}) |D_k^(a) F|]
//   t1_d2 E[(|D_kF|^d + E_k|D_kF|^d) |D_k^(g) Zab|]
//   t2_d2 E[(|D_kF|^{1+d} + E_k|D_kF|^{1+d}) |D_k^(b) Za|]
//   t3_d2 E[(|D_kF|^{2+d} + E_k|D_kF|^{2+d}) |D_k^(a) F|]
enum class Entry : std::size_t { m1, m2, m3, z2, z3, w3, t1_d1, t2_d1, t1_d2, t2_d2, t3_d2 };
inline constexpr std::size_t kEntryCount = 11;

inline const char* entry_name(Entry e) {
  static constexpr const char* names[kEntryCount] = {"m1", "m2", "m3", "z2", "z3", "w3",
                                                     "t1_d1", "t2_d1", "t1_d2", "t2_d2", "t3_d2"};
  return names[static_cast<std::size_t>(e)];
}

inline constexpr std::array<Entry, 5> kD1Entries = {Entry::m1, Entry::m2, Entry::z2, Entry::t1_d1, Entry::t2_d1};
inline constexpr std::array<Entry, kEntryCount> kAllEntries = {
    Entry::m1, Entry::m2, Entry::m3, Entry::z2, Entry::z3, Entry::w3,
    Entry::t1_d1, Entry::t2_d1, Entry::t1_d2, Entry::t2_d2, Entry::t3_d2};

struct DiffProfile {
  std::size_t n = 0;
  double delta = 1.0;
  AlphaParams params;
  ProfileLevel level = ProfileLevel::d1;
  ProfileMode mode = ProfileMode::exact;
  std::string method;  // analytic | enumeration | closed_form_mc | nested_mc
  std::string statistic;

  std::array<std::vector<double>, kEntryCount> values;
  std::array<std::vector<double>, kEntryCount> errors;
  std::array<Estimate, kEntryCount> totals;
  std::array<bool, kEntryCount> present{};

  Estimate mean;
  Estimate variance;
  Estimate z_alpha_mean;
  std::optional<Estimate> third_moment;       // E[(F - EF)^3]
  std::optional<Estimate> z_alpha_beta_mean;  // E[Z^(a,b)]

  std::optional<McBudget> budget;
  std::map<std::string, double> drift;  // |total(inner) - total(inner/2)| per entry

  [[nodiscard]] double sigma() const { return std::sqrt(variance.value); }
  [[nodiscard]] bool has(Entry e) const { return present[static_cast<std::size_t>(e)]; }

  [[nodiscard]] const std::vector<double>& entry(Entry e) const {
    if (!has(e)) throw MissingProfileEntry(std::string("profile has no entry ") + entry_name(e));
    return values[static_cast<std::size_t>(e)];
  }
  [[nodiscard]] Estimate total(Entry e) const {
    if (!has(e)) throw MissingProfileEntry(std::string("profile has no entry ") + entry_name(e));
    return totals[static_cast<std::size_t>(e)];
  }

  void set(Entry e, std::vector<double> v, std::vector<double> se = {}) {
    const auto i = static_cast<std::size_t>(e);
    if (se.empty()) se.assign(v.size(), 0.0);
    KahanSum s;
    for (double a : v) s += a;
    totals[i] = {s.value(), 0.0};
    values[i] = std::move(v);
    errors[i] = std::move(se);
    present[i] = true;
  }
};

namespace detail {

inline void check_profile_inputs(const StatisticModel& model, const AlphaParams& params, double delta,
                                 ProfileLevel level) {
  params.validate();
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  const double order = (level == ProfileLevel::d1 ? 2.0 : 3.0) + delta;
  if (model.space.min_moment_ceiling() <= order)
    throw MomentDoesNotExist("components lack finite moments of order " + std::to_string(order));
}

// E|Y|^p for Y = X - EX, any p > 0.
inline double central_abs_moment(const DistributionSpec& spec, double p) {
  if (p >= 1.0) return exact_abs_moment(spec, p);
  const double mu = spec.mean();
  const double kinks[] = {mu};
  return expect(spec, [mu, p](double x) { return abs_pow(x - mu, p); }, kinks);
}

// Real roots of y^3 - 3 v^2 y - kappa.
inline std::vector<double> cubic_kinks(double v, double kappa) {
  const double v3 = v * v * v;
  if (kappa * kappa < 4.0 * v3 * v3) {
    const double theta = std::acos(std::clamp(kappa / (2.0 * v3), -1.0, 1.0));
    std::vector<double> r;
    for (int j = 0; j < 3; ++j) r.push_back(2.0 * v * std::cos((theta - 2.0 * std::numbers::pi * j) / 3.0));
    return r;
  }
  const double s = std::sqrt(kappa * kappa / 4.0 - v3 * v3);
  return {std::cbrt(kappa / 2.0 + s) + std::cbrt(kappa / 2.0 - s)};
}

struct ComponentEntries {
  std::array<double, kEntryCount> v{};
};

inline ComponentEntries partial_sum_component(const DistributionSpec& spec, double delta, ProfileLevel level) {
  ComponentEntries c;
  const double mu = spec.mean();
  const double var = spec.variance();
  const double v = std::sqrt(var);
  auto at = [&c](Entry e) -> double& { return c.v[static_cast<std::size_t>(e)]; };
  const double md = central_abs_moment(spec, delta);
  const double m1d = central_abs_moment(spec, 1.0 + delta);
  const double m2d = central_abs_moment(spec, 2.0 + delta);
  const double mabs = central_abs_moment(spec, 1.0);
  const double sq_kinks[] = {mu - v, mu, mu + v};
  auto sq = [mu, var](double x) { return std::abs((x - mu) * (x - mu) - var); };
  at(Entry::m1) = m1d;
  at(Entry::m2) = m2d;
  at(Entry::z2) = expect(spec, [&](double x) { return abs_pow(sq(x), (2.0 + delta) / 2.0); }, sq_kinks);
  at(Entry::t1_d1) = expect(spec, [&](double x) { return (abs_pow(x - mu, delta) + md) * sq(x); }, sq_kinks);
  at(Entry::t2_d1) = m2d + m1d * mabs;
  if (level == ProfileLevel::d2) {
    const double kappa = spec.third_central_moment();
    std::vector<double> cub = cubic_kinks(v, kappa);
    for (double& r : cub) r += mu;
    cub.push_back(mu);
    auto cube = [mu, var, kappa](double x) {
      const double y = x - mu;
      return 0.5 * std::abs(y * y * y - 3.0 * var * y - kappa);
    };
    at(Entry::m3) = central_abs_moment(spec, 3.0 + delta);
    at(Entry::z3) = expect(spec, [&](double x) { return abs_pow(sq(x), (3.0 + delta) / 2.0); }, sq_kinks);
    at(Entry::w3) = expect(spec, [&](double x) { return abs_pow(cube(x), (3.0 + delta) / 3.0); }, cub);
    at(Entry::t1_d2) = expect(spec, [&](double x) { return (abs_pow(x - mu, delta) + md) * cube(x); }, cub);
    at(Entry::t2_d2) = expect(spec, [&](double x) { return (abs_pow(x - mu, 1.0 + delta) + m1d) * sq(x); }, sq_kinks);
    at(Entry::t3_d2) = at(Entry::m3) + m2d * mabs;
  }
  return c;
}

// Distribution of a sum of `count` Rademacher variables: (values, probabilities).
inline std::pair<std::vector<double>, std::vector<double>> rademacher_sum_law(std::size_t count) {
  std::vector<double> val(count + 1), prob(count + 1);
  const double ln2 = std::log(2.0);
  for (std::size_t j = 0; j <= count; ++j) {
    val[j] = 2.0 * static_cast<double>(j) - static_cast<double>(count);
    prob[j] = std::exp(std::lgamma(count + 1.0) - std::lgamma(j + 1.0) - std::lgamma(count - j + 1.0) -
                       static_cast<double>(count) * ln2);
  }
  return {val, prob};
}

inline double rademacher_sum_abs_moment(std::size_t count, double p) {
  const auto [val, prob] = rademacher_sum_law(count);
  KahanSum s;
  for (std::size_t j = 0; j < val.size(); ++j) s += prob[j] * abs_pow(val[j], p);
  return s.value();
}

// E|b A + (1-b) B| for independent Rademacher sums of sizes na and nb.
inline double rademacher_mixture_abs_mean(std::size_t na, std::size_t nb, double b) {
  const auto [va, pa] = rademacher_sum_law(na);
  const auto [vb, pb] = rademacher_sum_law(nb);
  KahanSum s;
  for (std::size_t i = 0; i < va.size(); ++i)
    for (std::size_t j = 0; j < vb.size(); ++j) s += pa[i] * pb[j] * std::abs(b * va[i] + (1.0 - b) * vb[j]);
  return s.value();
}

inline bool analytic_supported(const StatisticModel& model, const AlphaParams& params, ProfileLevel level) {
  if (std::holds_alternative<PartialSumInfo>(model.family)) return true;
  if (std::holds_alternative<ProductExampleInfo>(model.family))
    return level == ProfileLevel::d1 || params.alpha == 0.0;
  return false;
}

inline DiffProfile analytic_profile(const StatisticModel& model, const AlphaParams& params, double delta,
                                    ProfileLevel level) {
  DiffProfile p;
  p.n = model.arity();
  p.delta = delta;
  p.params = params;
  p.level = level;
  p.mode = ProfileMode::exact;
  p.method = "analytic";
  p.statistic = model.name;
  const std::size_t n = p.n;
  const auto entries = level == ProfileLevel::d1 ? std::vector<Entry>(kD1Entries.begin(), kD1Entries.end())
                                                 : std::vector<Entry>(kAllEntries.begin(), kAllEntries.end());
  std::array<std::vector<double>, kEntryCount> cols;
  for (auto& c : cols) c.assign(n, 0.0);

  if (std::holds_alternative<PartialSumInfo>(model.family)) {
    std::vector<std::pair<const DistributionSpec*, ComponentEntries>> cache;
    KahanSum var, kappa;
    for (std::size_t k = 0; k < n; ++k) {
      const DistributionSpec& spec = model.space[k];
      const ComponentEntries* found = nullptr;
      for (const auto& [s, e] : cache)
        if (*s == spec) found = &e;
      if (!found) {
        cache.emplace_back(&spec, partial_sum_component(spec, delta, level));
        found = &cache.back().second;
      }
      for (Entry e : entries) cols[static_cast<std::size_t>(e)][k] = found->v[static_cast<std::size_t>(e)];
      var += spec.variance();
      if (level == ProfileLevel::d2) kappa += spec.third_central_moment();
    }
    p.mean = {0.0, 0.0};
    p.variance = {var.value(), 0.0};
    p.z_alpha_mean = p.variance;
    if (level == ProfileLevel::d2) {
      p.third_moment = Estimate{kappa.value(), 0.0};
      p.z_alpha_beta_mean = Estimate{0.5 * kappa.value(), 0.0};
    }
  } else {
    // Product example on Rademacher^n; coordinate n-1 is the multiplier.
    const double a = params.alpha, b = params.beta, g = params.gamma;
    const std::size_t last = n - 1;
    auto col = [&cols](Entry e) -> std::vector<double>& { return cols[static_cast<std::size_t>(e)]; };
    const double s1 = rademacher_sum_abs_moment(n - 1, 1.0 + delta);
    const double s2 = rademacher_sum_abs_moment(n - 1, 2.0 + delta);
    const double rq = n >= 2 ? rademacher_sum_abs_moment(n - 2, (2.0 + delta) / 2.0) : 0.0;
    for (std::size_t k = 0; k < last; ++k) {
      col(Entry::m1)[k] = 1.0;
      col(Entry::m2)[k] = 1.0;
      col(Entry::z2)[k] = a == 0.0 ? 0.0 : abs_pow(2.0 * a, (2.0 + delta) / 2.0) * rq;
      const double mix = a == 0.0 ? 0.0 : rademacher_mixture_abs_mean(k, n - 2 - k, b);
      col(Entry::t1_d1)[k] = 4.0 * a * mix;
      col(Entry::t2_d1)[k] = 2.0 * (1.0 - a);
    }
    col(Entry::m1)[last] = s1;
    col(Entry::m2)[last] = s2;
    col(Entry::t2_d1)[last] = 2.0 * a * s2;
    if (level == ProfileLevel::d2) {
      const double s3 = rademacher_sum_abs_moment(n - 1, 3.0 + delta);
      for (std::size_t k = 0; k < last; ++k) {
        col(Entry::m3)[k] = 1.0;
        col(Entry::w3)[k] = 1.0;
        col(Entry::t1_d2)[k] = 2.0 * (1.0 - g);
        col(Entry::t3_d2)[k] = 2.0;
      }
      col(Entry::m3)[last] = s3;
      col(Entry::w3)[last] = rademacher_sum_abs_moment(n - 1, (3.0 + delta) / 3.0);
      col(Entry::t1_d2)[last] = 2.0 * g * s1;
    }
    const double var = static_cast<double>(n - 1);
    p.mean = {0.0, 0.0};
    p.variance = {var, 0.0};
    p.z_alpha_mean = {var, 0.0};
    p.third_moment = Estimate{0.0, 0.0};
    if (level == ProfileLevel::d2) p.z_alpha_beta_mean = Estimate{0.0, 0.0};
  }
  for (Entry e : entries) p.set(e, std::move(cols[static_cast<std::size_t>(e)]));
  return p;
}

inline DiffProfile enumeration_profile(const StatisticModel& model, const AlphaParams& params, double delta,
                                       ProfileLevel level) {
  const EnumerableSpace es(model.space);
  const std::size_t n = model.arity();
  DiffProfile p;
  p.n = n;
  p.delta = delta;
  p.params = params;
  p.level = level;
  p.mode = ProfileMode::exact;
  p.method = "enumeration";
  p.statistic = model.name;
  const double a = params.alpha, b = params.beta, g = params.gamma, d = delta;
  std::array<std::vector<double>, kEntryCount> cols;
  for (auto& c : cols) c.assign(n, 0.0);
  auto col = [&cols](Entry e) -> std::vector<double>& { return cols[static_cast<std::size_t>(e)]; };
  const Table f = tabulate(es, model.evaluate);
  const std::size_t S = f.size();

  // E[(|dk|^q + E_k|dk|^q) |w|]
  auto mixed = [&](const Table& dk, std::size_t k, double q, const Table& w) {
    const Table pw = abs_pow_table(dk, q);
    const Table ew = integrate_coordinate(es, pw, k);
    Table t(S);
    for (std::size_t i = 0; i < S; ++i) t[i] = (pw[i] + ew[i]) * std::abs(w[i]);
    return expect(es, t);
  };
  auto moment = [&](const Table& t, double q) { return expect(es, abs_pow_table(t, q)); };

  Table za(S, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const Table dk = diff(es, f, k);
    const Table da = diff_alpha_from(es, dk, k, a);
    for (std::size_t i = 0; i < S; ++i) za[i] += dk[i] * da[i];
    col(Entry::m1)[k] = moment(dk, 1.0 + d);
    col(Entry::m2)[k] = moment(dk, 2.0 + d);
    col(Entry::t2_d1)[k] = mixed(dk, k, 1.0 + d, da);
    if (level == ProfileLevel::d2) {
      col(Entry::m3)[k] = moment(dk, 3.0 + d);
      col(Entry::t3_d2)[k] = mixed(dk, k, 2.0 + d, da);
    }
  }
  Table zab(S, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const Table dk = diff(es, f, k);
    const Table da = diff_alpha_from(es, dk, k, a);
    const Table dz = diff(es, za, k);
    const Table dbz = diff_alpha_from(es, dz, k, b);
    col(Entry::z2)[k] = moment(dz, (2.0 + d) / 2.0);
    col(Entry::t1_d1)[k] = mixed(dk, k, d, dbz);
    Table sq(S);
    for (std::size_t i = 0; i < S; ++i) sq[i] = dk[i] * dk[i];
    const Table eksq = integrate_coordinate(es, sq, k);
    for (std::size_t i = 0; i < S; ++i) zab[i] += dk[i] * dbz[i] - 0.5 * (sq[i] + eksq[i]) * da[i];
    if (level == ProfileLevel::d2) {
      col(Entry::z3)[k] = moment(dz, (3.0 + d) / 2.0);
      col(Entry::t2_d2)[k] = mixed(dk, k, 1.0 + d, dbz);
    }
  }
  if (level == ProfileLevel::d2) {
    for (std::size_t k = 0; k < n; ++k) {
      const Table dk = diff(es, f, k);
      const Table dw = diff(es, zab, k);
      const Table dgw = diff_alpha_from(es, dw, k, g);
      col(Entry::w3)[k] = moment(dw, (3.0 + d) / 3.0);
      col(Entry::t1_d2)[k] = mixed(dk, k, d, dgw);
    }
  }
  const double mean = expect(es, f);
  Table c2(S), c3(S);
  for (std::size_t i = 0; i < S; ++i) {
    const double y = f[i] - mean;
    c2[i] = y * y;
    c3[i] = y * y * y;
  }
  p.mean = {mean, 0.0};
  p.variance = {expect(es, c2), 0.0};
  p.z_alpha_mean = {expect(es, za), 0.0};
  p.third_moment = Estimate{expect(es, c3), 0.0};
  p.z_alpha_beta_mean = Estimate{expect(es, zab), 0.0};
  const auto& entries = level == ProfileLevel::d1 ? std::vector<Entry>(kD1Entries.begin(), kD1Entries.end())
                                                  : std::vector<Entry>(kAllEntries.begin(), kAllEntries.end());
  for (Entry e : entries) p.set(e, std::move(col(e)));
  return p;
}

struct McColumns {
  std::vector<std::array<double, kEntryCount>> per_k;  // batch sums per coordinate
  double f1 = 0, f2 = 0, f3 = 0, za = 0, zab = 0;
};

inline DiffProfile mc_profile(const StatisticModel& model, const AlphaParams& params, double delta,
                              ProfileLevel level, const McBudget& budget, std::size_t inner) {
  const std::size_t n = model.arity();
  const bool want_d2 = level == ProfileLevel::d2;
  const NodeBuilder nb(model, inner, budget.exact_set_limit);
  const double d = delta;
  std::vector<Node> dF, daF, ek_d, ek_1d, ek_2d, dZ, dbZ, dW, dgW;
  const Node f = nb.f();
  const Node za = nb.z_alpha(params.alpha);
  const Node zab = nb.z_alpha_beta(params.alpha, params.beta);
  for (std::size_t k = 0; k < n; ++k) {
    dF.push_back(nb.diff_f(k));
    daF.push_back(nb.diff_alpha_f(k, params.alpha));
    ek_d.push_back(nb.ek_abs_pow_diff_f(k, d));
    ek_1d.push_back(nb.ek_abs_pow_diff_f(k, 1.0 + d));
    if (want_d2) ek_2d.push_back(nb.ek_abs_pow_diff_f(k, 2.0 + d));
    dZ.push_back(nb.diff(za, k));
    dbZ.push_back(nb.alpha_of_diff(dZ.back(), k, params.beta));
    if (want_d2) {
      dW.push_back(nb.diff(zab, k));
      dgW.push_back(nb.alpha_of_diff(dW.back(), k, params.gamma));
    }
  }
  const std::size_t batches = budget.batches;
  const std::size_t per = budget.outer / batches;
  std::vector<McColumns> acc(batches);
  parallel_for(batches, [&](std::size_t bidx) {
    McColumns& c = acc[bidx];
    c.per_k.assign(n, {});
    Xoshiro256 outer = make_stream(budget.seed, {stream_tag::kProfileOuter, bidx});
    Xoshiro256 rng = make_stream(budget.seed, {stream_tag::kProfileInner, bidx});
    std::vector<double> x(n);
    for (std::size_t s = 0; s < per; ++s) {
      for (std::size_t k = 0; k < n; ++k) x[k] = model.space[k].sample(outer);
      const double fv = f(x, rng);
      c.f1 += fv;
      c.f2 += fv * fv;
      c.f3 += fv * fv * fv;
      c.za += za(x, rng);
      c.zab += zab(x, rng);
      for (std::size_t k = 0; k < n; ++k) {
        auto& e = c.per_k[k];
        auto at = [&e](Entry en) -> double& { return e[static_cast<std::size_t>(en)]; };
        const double dk = dF[k](x, rng);
        const double da = daF[k](x, rng);
        const double adk = std::abs(dk);
        const double e_d = ek_d[k](x, rng);
        const double e_1d = ek_1d[k](x, rng);
        const double dz = dZ[k](x, rng);
        const double dbz = dbZ[k](x, rng);
        at(Entry::m1) += abs_pow(adk, 1.0 + d);
        at(Entry::m2) += abs_pow(adk, 2.0 + d);
        at(Entry::z2) += abs_pow(dz, (2.0 + d) / 2.0);
        at(Entry::t1_d1) += (abs_pow(adk, d) + e_d) * std::abs(dbz);
        at(Entry::t2_d1) += (abs_pow(adk, 1.0 + d) + e_1d) * std::abs(da);
        if (want_d2) {
          const double e_2d = ek_2d[k](x, rng);
          const double dw = dW[k](x, rng);
          const double dgw = dgW[k](x, rng);
          at(Entry::m3) += abs_pow(adk, 3.0 + d);
          at(Entry::z3) += abs_pow(dz, (3.0 + d) / 2.0);
          at(Entry::w3) += abs_pow(dw, (3.0 + d) / 3.0);
          at(Entry::t1_d2) += (abs_pow(adk, d) + e_d) * std::abs(dgw);
          at(Entry::t2_d2) += (abs_pow(adk, 1.0 + d) + e_1d) * std::abs(dbz);
          at(Entry::t3_d2) += (abs_pow(adk, 2.0 + d) + e_2d) * std::abs(da);
        }
      }
    }
  });

  const double B = static_cast<double>(batches);
  const double P = static_cast<double>(per);
  auto summarize = [&](auto&& get) -> Estimate {
    std::vector<double> v(batches);
    for (std::size_t bi = 0; bi < batches; ++bi) v[bi] = get(acc[bi]) / P;
    const double mean = kahan_sum(v) / B;
    KahanSum ss;
    for (double a : v) ss += (a - mean) * (a - mean);
    return {mean, std::sqrt(ss.value() / (B - 1.0) / B)};
  };

  DiffProfile p;
  p.n = n;
  p.delta = delta;
  p.params = params;
  p.level = level;
  p.statistic = model.name;
  p.budget = budget;
  p.budget->inner = inner;
  const auto entries = want_d2 ? std::vector<Entry>(kAllEntries.begin(), kAllEntries.end())
                               : std::vector<Entry>(kD1Entries.begin(), kD1Entries.end());
  for (Entry e : entries) {
    const auto i = static_cast<std::size_t>(e);
    std::vector<double> v(n), se(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Estimate est = summarize([&](const McColumns& c) { return c.per_k[k][i]; });
      v[k] = est.value;
      se[k] = est.se;
    }
    p.set(e, std::move(v), std::move(se));
    p.totals[i] = summarize([&](const McColumns& c) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += c.per_k[k][i];
      return s;
    });
  }
  const Estimate m1 = summarize([](const McColumns& c) { return c.f1; });
  p.mean = m1;
  const double mu = model.mean.value_or(m1.value);
  // Central moments from the per-batch raw moments around a fixed centre mu.
  p.variance = summarize([&](const McColumns& c) { return c.f2 - 2.0 * mu * c.f1 + mu * mu * P; });
  if (!model.mean) p.variance.value -= (m1.value - mu) * (m1.value - mu);
  if (model.variance) p.variance = {*model.variance, 0.0};
  p.third_moment = summarize([&](const McColumns& c) {
    return c.f3 - 3.0 * mu * c.f2 + 3.0 * mu * mu * c.f1 - mu * mu * mu * P;
  });
  p.z_alpha_mean = summarize([](const McColumns& c) { return c.za; });
  p.z_alpha_beta_mean = summarize([](const McColumns& c) { return c.zab; });
  return p;
}

}  // namespace detail

// Collects every expectation used by the d1 (and, at level d2, d2) bounds.
// Dispatch order: analytic closed forms, exact enumeration, Monte Carlo over
// the outer law with closed-form differences, nested Monte Carlo.
inline DiffProfile profile(const StatisticModel& model, const AlphaParams& params, double delta,
                           ProfileLevel level = ProfileLevel::d1, const std::optional<McBudget>& budget = std::nullopt,
                           std::size_t enumeration_cap = std::size_t{1} << 22) {
  detail::check_profile_inputs(model, params, delta, level);
  if (detail::analytic_supported(model, params, level)) return detail::analytic_profile(model, params, delta, level);
  if (detail::enumerable(model.space, enumeration_cap)) return detail::enumeration_profile(model, params, delta, level);
  if (!budget) throw BudgetMissing("statistic '" + model.name + "' needs a Monte Carlo budget for profiling");
  if (budget->batches < 30) throw InvalidArgument("Monte Carlo profiles need at least 30 batches");
  if (budget->outer < budget->batches) throw InvalidArgument("outer sample count below the batch count");
  DiffProfile p = detail::mc_profile(model, params, delta, level, *budget, budget->inner);
  const NodeBuilder nb(model, budget->inner, budget->exact_set_limit);
  const bool nested_inner = !nb.all_exact();
  p.mode = model.closed_form ? ProfileMode::closed_form_mc : ProfileMode::nested_mc;
  p.method = to_string(p.mode);
  if (nested_inner && budget->drift_check && budget->inner >= 2) {
    const DiffProfile half = detail::mc_profile(model, params, delta, level, *budget, budget->inner / 2);
    for (std::size_t i = 0; i < kEntryCount; ++i)
      if (p.present[i]) p.drift[entry_name(static_cast<Entry>(i))] = std::abs(p.totals[i].value - half.totals[i].value);
  }
  return p;
}

// (E[(F - EF)^3], 2 E[Z^(a,b)]) from a level-d2 profile or directly.
struct ThirdMomentCheck {
  Estimate third_moment;
  Estimate twice_z_alpha_beta;
  double residual = 0.0;
};

inline ThirdMomentCheck third_moment_check(const DiffProfile& p) {
  if (!p.third_moment || !p.z_alpha_beta_mean)
    throw MissingProfileEntry("profile carries no third-moment information");
  ThirdMomentCheck c;
  c.third_moment = *p.third_moment;
  c.twice_z_alpha_beta = {2.0 * p.z_alpha_beta_mean->value, 2.0 * p.z_alpha_beta_mean->se};
  c.residual = std::abs(c.third_moment.value - c.twice_z_alpha_beta.value);
  return c;
}

inline ThirdMomentCheck third_moment_check(const StatisticModel& model, const AlphaParams& params = {},
                                           const std::optional<McBudget>& budget = std::nullopt) {
  if (model.space.min_moment_ceiling() <= 3.0) throw MomentDoesNotExist("E|F|^3 is not finite for this space");
  if (detail::enumerable(model.space, std::size_t{1} << 22)) {
    const EnumerableSpace es(model.space);
    const ExactTables t = exact_tables(es, model, params.alpha, params.beta);
    const double mean = expect(es, t.f);
    Table c3(t.f.size());
    for (std::size_t i = 0; i < c3.size(); ++i) c3[i] = std::pow(t.f[i] - mean, 3);
    ThirdMomentCheck c;
    c.third_moment = {expect(es, c3), 0.0};
    c.twice_z_alpha_beta = {2.0 * expect(es, t.z_alpha_beta), 0.0};
    c.residual = std::abs(c.third_moment.value - c.twice_z_alpha_beta.value);
    return c;
  }
  // Level-d2 profile without the moment gate on 3 + delta.
  if (detail::analytic_supported(model, params, ProfileLevel::d2) && model.space.min_moment_ceiling() > 4.0)
    return third_moment_check(detail::analytic_profile(model, params, 1.0, ProfileLevel::d2));
  if (!budget) throw BudgetMissing("third_moment_check needs a Monte Carlo budget on this space");
  return third_moment_check(detail::mc_profile(model, params, 1.0, ProfileLevel::d2, *budget, budget->inner));
}

inline nlohmann::json to_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

inline nlohmann::json profile_to_json(const DiffProfile& p) {
  nlohmann::json j;
  j["statistic"] = p.statistic;
  j["n"] = p.n;
  j["delta"] = p.delta;
  j["alpha"] = p.params.alpha;
  j["beta"] = p.params.beta;
  j["gamma"] = p.params.gamma;
  j["level"] = p.level == ProfileLevel::d1 ? "d1" : "d2";
  j["mode"] = to_string(p.mode);
  j["method"] = p.method;
  j["mean"] = to_json(p.mean);
  j["variance"] = to_json(p.variance);
  j["z_alpha_mean"] = to_json(p.z_alpha_mean);
  j["third_moment"] = p.third_moment ? to_json(*p.third_moment) : nlohmann::json(nullptr);
  j["z_alpha_beta_mean"] = p.z_alpha_beta_mean ? to_json(*p.z_alpha_beta_mean) : nlohmann::json(nullptr);
  nlohmann::json entries = nlohmann::json::object();
  for (std::size_t i = 0; i < kEntryCount; ++i) {
    if (!p.present[i]) continue;
    entries[entry_name(static_cast<Entry>(i))] = {
        {"values", p.values[i]}, {"se", p.errors[i]}, {"total", to_json(p.totals[i])}};
  }
  j["entries"] = entries;
  if (p.budget) {
    j["budget"] = {{"outer", p.budget->outer},     {"inner", p.budget->inner},
                   {"batches", p.budget->batches}, {"exact_set_limit", p.budget->exact_set_limit},
                   {"seed", p.budget->seed}};
  }
  if (!p.drift.empty()) j["inner_drift"] = p.drift;
  return j;
}

}  // namespace steingauge
