#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "steingauge/difference.hpp"
#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"
#include "steingauge/random.hpp"

namespace steingauge {

// Sum of c * prod x_j^e over monomials.
struct Polynomial {
  struct Monomial {
    double coefficient = 0.0;
    std::vector<std::pair<std::size_t, int>> powers;
  };
  std::vector<Monomial> terms;

  double operator()(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& m : terms) {
      double p = m.coefficient;
      for (const auto& [j, e] : m.powers) p *= e == 1 ? x[j] : e == 2 ? x[j] * x[j] : x[j] * x[j] * x[j];
      s += p;
    }
    return s;
  }
};

struct BatteryCase {
  ProductSpace space;
  Polynomial u;
  Polynomial v;
};

// Random polynomial statistics on Rademacher / asymmetric two-point product
// spaces with 2..8 coordinates. Case i draws from stream (seed, kBattery, i).
inline BatteryCase random_battery_case(std::uint64_t seed, std::size_t i) {
  Xoshiro256 rng = make_stream(seed, {stream_tag::kBattery, i});
  const std::size_t n = 2 + rng.below(7);
  std::vector<DistributionSpec> comps;
  const bool mixed = rng.bit();
  DistributionSpec shared = DistributionSpec::rademacher();
  auto two_point = [&rng] {
    const double a = -0.25 - 1.75 * rng.uniform();
    const double b = 0.25 + 2.75 * rng.uniform();
    const double p = 0.15 + 0.7 * rng.uniform();
    return DistributionSpec::finite_support({{a, p}, {b, 1.0 - p}});
  };
  if (!mixed && rng.bit()) shared = two_point();
  for (std::size_t k = 0; k < n; ++k) comps.push_back(mixed ? (rng.bit() ? two_point() : DistributionSpec::rademacher()) : shared);
  auto poly = [&rng, n] {
    Polynomial p;
    const std::size_t count = 1 + rng.below(6);
    for (std::size_t t = 0; t < count; ++t) {
      Polynomial::Monomial m;
      m.coefficient = 4.0 * rng.uniform() - 2.0;
      const std::size_t degree = rng.below(4);  // 0 gives a constant term
      for (std::size_t d = 0; d < degree; ++d) {
        const std::size_t j = rng.below(n);
        auto it = std::find_if(m.powers.begin(), m.powers.end(), [j](const auto& pe) { return pe.first == j; });
        if (it == m.powers.end())
          m.powers.emplace_back(j, 1);
        else
          it->second = std::min(3, it->second + 1);
      }
      p.terms.push_back(std::move(m));
    }
    return p;
  };
  BatteryCase c{ProductSpace(std::move(comps)), poly(), {}};
  c.v = poly();
  return c;
}

struct CheckSummary {
  std::string name;
  std::size_t evaluations = 0;
  double max_violation = 0.0;      // max (lhs - rhs) / max(1, |rhs|), clipped at 0
  double max_residual = 0.0;       // identities: max |lhs - rhs|
  std::array<std::size_t, 10> tightness{};  // histogram of lhs/rhs in [0,1]
  bool identity = false;
  double tolerance = 1e-10;

  void inequality(double lhs, double rhs) {
    ++evaluations;
    const double v = (lhs - rhs) / std::max(1.0, std::abs(rhs));
    max_violation = std::max(max_violation, v);
    if (rhs > 0.0) {
      const double r = std::clamp(lhs / rhs, 0.0, 1.0);
      ++tightness[std::min<std::size_t>(9, static_cast<std::size_t>(r * 10.0))];
    }
  }
  void equality(double lhs, double rhs) {
    ++evaluations;
    max_residual = std::max(max_residual, std::abs(lhs - rhs));
  }
  [[nodiscard]] bool passed() const { return identity ? max_residual <= tolerance : max_violation <= tolerance; }
};

struct BatteryReport {
  std::size_t statistics = 0;
  std::vector<CheckSummary> checks;

  [[nodiscard]] bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckSummary& c) { return c.passed(); });
  }
  CheckSummary& check(const std::string& name, bool identity = false, double tol = 1e-10) {
    for (auto& c : checks)
      if (c.name == name) return c;
    CheckSummary c;
    c.name = name;
    c.identity = identity;
    c.tolerance = tol;
    checks.push_back(c);
    return checks.back();
  }
};

inline nlohmann::json to_json(const BatteryReport& r) {
  nlohmann::json j;
  j["statistics"] = r.statistics;
  j["passed"] = r.passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) {
    nlohmann::json e{{"name", c.name}, {"evaluations", c.evaluations}, {"passed", c.passed()}};
    if (c.identity)
      e["max_residual"] = c.max_residual;
    else {
      e["max_violation"] = c.max_violation;
      e["tightness_histogram"] = c.tightness;
    }
    e["tolerance"] = c.tolerance;
    j["checks"].push_back(e);
  }
  return j;
}

namespace detail {

inline double table_abs_moment(const EnumerableSpace& es, const Table& t, double p) {
  return expect(es, abs_pow_table(t, p));
}

}  // namespace detail

inline constexpr std::size_t kBatterySize = 240;

// Appendix inequalities: Marcinkiewicz-Zygmund type, von Bahr-Esseen type
// and Efron-Stein, all by exact enumeration.
// (lhs, rhs) of each appendix inequality for one statistic: MZ-type at
// p = 2, 2.5, 3, 4, von Bahr-Esseen type at delta = 1/4, 1/2, 1, Efron-Stein.
struct InequalitySides {
  std::vector<std::pair<double, double>> mz, vbe;
  std::pair<double, double> efron_stein;
};

inline constexpr double kMzOrders[] = {2.0, 2.5, 3.0, 4.0};
inline constexpr double kVbeDeltas[] = {0.25, 0.5, 1.0};

template <class F>
InequalitySides inequality_sides(const EnumerableSpace& es, const F& statistic) {
  InequalitySides out;
  const Table u = tabulate(es, statistic);
  const double eu = expect(es, u);
  std::vector<Table> d;
  for (std::size_t k = 0; k < es.dimension(); ++k) d.push_back(diff(es, u, k));
  for (double p : kMzOrders) {
    KahanSum rhs;
    for (const auto& dk : d) rhs += std::pow(detail::table_abs_moment(es, dk, p), 2.0 / p);
    out.mz.emplace_back(std::pow(detail::table_abs_moment(es, u, p), 2.0 / p), eu * eu + (p - 1.0) * rhs.value());
  }
  for (double delta : kVbeDeltas) {
    const double q = 1.0 + delta;
    KahanSum rhs;
    for (const auto& dk : d) rhs += detail::table_abs_moment(es, dk, q);
    out.vbe.emplace_back(detail::table_abs_moment(es, u, q), abs_pow(eu, q) + std::pow(2.0, 2.0 - delta) * rhs.value());
  }
  KahanSum es_rhs;
  for (const auto& dk : d) es_rhs += detail::table_abs_moment(es, dk, 2.0);
  out.efron_stein = {detail::table_abs_moment(es, u, 2.0), eu * eu + es_rhs.value()};
  return out;
}

inline BatteryReport inequality_battery(std::uint64_t seed, std::size_t count = kBatterySize) {
  BatteryReport rep;
  rep.statistics = count;
  rep.check("marcinkiewicz_zygmund");
  rep.check("von_bahr_esseen");
  rep.check("efron_stein");
  for (std::size_t i = 0; i < count; ++i) {
    const BatteryCase c = random_battery_case(seed, i);
    const EnumerableSpace es(c.space);
    const InequalitySides s = inequality_sides(es, c.u);
    for (const auto& [l, r] : s.mz) rep.check("marcinkiewicz_zygmund").inequality(l, r);
    for (const auto& [l, r] : s.vbe) rep.check("von_bahr_esseen").inequality(l, r);
    rep.check("efron_stein").inequality(s.efron_stein.first, s.efron_stein.second);
  }
  return rep;
}

// Structural identities and contractions of the difference operators:
// covariance identity, contraction of D_i and D_i^(alpha), the third-moment
// identity E[F^3] = 2 E[Z^(alpha,beta)] and the Holder chain for Z^(alpha).
inline BatteryReport covariance_battery(std::uint64_t seed, std::size_t count = kBatterySize) {
  BatteryReport rep;
  rep.statistics = count;
  rep.check("covariance_identity", true, 1e-9);
  rep.check("variance_equals_mean_z_alpha", true, 1e-9);
  rep.check("diff_contraction");
  rep.check("diff_alpha_contraction");
  rep.check("third_moment_identity", true, 1e-9);
  rep.check("z_alpha_holder_chain");
  for (std::size_t i = 0; i < count; ++i) {
    const BatteryCase c = random_battery_case(seed, i);
    const EnumerableSpace es(c.space);
    const double n = static_cast<double>(es.dimension());
    for (double alpha : {0.0, 0.5, 1.0}) {
      rep.check("covariance_identity").equality(0.0, covariance_identity_residual(c.space, c.u, c.v, alpha));
      rep.check("covariance_identity").equality(0.0, covariance_identity_residual(c.space, c.v, c.u, alpha));
    }
    Table u = tabulate(es, c.u);
    for (double p : {2.0, 2.5, 3.0, 4.0}) {
      const double mu = detail::table_abs_moment(es, u, p);
      for (std::size_t k = 0; k < es.dimension(); ++k) {
        const Table dk = diff(es, u, k);
        const double md = detail::table_abs_moment(es, dk, p);
        rep.check("diff_contraction").inequality(md, std::pow(2.0, p) * mu);
        for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0})
          rep.check("diff_alpha_contraction")
              .inequality(detail::table_abs_moment(es, diff_alpha_from(es, dk, k, alpha), p), md);
      }
    }
    // centred F for the identities involving Z
    const double eu = expect(es, u);
    for (double& a : u) a -= eu;
    Table cube(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) cube[j] = u[j] * u[j] * u[j];
    const double third = expect(es, cube);
    const double var = detail::table_abs_moment(es, u, 2.0);
    for (double alpha : {0.0, 0.5, 1.0}) {
      const Table za = z_alpha_table(es, u, alpha);
      rep.check("variance_equals_mean_z_alpha").equality(var, expect(es, za));
      for (double beta : {0.0, 0.5, 1.0})
        rep.check("third_moment_identity").equality(third, 2.0 * expect(es, z_alpha_beta_table(es, u, za, alpha, beta)));
      for (double delta : {0.25, 0.5, 1.0}) {
        KahanSum rhs;
        for (std::size_t k = 0; k < es.dimension(); ++k) rhs += detail::table_abs_moment(es, diff(es, u, k), 2.0 + delta);
        rep.check("z_alpha_holder_chain")
            .inequality(detail::table_abs_moment(es, za, (2.0 + delta) / 2.0), std::pow(n, delta / 2.0) * rhs.value());
      }
    }
  }
  return rep;
}

}  // namespace steingauge
