#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/random.hpp"
#include "steingauge/statistics.hpp"

namespace steingauge {

struct AlphaParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  void validate() const {
    for (double v : {alpha, beta, gamma})
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("alpha, beta and gamma must lie in [0,1]");
  }
  bool operator==(const AlphaParams&) const = default;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

// Monte Carlo budget for the nested estimators. `inner` draws per
// conditional expectation; integrals over coordinate sets whose product
// support is at most `exact_set_limit` are summed exactly instead.
struct McBudget {
  std::size_t outer = 10'000;
  std::size_t inner = 256;
  std::size_t batches = 40;
  std::size_t exact_set_limit = 64;
  bool drift_check = true;
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Exact calculus on enumerable spaces.

struct ExactTables {
  Table f;
  Table z_alpha;
  Table z_alpha_beta;
};

inline Table abs_pow_table(const Table& t, double p) {
  Table out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = abs_pow(t[i], p);
  return out;
}

inline Table z_alpha_table(const EnumerableSpace& es, const Table& f, double alpha) {
  Table z(f.size(), 0.0);
  for (std::size_t k = 0; k < es.dimension(); ++k) {
    const Table dk = diff(es, f, k);
    const Table da = diff_alpha_from(es, dk, k, alpha);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += dk[i] * da[i];
  }
  return z;
}

inline Table z_alpha_beta_table(const EnumerableSpace& es, const Table& f, const Table& za, double alpha,
                                double beta) {
  Table w(f.size(), 0.0);
  for (std::size_t k = 0; k < es.dimension(); ++k) {
    const Table dk = diff(es, f, k);
    const Table da = diff_alpha_from(es, dk, k, alpha);
    const Table dbz = diff_alpha(es, za, k, beta);
    Table sq(dk.size());
    for (std::size_t i = 0; i < dk.size(); ++i) sq[i] = dk[i] * dk[i];
    const Table eksq = integrate_coordinate(es, sq, k);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += dk[i] * dbz[i] - 0.5 * (sq[i] + eksq[i]) * da[i];
  }
  return w;
}

inline ExactTables exact_tables(const EnumerableSpace& es, const StatisticModel& model, double alpha, double beta) {
  ExactTables t;
  t.f = tabulate(es, model.evaluate);
  t.z_alpha = z_alpha_table(es, t.f, alpha);
  t.z_alpha_beta = z_alpha_beta_table(es, t.f, t.z_alpha, alpha, beta);
  return t;
}

// |Cov(U,V) - E[sum_i D_i U D_i^(alpha) V]| by enumeration.
inline double covariance_identity_residual(const ProductSpace& space, const Evaluator& U, const Evaluator& V,
                                           double alpha) {
  const EnumerableSpace es(space);
  const Table u = tabulate(es, U);
  const Table v = tabulate(es, V);
  Table uv(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) uv[i] = u[i] * v[i];
  const double cov = expect(es, uv) - expect(es, u) * expect(es, v);
  Table rhs(u.size(), 0.0);
  for (std::size_t k = 0; k < es.dimension(); ++k) {
    const Table du = diff(es, u, k);
    const Table dav = diff_alpha(es, v, k, alpha);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += du[i] * dav[i];
  }
  return std::abs(cov - expect(es, rhs));
}

// ---------------------------------------------------------------------------
// Pointwise estimator graph. A node maps an outcome x (and a generator for
// its internal Monte Carlo) to an estimate of U(x). Integration over a
// coordinate set is exact when the set has at most `exact_set_limit`
// outcomes and Monte Carlo with `inner` draws otherwise; every inner draw
// uses fresh randomness from the generator passed in.

using Node = std::function<double(std::span<const double>, Xoshiro256&)>;

class NodeBuilder {
 public:
  NodeBuilder(const StatisticModel& model, std::size_t inner, std::size_t exact_set_limit)
      : model_(std::make_shared<StatisticModel>(model)), inner_(std::max<std::size_t>(inner, 1)),
        exact_set_limit_(exact_set_limit) {}

  [[nodiscard]] std::size_t dimension() const { return model_->space.size(); }

  // True when every conditional expectation below is summed exactly.
  [[nodiscard]] bool all_exact() const {
    const auto& space = model_->space;
    if (!space.all_finite_support()) return false;
    const std::size_t n = space.size();
    std::vector<std::size_t> all(n);
    for (std::size_t k = 0; k < n; ++k) all[k] = k;
    for (std::size_t k = 0; k < n; ++k) {
      if (!set_is_exact({all.begin() + static_cast<std::ptrdiff_t>(k) + 1, all.end()})) return false;
      if (!set_is_exact({all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k)})) return false;
    }
    return true;
  }

  [[nodiscard]] Node f() const {
    auto model = model_;
    return [model](std::span<const double> x, Xoshiro256&) { return model->evaluate(x); };
  }

  // E over the listed coordinates, holding the rest at x.
  [[nodiscard]] Node integrate(Node u, std::vector<std::size_t> coords) const {
    if (coords.empty()) return u;
    auto model = model_;
    if (set_is_exact(coords)) {
      return [model, u, coords](std::span<const double> x, Xoshiro256& rng) {
        std::vector<double> y(x.begin(), x.end());
        KahanSum acc;
        detail::enumerate_coords(model->space, coords, y, [&](double w) { acc += w * u(y, rng); });
        return acc.value();
      };
    }
    const std::size_t inner = inner_;
    return [model, u, coords, inner](std::span<const double> x, Xoshiro256& rng) {
      std::vector<double> y(x.begin(), x.end());
      KahanSum acc;
      for (std::size_t i = 0; i < inner; ++i) {
        for (std::size_t c : coords) y[c] = model->space[c].sample(rng);
        acc += u(y, rng);
      }
      return acc.value() / static_cast<double>(inner);
    };
  }

  [[nodiscard]] Node ek(Node u, std::size_t k) const { return integrate(std::move(u), {k}); }

  [[nodiscard]] Node diff(Node u, std::size_t k) const {
    Node e = ek(u, k);
    return [u, e](std::span<const double> x, Xoshiro256& rng) { return u(x, rng) - e(x, rng); };
  }

  [[nodiscard]] Node forward(Node dk, std::size_t k) const { return integrate(std::move(dk), after(k)); }
  [[nodiscard]] Node backward(Node dk, std::size_t k) const { return integrate(std::move(dk), before(k)); }

  // alpha E[dk | F_k] + (1 - alpha) E[dk | G_k] for a node already equal to D_k U.
  [[nodiscard]] Node alpha_of_diff(const Node& dk, std::size_t k, double alpha) const {
    if (alpha == 1.0) return forward(dk, k);
    if (alpha == 0.0) return backward(dk, k);
    Node fw = forward(dk, k);
    Node bw = backward(dk, k);
    return [fw, bw, alpha](std::span<const double> x, Xoshiro256& rng) {
      return alpha * fw(x, rng) + (1.0 - alpha) * bw(x, rng);
    };
  }

  // D_k F, using the closed form when present.
  [[nodiscard]] Node diff_f(std::size_t k) const {
    if (model_->closed_form) {
      auto model = model_;
      return [model, k](std::span<const double> x, Xoshiro256&) { return model->closed_form->diff(x, k); };
    }
    return diff(f(), k);
  }

  [[nodiscard]] Node diff_alpha_f(std::size_t k, double alpha) const {
    if (model_->closed_form) {
      auto model = model_;
      return [model, k, alpha](std::span<const double> x, Xoshiro256&) {
        double v = 0.0;
        if (alpha > 0.0) v += alpha * model->closed_form->cond_forward(x, k);
        if (alpha < 1.0) v += (1.0 - alpha) * model->closed_form->cond_backward(x, k);
        return v;
      };
    }
    return alpha_of_diff(diff_f(k), k, alpha);
  }

  // E_k |D_k F|^p.
  [[nodiscard]] Node ek_abs_pow_diff_f(std::size_t k, double p) const {
    Node d = diff_f(k);
    Node powered = [d, p](std::span<const double> x, Xoshiro256& rng) { return abs_pow(d(x, rng), p); };
    return ek(powered, k);
  }

  [[nodiscard]] Node z_alpha(double alpha) const {
    std::vector<Node> d, da;
    for (std::size_t k = 0; k < dimension(); ++k) {
      d.push_back(diff_f(k));
      da.push_back(diff_alpha_f(k, alpha));
    }
    return [d, da](std::span<const double> x, Xoshiro256& rng) {
      double s = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) s += d[k](x, rng) * da[k](x, rng);
      return s;
    };
  }

  [[nodiscard]] Node z_alpha_beta(double alpha, double beta) const {
    const Node za = z_alpha(alpha);
    std::vector<Node> d, da, dbz, eksq;
    for (std::size_t k = 0; k < dimension(); ++k) {
      d.push_back(diff_f(k));
      da.push_back(diff_alpha_f(k, alpha));
      dbz.push_back(alpha_of_diff(diff(za, k), k, beta));
      eksq.push_back(ek_abs_pow_diff_f(k, 2.0));
    }
    return [d, da, dbz, eksq](std::span<const double> x, Xoshiro256& rng) {
      double s = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        const double dk = d[k](x, rng);
        s += dk * dbz[k](x, rng) - 0.5 * (dk * dk + eksq[k](x, rng)) * da[k](x, rng);
      }
      return s;
    };
  }

  [[nodiscard]] std::vector<std::size_t> after(std::size_t k) const {
    std::vector<std::size_t> c;
    for (std::size_t j = k + 1; j < dimension(); ++j) c.push_back(j);
    return c;
  }
  [[nodiscard]] std::vector<std::size_t> before(std::size_t k) const {
    std::vector<std::size_t> c;
    for (std::size_t j = 0; j < k; ++j) c.push_back(j);
    return c;
  }

 private:
  [[nodiscard]] bool set_is_exact(const std::vector<std::size_t>& coords) const {
    std::size_t total = 1;
    for (std::size_t c : coords) {
      if (!model_->space[c].has_finite_support()) return false;
      const std::size_t r = model_->space[c].atoms().size();
      if (total > exact_set_limit_ / r) return false;
      total *= r;
    }
    return total <= exact_set_limit_;
  }

  std::shared_ptr<const StatisticModel> model_;
  std::size_t inner_;
  std::size_t exact_set_limit_;
};

// ---------------------------------------------------------------------------
// Point evaluators. Closed forms and enumerable spaces give exact values
// (se = 0); otherwise a budget is required and the value is the mean of
// repeated nested estimates.

inline constexpr std::size_t kPointEnumerationCap = std::size_t{1} << 20;

namespace detail {

inline bool enumerable(const ProductSpace& space, std::size_t cap) {
  if (!space.all_finite_support()) return false;
  const std::size_t s = space.support_size();
  return s <= cap;
}

inline Estimate repeat_node(const Node& node, std::span<const double> x, const McBudget& budget, std::uint64_t tag) {
  const std::size_t reps = std::max<std::size_t>(budget.batches, 30);
  std::vector<double> v(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Xoshiro256 rng = make_stream(budget.seed, {stream_tag::kProfileInner, tag, r});
    v[r] = node(x, rng);
  }
  const double mean = kahan_sum(v) / static_cast<double>(reps);
  KahanSum ss;
  for (double a : v) ss += (a - mean) * (a - mean);
  return {mean, std::sqrt(ss.value() / static_cast<double>(reps - 1) / static_cast<double>(reps))};
}

inline Estimate exact_node(const Node& node, std::span<const double> x) {
  Xoshiro256 rng(0);
  return {node(x, rng), 0.0};
}

}  // namespace detail

inline Estimate diff_alpha(const StatisticModel& model, std::span<const double> x, std::size_t k, double alpha,
                           const std::optional<McBudget>& budget = std::nullopt) {
  if (k >= model.arity()) throw InvalidArgument("coordinate index out of range");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
  if (model.closed_form) {
    double v = 0.0;
    if (alpha > 0.0) v += alpha * model.closed_form->cond_forward(x, k);
    if (alpha < 1.0) v += (1.0 - alpha) * model.closed_form->cond_backward(x, k);
    return {v, 0.0};
  }
  if (detail::enumerable(model.space, kPointEnumerationCap)) {
    const EnumerableSpace es(model.space);
    const Table t = diff_alpha(es, tabulate(es, model.evaluate), k, alpha);
    return {t[es.index_of(x)], 0.0};
  }
  if (!budget) throw BudgetMissing("black-box statistic on a non-enumerable space needs a Monte Carlo budget");
  const NodeBuilder nb(model, budget->inner, budget->exact_set_limit);
  return detail::repeat_node(nb.diff_alpha_f(k, alpha), x, *budget, 1000 + k);
}

inline Estimate z_alpha(const StatisticModel& model, std::span<const double> x, double alpha,
                        const std::optional<McBudget>& budget = std::nullopt) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0,1]");
  if (model.closed_form) {
    double s = 0.0;
    for (std::size_t k = 0; k < model.arity(); ++k) s += model.closed_form->diff(x, k) * diff_alpha(model, x, k, alpha).value;
    return {s, 0.0};
  }
  if (detail::enumerable(model.space, kPointEnumerationCap)) {
    const EnumerableSpace es(model.space);
    const Table z = z_alpha_table(es, tabulate(es, model.evaluate), alpha);
    return {z[es.index_of(x)], 0.0};
  }
  if (!budget) throw BudgetMissing("black-box statistic on a non-enumerable space needs a Monte Carlo budget");
  const NodeBuilder nb(model, budget->inner, budget->exact_set_limit);
  return detail::repeat_node(nb.z_alpha(alpha), x, *budget, 2000);
}

inline Estimate z_alpha_beta(const StatisticModel& model, std::span<const double> x, double alpha, double beta,
                             const std::optional<McBudget>& budget = std::nullopt) {
  AlphaParams{alpha, beta, 0.0}.validate();
  if (const auto* ps = std::get_if<PartialSumInfo>(&model.family)) {
    // 1/2 sum ((x_k - mu_k)^3 - 3 v_k^2 (x_k - mu_k)) for every alpha, beta.
    double s = 0.0;
    for (std::size_t k = 0; k < model.arity(); ++k) {
      const double y = x[k] - ps->means[k];
      s += 0.5 * (y * y * y - 3.0 * model.space[k].variance() * y);
    }
    return {s, 0.0};
  }
  if (detail::enumerable(model.space, kPointEnumerationCap)) {
    if (model.closed_form) {
      const NodeBuilder nb(model, 1, kPointEnumerationCap);
      return detail::exact_node(nb.z_alpha_beta(alpha, beta), x);
    }
    const EnumerableSpace es(model.space);
    const ExactTables t = exact_tables(es, model, alpha, beta);
    return {t.z_alpha_beta[es.index_of(x)], 0.0};
  }
  if (!budget) throw BudgetMissing("Z^(alpha,beta) on a non-enumerable space needs a Monte Carlo budget");
  const NodeBuilder nb(model, budget->inner, budget->exact_set_limit);
  return detail::repeat_node(nb.z_alpha_beta(alpha, beta), x, *budget, 3000);
}

}  // namespace steingauge
