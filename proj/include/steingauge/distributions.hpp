#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"
#include "steingauge/random.hpp"

namespace steingauge {

struct Rademacher {
  bool operator==(const Rademacher&) const = default;
};

// Uniform on [-half_width, half_width].
struct UniformSymmetric {
  double half_width = 1.0;
  bool operator==(const UniformSymmetric&) const = default;
};

// Exp(rate) shifted to mean zero: support [-1/rate, inf).
struct CenteredExponential {
  double rate = 1.0;
  bool operator==(const CenteredExponential&) const = default;
};

// Symmetric sign times a Pareto(tail_index, scale) magnitude:
// P(|X| > x) = (scale / x)^tail_index for x >= scale. E|X|^p < inf iff p < tail_index.
struct SymmetricPareto {
  double tail_index = 3.5;
  double scale = 1.0;
  bool operator==(const SymmetricPareto&) const = default;
};

struct Atom {
  double value = 0.0;
  double probability = 0.0;
  bool operator==(const Atom&) const = default;
};

struct FiniteSupport {
  std::vector<Atom> points;
  bool operator==(const FiniteSupport&) const = default;
};

using Family = std::variant<Rademacher, UniformSymmetric, CenteredExponential, SymmetricPareto, FiniteSupport>;

// One independent component X_k of a product space.
class DistributionSpec {
 public:
  explicit DistributionSpec(Family family, std::string label = {})
      : family_(std::move(family)), label_(std::move(label)) {
    validate();
    if (label_.empty()) label_ = family_name();
  }

  static DistributionSpec rademacher() { return DistributionSpec(Rademacher{}); }
  static DistributionSpec uniform_symmetric(double half_width) {
    return DistributionSpec(UniformSymmetric{half_width});
  }
  static DistributionSpec centered_exponential(double rate) { return DistributionSpec(CenteredExponential{rate}); }
  static DistributionSpec symmetric_pareto(double tail_index, double scale) {
    return DistributionSpec(SymmetricPareto{tail_index, scale});
  }
  // Unit-variance symmetric Pareto: scale^2 = (tail_index - 2) / tail_index.
  static DistributionSpec standardized_pareto(double tail_index) {
    return DistributionSpec(SymmetricPareto{tail_index, std::sqrt((tail_index - 2.0) / tail_index)});
  }
  static DistributionSpec finite_support(std::vector<Atom> points) {
    return DistributionSpec(FiniteSupport{std::move(points)});
  }

  [[nodiscard]] const Family& family() const { return family_; }
  [[nodiscard]] const std::string& label() const { return label_; }

  [[nodiscard]] std::string family_name() const {
    return std::visit(
        [](const auto& f) -> std::string {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Rademacher>) return "rademacher";
          if constexpr (std::is_same_v<T, UniformSymmetric>) return "uniform_symmetric";
          if constexpr (std::is_same_v<T, CenteredExponential>) return "centered_exponential";
          if constexpr (std::is_same_v<T, SymmetricPareto>) return "symmetric_pareto";
          if constexpr (std::is_same_v<T, FiniteSupport>) return "finite_support";
        },
        family_);
  }

  [[nodiscard]] double mean() const {
    if (const auto* fs = std::get_if<FiniteSupport>(&family_)) {
      KahanSum s;
      for (const auto& a : fs->points) s += a.value * a.probability;
      return s.value();
    }
    return 0.0;
  }

  [[nodiscard]] double variance() const {
    return std::visit(
        [this](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Rademacher>) return 1.0;
          if constexpr (std::is_same_v<T, UniformSymmetric>) return f.half_width * f.half_width / 3.0;
          if constexpr (std::is_same_v<T, CenteredExponential>) return 1.0 / (f.rate * f.rate);
          if constexpr (std::is_same_v<T, SymmetricPareto>)
            return f.tail_index * f.scale * f.scale / (f.tail_index - 2.0);
          if constexpr (std::is_same_v<T, FiniteSupport>) {
            const double mu = mean();
            KahanSum s;
            for (const auto& a : f.points) s += a.probability * (a.value - mu) * (a.value - mu);
            return s.value();
          }
        },
        family_);
  }

  // Supremum of the finite absolute-moment orders. Orders p with
  // p >= moment_ceiling() are rejected.
  [[nodiscard]] double moment_ceiling() const {
    if (const auto* p = std::get_if<SymmetricPareto>(&family_)) return p->tail_index;
    return std::numeric_limits<double>::infinity();
  }

  [[nodiscard]] double third_central_moment() const {
    if (moment_ceiling() <= 3.0) throw MomentDoesNotExist(label_ + ": third moment is infinite");
    return std::visit(
        [this](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, CenteredExponential>) return 2.0 / (f.rate * f.rate * f.rate);
          if constexpr (std::is_same_v<T, FiniteSupport>) {
            const double mu = mean();
            KahanSum s;
            for (const auto& a : f.points) s += a.probability * std::pow(a.value - mu, 3);
            return s.value();
          }
          return 0.0;
        },
        family_);
  }

  [[nodiscard]] bool has_finite_support() const {
    return std::holds_alternative<Rademacher>(family_) || std::holds_alternative<FiniteSupport>(family_);
  }

  // Support atoms; only valid when has_finite_support().
  [[nodiscard]] std::vector<Atom> atoms() const {
    if (std::holds_alternative<Rademacher>(family_)) return {{-1.0, 0.5}, {1.0, 0.5}};
    if (const auto* fs = std::get_if<FiniteSupport>(&family_)) return fs->points;
    throw InvalidArgument(label_ + ": continuous distribution has no atoms");
  }

  [[nodiscard]] double sample(Xoshiro256& rng) const {
    return std::visit(
        [&rng, this](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Rademacher>) return rng.bit() ? 1.0 : -1.0;
          if constexpr (std::is_same_v<T, UniformSymmetric>) return f.half_width * (2.0 * rng.uniform() - 1.0);
          if constexpr (std::is_same_v<T, CenteredExponential>) return (-std::log(rng.uniform()) - 1.0) / f.rate;
          if constexpr (std::is_same_v<T, SymmetricPareto>) {
            const double magnitude = f.scale * std::pow(rng.uniform(), -1.0 / f.tail_index);
            return rng.bit() ? magnitude : -magnitude;
          }
          if constexpr (std::is_same_v<T, FiniteSupport>) {
            const double u = rng.uniform();
            double cum = 0.0;
            for (const auto& a : f.points) {
              cum += a.probability;
              if (u < cum) return a.value;
            }
            return f.points.back().value;
          }
        },
        family_);
  }

  bool operator==(const DistributionSpec& other) const { return family_ == other.family_; }

 private:
  void validate() const {
    std::visit(
        [this](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, UniformSymmetric>) {
            if (!(f.half_width > 0.0)) throw InvalidArgument("uniform_symmetric: half_width must be > 0");
          }
          if constexpr (std::is_same_v<T, CenteredExponential>) {
            if (!(f.rate > 0.0)) throw InvalidArgument("centered_exponential: rate must be > 0");
          }
          if constexpr (std::is_same_v<T, SymmetricPareto>) {
            if (!(f.tail_index > 2.0)) throw InvalidArgument("symmetric_pareto: tail_index must exceed 2");
            if (!(f.scale > 0.0)) throw InvalidArgument("symmetric_pareto: scale must be > 0");
          }
          if constexpr (std::is_same_v<T, FiniteSupport>) {
            if (f.points.empty()) throw InvalidArgument("finite_support: no points");
            KahanSum total;
            for (const auto& a : f.points) {
              if (!(a.probability > 0.0)) throw InvalidArgument("finite_support: probabilities must be > 0");
              if (!std::isfinite(a.value)) throw InvalidArgument("finite_support: non-finite value");
              total += a.probability;
            }
            if (std::abs(total.value() - 1.0) > 1e-12)
              throw InvalidArgument("finite_support: probabilities must sum to 1");
          }
        },
        family_);
    if (!(variance() > 0.0)) throw InvalidArgument(label_ + ": variance must be > 0");
  }

  Family family_;
  std::string label_;
};

// E|X - E[X]|^p. Closed form for every built-in family.
inline double exact_abs_moment(const DistributionSpec& spec, double p) {
  if (!(p >= 1.0)) throw InvalidOrder("absolute moment order must be >= 1");
  if (p >= spec.moment_ceiling())
    throw MomentDoesNotExist(spec.label() + ": E|X|^" + std::to_string(p) + " is infinite");
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Rademacher>) return 1.0;
        if constexpr (std::is_same_v<T, UniformSymmetric>) return std::pow(f.half_width, p) / (p + 1.0);
        if constexpr (std::is_same_v<T, CenteredExponential>) {
          // E|Y - 1|^p for Y ~ Exp(1): Gamma(p+1)/e + e^{-1} sum_j 1/(j! (p+j+1)).
          double series = 0.0;
          double inv_factorial = 1.0;
          for (int j = 0; j < 40; ++j) {
            series += inv_factorial / (p + j + 1.0);
            inv_factorial /= (j + 1.0);
          }
          return (std::tgamma(p + 1.0) + series) * std::exp(-1.0) / std::pow(f.rate, p);
        }
        if constexpr (std::is_same_v<T, SymmetricPareto>)
          return f.tail_index * std::pow(f.scale, p) / (f.tail_index - p);
        if constexpr (std::is_same_v<T, FiniteSupport>) {
          const double mu = spec.mean();
          KahanSum s;
          for (const auto& a : f.points) s += a.probability * abs_pow(a.value - mu, p);
          return s.value();
        }
      },
      spec.family());
}

// E[g(X)] for one component: exact sum on finite supports, adaptive
// quadrature against the density otherwise. `kinks` lists points where g is
// not smooth, in the coordinates of X.
inline double expect(const DistributionSpec& spec, const std::function<double(double)>& g,
                     std::span<const double> kinks = {}) {
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Rademacher>) return 0.5 * (g(-1.0) + g(1.0));
        if constexpr (std::is_same_v<T, FiniteSupport>) {
          KahanSum s;
          for (const auto& a : f.points) s += a.probability * g(a.value);
          return s.value();
        }
        if constexpr (std::is_same_v<T, UniformSymmetric>) {
          const double a = f.half_width;
          return integrate([&](double x) { return g(x) / (2.0 * a); }, -a, a, kinks);
        }
        if constexpr (std::is_same_v<T, CenteredExponential>) {
          std::vector<double> cuts;
          for (double k : kinks) cuts.push_back(f.rate * k + 1.0);
          cuts.push_back(1.0);
          return integrate([&](double y) { return g((y - 1.0) / f.rate) * std::exp(-y); }, 0.0,
                           std::numeric_limits<double>::infinity(), cuts);
        }
        if constexpr (std::is_same_v<T, SymmetricPareto>) {
          // |X| = scale * u^{-1/a}, u ~ U(0,1); symmetrise over the sign.
          auto integrand = [&](double u) {
            const double x = f.scale * std::pow(u, -1.0 / f.tail_index);
            return 0.5 * (g(x) + g(-x));
          };
          std::vector<double> cuts{0.0, 1.0};
          for (double k : kinks) {
            const double m = std::abs(k);
            if (m > f.scale) cuts.push_back(std::pow(f.scale / m, f.tail_index));
          }
          std::sort(cuts.begin(), cuts.end());
          cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
          KahanSum s;
          for (std::size_t i = 0; i + 1 < cuts.size(); ++i) s += integrate_singular(integrand, cuts[i], cuts[i + 1]);
          return s.value();
        }
      },
      spec.family());
}

// X = (X_1, ..., X_n) with independent components.
class ProductSpace {
 public:
  ProductSpace() = default;
  explicit ProductSpace(std::vector<DistributionSpec> components) : components_(std::move(components)) {
    if (components_.empty()) throw InvalidArgument("product space needs at least one component");
  }
  static ProductSpace iid(const DistributionSpec& spec, std::size_t n) {
    return ProductSpace(std::vector<DistributionSpec>(n, spec));
  }

  [[nodiscard]] std::size_t size() const { return components_.size(); }
  [[nodiscard]] const DistributionSpec& operator[](std::size_t k) const { return components_[k]; }
  [[nodiscard]] const std::vector<DistributionSpec>& components() const { return components_; }

  [[nodiscard]] bool all_finite_support() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const DistributionSpec& c) { return c.has_finite_support(); });
  }

  // Size of the product support, saturating at SIZE_MAX; 0 if any component
  // is continuous.
  [[nodiscard]] std::size_t support_size() const {
    std::size_t total = 1;
    for (const auto& c : components_) {
      if (!c.has_finite_support()) return 0;
      const std::size_t r = c.atoms().size();
      if (total > std::numeric_limits<std::size_t>::max() / r) return std::numeric_limits<std::size_t>::max();
      total *= r;
    }
    return total;
  }

  [[nodiscard]] double min_moment_ceiling() const {
    double c = std::numeric_limits<double>::infinity();
    for (const auto& s : components_) c = std::min(c, s.moment_ceiling());
    return c;
  }

 private:
  std::vector<DistributionSpec> components_;
};

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

inline constexpr std::size_t kSampleBlockRows = 1024;

// Draws `count` i.i.d. rows of X and hands each to visit(row_index, row).
// Rows are grouped into blocks of kSampleBlockRows; block b reads the stream
// (seed, kSampling, b), so the rows are identical for any thread count.
template <class Visit>
void for_each_sampled_row(const ProductSpace& space, std::uint64_t seed, std::size_t count, Visit&& visit) {
  const std::size_t blocks = (count + kSampleBlockRows - 1) / kSampleBlockRows;
  parallel_for(blocks, [&](std::size_t b) {
    Xoshiro256 rng = make_stream(seed, {stream_tag::kSampling, b});
    std::vector<double> row(space.size());
    const std::size_t end = std::min(count, (b + 1) * kSampleBlockRows);
    for (std::size_t r = b * kSampleBlockRows; r < end; ++r) {
      for (std::size_t k = 0; k < space.size(); ++k) row[k] = space[k].sample(rng);
      visit(r, std::span<const double>(row));
    }
  });
}

inline Matrix sample(const ProductSpace& space, std::uint64_t seed, std::size_t count) {
  if (count < 1) throw InvalidArgument("sample: count must be >= 1");
  Matrix m{count, space.size(), std::vector<double>(count * space.size())};
  for_each_sampled_row(space, seed, count, [&](std::size_t r, std::span<const double> row) {
    std::copy(row.begin(), row.end(), m.data.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
  });
  return m;
}

// JSON schema: {"family": <name>, "params": {...}, "label": <text>}.
//   rademacher            params {}
//   uniform_symmetric     params {"half_width": a}
//   centered_exponential  params {"rate": r}
//   symmetric_pareto      params {"tail_index": a, "scale": s}   (scale may be
//                         omitted to request unit variance)
//   finite_support        params {"points": [[value, probability], ...]}
inline void to_json(nlohmann::json& j, const DistributionSpec& spec) {
  nlohmann::json params = nlohmann::json::object();
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformSymmetric>) params["half_width"] = f.half_width;
        if constexpr (std::is_same_v<T, CenteredExponential>) params["rate"] = f.rate;
        if constexpr (std::is_same_v<T, SymmetricPareto>) {
          params["tail_index"] = f.tail_index;
          params["scale"] = f.scale;
        }
        if constexpr (std::is_same_v<T, FiniteSupport>) {
          params["points"] = nlohmann::json::array();
          for (const auto& a : f.points) params["points"].push_back({a.value, a.probability});
        }
      },
      spec.family());
  j = nlohmann::json{{"family", spec.family_name()}, {"params", params}, {"label", spec.label()}};
}

inline DistributionSpec distribution_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  const std::string label = j.value("label", std::string{});
  if (family == "rademacher") return DistributionSpec(Rademacher{}, label);
  if (family == "uniform_symmetric")
    return DistributionSpec(UniformSymmetric{params.at("half_width").get<double>()}, label);
  if (family == "centered_exponential")
    return DistributionSpec(CenteredExponential{params.at("rate").get<double>()}, label);
  if (family == "symmetric_pareto") {
    const double a = params.at("tail_index").get<double>();
    const double s = params.contains("scale") ? params.at("scale").get<double>() : std::sqrt((a - 2.0) / a);
    return DistributionSpec(SymmetricPareto{a, s}, label);
  }
  if (family == "finite_support") {
    std::vector<Atom> points;
    for (const auto& p : params.at("points")) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return DistributionSpec(FiniteSupport{std::move(points)}, label);
  }
  throw InvalidArgument("unknown distribution family '" + family + "'");
}

}  // namespace steingauge
