#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "steingauge/distributions.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"

namespace steingauge {

inline constexpr std::size_t kEnumerationCap = std::size_t{1} << 24;

// Full product support of a finite product space. Outcome indices are mixed
// radix with coordinate 0 most significant:
//   idx = sum_k digit_k * stride_k,   stride_{n-1} = 1.
class EnumerableSpace {
 public:
  explicit EnumerableSpace(const ProductSpace& space, std::size_t cap = kEnumerationCap) {
    if (!space.all_finite_support())
      throw SupportTooLarge("enumeration needs finite-support components");
    const std::size_t total = space.support_size();
    if (total > cap)
      throw SupportTooLarge("product support has " + std::to_string(total) + " outcomes, cap is " +
                            std::to_string(cap));
    const std::size_t n = space.size();
    atoms_.resize(n);
    for (std::size_t k = 0; k < n; ++k) atoms_[k] = space[k].atoms();
    stride_.assign(n, 1);
    for (std::size_t k = n - 1; k-- > 0;) stride_[k] = stride_[k + 1] * atoms_[k + 1].size();
    size_ = total;

    // prefix_[k][p]: probability of prefix digits (0..k-1) encoded as p.
    // suffix_[k][s]: probability of suffix digits (k..n-1) encoded as s.
    prefix_.resize(n + 1);
    prefix_[0] = {1.0};
    for (std::size_t k = 0; k < n; ++k) {
      const auto& a = atoms_[k];
      prefix_[k + 1].resize(prefix_[k].size() * a.size());
      for (std::size_t p = 0; p < prefix_[k].size(); ++p)
        for (std::size_t d = 0; d < a.size(); ++d) prefix_[k + 1][p * a.size() + d] = prefix_[k][p] * a[d].probability;
    }
    suffix_.resize(n + 1);
    suffix_[n] = {1.0};
    for (std::size_t k = n; k-- > 0;) {
      const auto& a = atoms_[k];
      const std::size_t tail = suffix_[k + 1].size();
      suffix_[k].resize(a.size() * tail);
      for (std::size_t d = 0; d < a.size(); ++d)
        for (std::size_t s = 0; s < tail; ++s) suffix_[k][d * tail + s] = a[d].probability * suffix_[k + 1][s];
    }
  }

  [[nodiscard]] std::size_t dimension() const { return atoms_.size(); }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t radix(std::size_t k) const { return atoms_[k].size(); }
  [[nodiscard]] std::size_t stride(std::size_t k) const { return stride_[k]; }
  [[nodiscard]] const std::vector<Atom>& atoms(std::size_t k) const { return atoms_[k]; }

  [[nodiscard]] std::size_t digit(std::size_t idx, std::size_t k) const { return (idx / stride_[k]) % atoms_[k].size(); }

  void decode(std::size_t idx, std::span<double> x) const {
    for (std::size_t k = atoms_.size(); k-- > 0;) {
      const std::size_t r = atoms_[k].size();
      x[k] = atoms_[k][idx % r].value;
      idx /= r;
    }
  }

  [[nodiscard]] double probability(std::size_t idx) const { return suffix_[0][idx]; }
  [[nodiscard]] const std::vector<double>& probabilities() const { return suffix_[0]; }

  // Index of the outcome x; throws if some coordinate is off the support.
  [[nodiscard]] std::size_t index_of(std::span<const double> x) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < atoms_.size(); ++k) {
      std::size_t d = 0;
      while (d < atoms_[k].size() && atoms_[k][d].value != x[k]) ++d;
      if (d == atoms_[k].size()) throw InvalidArgument("outcome is not in the product support");
      idx += d * stride_[k];
    }
    return idx;
  }

  // Weight tables used by the conditional expectations.
  [[nodiscard]] const std::vector<double>& prefix_weights(std::size_t k) const { return prefix_[k]; }
  [[nodiscard]] const std::vector<double>& suffix_weights(std::size_t k) const { return suffix_[k]; }

 private:
  std::vector<std::vector<Atom>> atoms_;
  std::vector<std::size_t> stride_;
  std::vector<std::vector<double>> prefix_;
  std::vector<std::vector<double>> suffix_;
  std::size_t size_ = 1;
};

namespace detail {
inline constexpr std::size_t kEnumerationBlock = std::size_t{1} << 14;
}

// Sum of g(x) P(x) over the whole support. Blocks are summed with Kahan
// compensation and then combined in block order.
inline double enumerate_expectation(const EnumerableSpace& es, const std::function<double(std::span<const double>)>& g) {
  const std::size_t blocks = (es.size() + detail::kEnumerationBlock - 1) / detail::kEnumerationBlock;
  std::vector<double> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> x(es.dimension());
    KahanSum acc;
    const std::size_t end = std::min(es.size(), (b + 1) * detail::kEnumerationBlock);
    for (std::size_t idx = b * detail::kEnumerationBlock; idx < end; ++idx) {
      es.decode(idx, x);
      acc += g(x) * es.probability(idx);
    }
    partial[b] = acc.value();
  });
  return kahan_sum(partial);
}

inline double enumerate_expectation(const ProductSpace& space, const std::function<double(std::span<const double>)>& g) {
  return enumerate_expectation(EnumerableSpace(space), g);
}

// Random variables on an enumerable space stored as one value per outcome.
using Table = std::vector<double>;

inline Table tabulate(const EnumerableSpace& es, const std::function<double(std::span<const double>)>& f) {
  Table t(es.size());
  const std::size_t blocks = (es.size() + detail::kEnumerationBlock - 1) / detail::kEnumerationBlock;
  parallel_for(blocks, [&](std::size_t b) {
    std::vector<double> x(es.dimension());
    const std::size_t end = std::min(es.size(), (b + 1) * detail::kEnumerationBlock);
    for (std::size_t idx = b * detail::kEnumerationBlock; idx < end; ++idx) {
      es.decode(idx, x);
      t[idx] = f(x);
    }
  });
  return t;
}

inline double expect(const EnumerableSpace& es, const Table& t) {
  const auto& p = es.probabilities();
  KahanSum acc;
  for (std::size_t i = 0; i < t.size(); ++i) acc += p[i] * t[i];
  return acc.value();
}

// E_k U: integrate coordinate k only.
inline Table integrate_coordinate(const EnumerableSpace& es, const Table& t, std::size_t k) {
  const std::size_t r = es.radix(k);
  const std::size_t stride = es.stride(k);
  const auto& atoms = es.atoms(k);
  Table out(t.size());
  const std::size_t span = r * stride;
  for (std::size_t base = 0; base < t.size(); base += span) {
    for (std::size_t low = 0; low < stride; ++low) {
      double acc = 0.0;
      for (std::size_t d = 0; d < r; ++d) acc += atoms[d].probability * t[base + d * stride + low];
      for (std::size_t d = 0; d < r; ++d) out[base + d * stride + low] = acc;
    }
  }
  return out;
}

// E[U | X_0..X_k]: integrates coordinates k+1..n-1.
inline Table cond_forward(const EnumerableSpace& es, const Table& t, std::size_t k) {
  const std::size_t block = es.stride(k);
  if (block == 1) return t;
  const auto& w = es.suffix_weights(k + 1);
  Table out(t.size());
  for (std::size_t base = 0; base < t.size(); base += block) {
    KahanSum acc;
    for (std::size_t s = 0; s < block; ++s) acc += w[s] * t[base + s];
    const double v = acc.value();
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(base), out.begin() + static_cast<std::ptrdiff_t>(base + block), v);
  }
  return out;
}

// E[U | X_k..X_{n-1}]: integrates coordinates 0..k-1.
inline Table cond_backward(const EnumerableSpace& es, const Table& t, std::size_t k) {
  if (k == 0) return t;
  const std::size_t block = es.stride(k - 1);
  const std::size_t prefixes = t.size() / block;
  const auto& w = es.prefix_weights(k);
  Table out(block, 0.0);
  for (std::size_t p = 0; p < prefixes; ++p) {
    const double wp = w[p];
    const double* row = t.data() + p * block;
    for (std::size_t s = 0; s < block; ++s) out[s] += wp * row[s];
  }
  Table full(t.size());
  for (std::size_t p = 0; p < prefixes; ++p) std::copy(out.begin(), out.end(), full.begin() + static_cast<std::ptrdiff_t>(p * block));
  return full;
}

// D_k U = U - E_k U.
inline Table diff(const EnumerableSpace& es, const Table& t, std::size_t k) {
  Table e = integrate_coordinate(es, t, k);
  for (std::size_t i = 0; i < t.size(); ++i) e[i] = t[i] - e[i];
  return e;
}

// alpha E[D_k U | F_k] + (1 - alpha) E[D_k U | G_k], given the table of D_k U.
inline Table diff_alpha_from(const EnumerableSpace& es, const Table& dk, std::size_t k, double alpha) {
  Table out(dk.size(), 0.0);
  if (alpha > 0.0) {
    const Table f = cond_forward(es, dk, k);
    for (std::size_t i = 0; i < dk.size(); ++i) out[i] += alpha * f[i];
  }
  if (alpha < 1.0) {
    const Table b = cond_backward(es, dk, k);
    for (std::size_t i = 0; i < dk.size(); ++i) out[i] += (1.0 - alpha) * b[i];
  }
  return out;
}

inline Table diff_alpha(const EnumerableSpace& es, const Table& t, std::size_t k, double alpha) {
  return diff_alpha_from(es, diff(es, t, k), k, alpha);
}

}  // namespace steingauge
