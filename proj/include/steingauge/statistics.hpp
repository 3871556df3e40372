#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "steingauge/distributions.hpp"
#include "steingauge/enumeration.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"
#include "steingauge/random.hpp"

namespace steingauge {

using Evaluator = std::function<double(std::span<const double>)>;
using PointDiff = std::function<double(std::span<const double>, std::size_t)>;

// Pointwise difference operators of F, all indexed by a 0-based coordinate k.
//   diff(x, k)          D_k F(x)
//   cond_forward(x, k)  E[D_k F | X_0..X_k](x)
//   cond_backward(x, k) E[D_k F | X_k..X_{n-1}](x)
struct ClosedFormDiffs {
  PointDiff diff;
  PointDiff cond_forward;
  PointDiff cond_backward;
};

struct PartialSumInfo {
  std::vector<double> means;
};

struct ProductExampleInfo {};

struct MDependentInfo {
  std::size_t m = 1;
  std::size_t windows = 0;
  std::vector<Evaluator> kernels;
  std::vector<double> kernel_means;
  std::vector<double> kernel_mean_se;
  bool runs = false;
};

// Upper-triangle storage of a symmetric matrix with zero diagonal.
struct SparseSymmetric {
  std::size_t n = 0;
  struct Entry {
    std::size_t col;
    double value;
  };
  std::vector<std::vector<Entry>> rows;  // full rows, both triangles

  [[nodiscard]] double row_dot(std::size_t k, std::span<const double> x) const {
    double s = 0.0;
    for (const auto& e : rows[k]) s += e.value * x[e.col];
    return s;
  }
};

struct QuadraticFormInfo {
  SparseSymmetric matrix;
};

struct BlackBoxInfo {
  std::string id;
};

using StatisticFamily = std::variant<PartialSumInfo, ProductExampleInfo, MDependentInfo, QuadraticFormInfo, BlackBoxInfo>;

struct StatisticModel {
  std::string name;
  ProductSpace space;
  Evaluator evaluate;
  std::optional<ClosedFormDiffs> closed_form;
  std::optional<double> mean;
  std::optional<double> variance;
  double mean_se = 0.0;
  StatisticFamily family;

  [[nodiscard]] std::size_t arity() const { return space.size(); }
  double operator()(std::span<const double> x) const { return evaluate(x); }
};

inline StatisticModel partial_sum(const ProductSpace& space) {
  PartialSumInfo info;
  double var = 0.0;
  for (const auto& c : space.components()) {
    info.means.push_back(c.mean());
    var += c.variance();
  }
  auto means = std::make_shared<const std::vector<double>>(info.means);
  StatisticModel m;
  m.name = "partial_sum";
  m.space = space;
  m.evaluate = [means](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += x[k] - (*means)[k];
    return s;
  };
  auto d = [means](std::span<const double> x, std::size_t k) { return x[k] - (*means)[k]; };
  m.closed_form = ClosedFormDiffs{d, d, d};
  m.mean = 0.0;
  m.variance = var;
  m.family = std::move(info);
  return m;
}

// F = (X_0 + ... + X_{n-2}) X_{n-1} on Rademacher^n.
inline StatisticModel product_example(std::size_t n) {
  if (n < 2) throw ArityTooSmall("product_example needs n >= 2");
  StatisticModel m;
  m.name = "product_example";
  m.space = ProductSpace::iid(DistributionSpec::rademacher(), n);
  m.evaluate = [](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) s += x[j];
    return s * x.back();
  };
  auto diff = [ev = m.evaluate](std::span<const double> x, std::size_t k) {
    return k + 1 < x.size() ? x[k] * x.back() : ev(x);
  };
  auto fwd = [ev = m.evaluate](std::span<const double> x, std::size_t k) {
    return k + 1 < x.size() ? 0.0 : ev(x);
  };
  auto bwd = [](std::span<const double> x, std::size_t k) { return k + 1 < x.size() ? x[k] * x.back() : 0.0; };
  m.closed_form = ClosedFormDiffs{diff, fwd, bwd};
  m.mean = 0.0;
  m.variance = static_cast<double>(n - 1);
  m.family = ProductExampleInfo{};
  return m;
}

namespace detail {

inline std::size_t window_support(const ProductSpace& space, std::size_t first, std::size_t width) {
  std::size_t total = 1;
  for (std::size_t j = first; j < first + width; ++j) {
    if (!space[j].has_finite_support()) return 0;
    const std::size_t r = space[j].atoms().size();
    if (total > kEnumerationCap / r) return kEnumerationCap + 1;
    total *= r;
  }
  return total;
}

// E[xi] for a kernel over coordinates first..first+m-1, with a standard error
// (zero when the window is enumerated).
inline std::pair<double, double> kernel_mean(const ProductSpace& space, std::size_t first, std::size_t m,
                                             const Evaluator& kernel, std::uint64_t seed) {
  std::vector<DistributionSpec> window(space.components().begin() + static_cast<std::ptrdiff_t>(first),
                                       space.components().begin() + static_cast<std::ptrdiff_t>(first + m));
  const ProductSpace w(window);
  const std::size_t support = window_support(space, first, m);
  if (support != 0 && support <= kEnumerationCap) return {enumerate_expectation(w, kernel), 0.0};
  constexpr std::size_t kDraws = 1'000'000;
  constexpr std::size_t kBatches = 40;
  std::vector<double> batch(kBatches);
  parallel_for(kBatches, [&](std::size_t b) {
    Xoshiro256 rng = make_stream(seed, {stream_tag::kKernelMoments, first, b});
    std::vector<double> x(m);
    KahanSum acc;
    const std::size_t per = kDraws / kBatches;
    for (std::size_t i = 0; i < per; ++i) {
      for (std::size_t j = 0; j < m; ++j) x[j] = window[j].sample(rng);
      acc += kernel(x);
    }
    batch[b] = acc.value() / static_cast<double>(per);
  });
  const double mean = kahan_sum(batch) / kBatches;
  KahanSum ss;
  for (double v : batch) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss.value() / (kBatches - 1) / kBatches)};
}

// Cartesian enumeration of the coordinates in `coords`, calling visit(weight)
// after writing each combination into x. Restores nothing; callers copy x.
template <class Visit>
void enumerate_coords(const ProductSpace& space, std::span<const std::size_t> coords, std::vector<double>& x,
                      Visit&& visit, std::size_t depth = 0, double weight = 1.0) {
  if (depth == coords.size()) {
    visit(weight);
    return;
  }
  const std::size_t c = coords[depth];
  for (const auto& a : space[c].atoms()) {
    x[c] = a.value;
    enumerate_coords(space, coords, x, visit, depth + 1, weight * a.probability);
  }
}

}  // namespace detail

// F = sum_i (xi_i - E xi_i) with xi_i a function of X_i..X_{i+m-1}
// (0-based windows i = 0..n-1 over n+m-1 coordinates). `kernel_seed` drives
// the Monte Carlo kernel means used when a window cannot be enumerated.
inline StatisticModel m_dependent_sum(const ProductSpace& space, std::size_t m, std::vector<Evaluator> kernels,
                                      std::uint64_t kernel_seed = 0) {
  if (m < 1) throw ArityMismatch("m must be >= 1");
  if (kernels.empty() || kernels.size() + m - 1 != space.size())
    throw ArityMismatch("m_dependent_sum: space needs n + m - 1 components for n kernels");
  const std::size_t n = kernels.size();
  auto info = std::make_shared<MDependentInfo>();
  info->m = m;
  info->windows = n;
  info->kernels = std::move(kernels);
  for (std::size_t i = 0; i < n; ++i) {
    auto [mu, se] = detail::kernel_mean(space, i, m, info->kernels[i], kernel_seed);
    info->kernel_means.push_back(mu);
    info->kernel_mean_se.push_back(se);
  }
  StatisticModel model;
  model.name = "m_dependent_sum";
  model.space = space;
  model.evaluate = [info](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < info->windows; ++i) s += info->kernels[i](x.subspan(i, info->m)) - info->kernel_means[i];
    return s;
  };
  KahanSum se2;
  for (double s : info->kernel_mean_se) se2 += s * s;
  model.mean = 0.0;
  model.mean_se = std::sqrt(se2.value());

  bool enumerable = true;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = detail::window_support(space, i, m);
    if (s == 0 || s > kEnumerationCap) enumerable = false;
  }
  if (enumerable) {
    // D_k F = sum over windows i in [k-m+1, k] (clamped to [0, n-1]) of D_k xi_i.
    // Conditioning integrates the window coordinates on one side of k.
    auto window_term = [info, space](std::span<const double> x, std::size_t k, int side) {
      const std::size_t m = info->m;
      const std::size_t lo = k + 1 >= m ? k + 1 - m : 0;
      const std::size_t hi = std::min(k, info->windows - 1);
      double total = 0.0;
      std::vector<double> y(x.begin(), x.end());
      for (std::size_t i = lo; i <= hi && i <= k; ++i) {
        std::vector<std::size_t> coords;
        if (side > 0)
          for (std::size_t j = k + 1; j < i + m; ++j) coords.push_back(j);
        if (side < 0)
          for (std::size_t j = i; j < k; ++j) coords.push_back(j);
        const auto& kernel = info->kernels[i];
        KahanSum acc;
        detail::enumerate_coords(space, coords, y, [&](double w) {
          const std::span<const double> win(y.data() + i, m);
          double ek = 0.0;
          const double keep = y[k];
          for (const auto& a : space[k].atoms()) {
            y[k] = a.value;
            ek += a.probability * kernel(win);
          }
          y[k] = keep;
          acc += w * (kernel(win) - ek);
        });
        for (std::size_t c : coords) y[c] = x[c];
        total += acc.value();
      }
      return total;
    };
    model.closed_form = ClosedFormDiffs{
        [window_term](std::span<const double> x, std::size_t k) { return window_term(x, k, 0); },
        [window_term](std::span<const double> x, std::size_t k) { return window_term(x, k, +1); },
        [window_term](std::span<const double> x, std::size_t k) { return window_term(x, k, -1); }};
  }
  model.family = *info;
  return model;
}

// Same kernel in every window.
inline StatisticModel m_dependent_sum(const ProductSpace& space, std::size_t m, const Evaluator& kernel,
                                      std::uint64_t kernel_seed = 0) {
  if (m < 1 || space.size() < m) throw ArityMismatch("m_dependent_sum: space shorter than one window");
  return m_dependent_sum(space, m, std::vector<Evaluator>(space.size() - m + 1, kernel), kernel_seed);
}

// m-runs: xi_i = X_i X_{i+1} ... X_{i+m-1}, with closed-form differences for
// any component laws.
inline StatisticModel m_runs(const ProductSpace& space, std::size_t m) {
  if (m < 1 || space.size() < m) throw ArityMismatch("m_runs: space shorter than one window");
  const std::size_t n = space.size() - m + 1;
  std::vector<double> mu;
  for (const auto& c : space.components()) mu.push_back(c.mean());
  auto info = std::make_shared<MDependentInfo>();
  info->m = m;
  info->windows = n;
  info->runs = true;
  Evaluator prod = [](std::span<const double> w) {
    double p = 1.0;
    for (double v : w) p *= v;
    return p;
  };
  info->kernels.assign(n, prod);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double p = 1.0;
    for (std::size_t j = i; j < i + m; ++j) p *= mu[j];
    info->kernel_means.push_back(p);
    info->kernel_mean_se.push_back(0.0);
  }
  bool all_centered = true;
  for (double v : mu) all_centered = all_centered && v == 0.0;
  if (all_centered) {
    // Distinct runs are uncorrelated when every mean vanishes.
    for (std::size_t i = 0; i < n; ++i) {
      double p = 1.0;
      for (std::size_t j = i; j < i + m; ++j) p *= space[j].variance();
      var += p;
    }
  }
  StatisticModel model;
  model.name = "m_runs";
  model.space = space;
  model.evaluate = [info](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < info->windows; ++i) {
      double p = 1.0;
      for (std::size_t j = i; j < i + info->m; ++j) p *= x[j];
      s += p - info->kernel_means[i];
    }
    return s;
  };
  auto mus = std::make_shared<const std::vector<double>>(mu);
  // side 0: D_k, +1: integrate the part after k, -1: integrate the part before k.
  auto term = [mus, m, n](std::span<const double> x, std::size_t k, int side) {
    const std::size_t lo = k + 1 >= m ? k + 1 - m : 0;
    const std::size_t hi = std::min(k, n - 1);
    double total = 0.0;
    for (std::size_t i = lo; i <= hi && i <= k; ++i) {
      double p = x[k] - (*mus)[k];
      for (std::size_t j = i; j < i + m; ++j) {
        if (j == k) continue;
        const bool integrated = (side > 0 && j > k) || (side < 0 && j < k);
        p *= integrated ? (*mus)[j] : x[j];
      }
      total += p;
    }
    return total;
  };
  model.closed_form =
      ClosedFormDiffs{[term](std::span<const double> x, std::size_t k) { return term(x, k, 0); },
                      [term](std::span<const double> x, std::size_t k) { return term(x, k, +1); },
                      [term](std::span<const double> x, std::size_t k) { return term(x, k, -1); }};
  model.mean = 0.0;
  if (all_centered) model.variance = var;
  model.family = *info;
  return model;
}

// Dense row-major square matrix used for quadratic forms.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;
  double operator()(std::size_t u, std::size_t v) const { return a[u * n + v]; }
  double& operator()(std::size_t u, std::size_t v) { return a[u * n + v]; }
};

inline DenseMatrix zero_matrix(std::size_t n) { return DenseMatrix{n, std::vector<double>(n * n, 0.0)}; }

// a_{u, u +- j} = 1 (indices mod n) for j = 1..bandwidth.
inline DenseMatrix circulant_band(std::size_t n, std::size_t bandwidth = 1) {
  DenseMatrix A = zero_matrix(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t j = 1; j <= bandwidth; ++j) {
      const std::size_t v = (u + j) % n;
      if (v == u) continue;
      A(u, v) = 1.0;
      A(v, u) = 1.0;
    }
  return A;
}

inline void check_symmetric(const DenseMatrix& A) {
  for (std::size_t u = 0; u < A.n; ++u)
    for (std::size_t v = u + 1; v < A.n; ++v) {
      const double x = A(u, v), y = A(v, u);
      if (std::abs(x - y) > 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}))
        throw AsymmetricMatrix("matrix is not symmetric at (" + std::to_string(u) + "," + std::to_string(v) + ")");
    }
}

// Comma separated, one matrix row per line; blank lines and lines starting
// with '#' are skipped.
inline DenseMatrix load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument("bad matrix entry '" + cell + "' in " + path);
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0) throw InvalidArgument("empty matrix file " + path);
  DenseMatrix A = zero_matrix(n);
  for (std::size_t u = 0; u < n; ++u) {
    if (rows[u].size() != n) throw InvalidArgument("matrix in " + path + " is not square");
    for (std::size_t v = 0; v < n; ++v) A(u, v) = rows[u][v];
  }
  check_symmetric(A);
  return A;
}

inline StatisticModel quadratic_form(const ProductSpace& space, const DenseMatrix& A) {
  if (A.n != space.size()) throw ArityMismatch("matrix size does not match the space");
  check_symmetric(A);
  for (std::size_t u = 0; u < A.n; ++u)
    if (A(u, u) != 0.0) throw NonzeroDiagonal("diagonal entry " + std::to_string(u) + " is nonzero");
  for (const auto& c : space.components()) {
    if (std::abs(c.mean()) > 1e-12 || std::abs(c.variance() - 1.0) > 1e-12)
      throw BadStandardization(c.label() + ": quadratic forms need mean 0 and variance 1");
  }
  QuadraticFormInfo info;
  info.matrix.n = A.n;
  info.matrix.rows.resize(A.n);
  double var = 0.0;
  for (std::size_t u = 0; u < A.n; ++u)
    for (std::size_t v = 0; v < A.n; ++v) {
      if (A(u, v) == 0.0) continue;
      info.matrix.rows[u].push_back({v, A(u, v)});
      if (u < v) var += A(u, v) * A(u, v);
    }
  auto mat = std::make_shared<const SparseSymmetric>(info.matrix);
  StatisticModel m;
  m.name = "quadratic_form";
  m.space = space;
  m.evaluate = [mat](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t u = 0; u < mat->n; ++u)
      for (const auto& e : mat->rows[u])
        if (e.col > u) s += e.value * x[u] * x[e.col];
    return s;
  };
  auto diff = [mat](std::span<const double> x, std::size_t k) { return x[k] * mat->row_dot(k, x); };
  auto fwd = [mat](std::span<const double> x, std::size_t k) {
    double s = 0.0;
    for (const auto& e : mat->rows[k])
      if (e.col < k) s += e.value * x[e.col];
    return x[k] * s;
  };
  auto bwd = [mat](std::span<const double> x, std::size_t k) {
    double s = 0.0;
    for (const auto& e : mat->rows[k])
      if (e.col > k) s += e.value * x[e.col];
    return x[k] * s;
  };
  m.closed_form = ClosedFormDiffs{diff, fwd, bwd};
  m.mean = 0.0;
  m.variance = var;
  m.family = std::move(info);
  return m;
}

inline StatisticModel black_box(const ProductSpace& space, Evaluator evaluator, std::string id = "black_box") {
  StatisticModel m;
  m.name = "black_box";
  m.space = space;
  m.evaluate = std::move(evaluator);
  m.family = BlackBoxInfo{std::move(id)};
  return m;
}

// Evaluators addressable by plugin id from configuration files.
inline const std::map<std::string, Evaluator>& black_box_plugins() {
  static const std::map<std::string, Evaluator> plugins = {
      {"max", [](std::span<const double> x) { return *std::max_element(x.begin(), x.end()); }},
      {"min", [](std::span<const double> x) { return *std::min_element(x.begin(), x.end()); }},
      {"abs_sum",
       [](std::span<const double> x) {
         double s = 0.0;
         for (double v : x) s += v;
         return std::abs(s);
       }},
      {"sum_cubes",
       [](std::span<const double> x) {
         double s = 0.0;
         for (double v : x) s += v * v * v;
         return s;
       }},
  };
  return plugins;
}

inline StatisticModel black_box_plugin(const ProductSpace& space, const std::string& id) {
  const auto& plugins = black_box_plugins();
  const auto it = plugins.find(id);
  if (it == plugins.end()) throw InvalidArgument("unknown black_box plugin '" + id + "'");
  return black_box(space, it->second, id);
}

// F evaluated on `count` rows drawn as in sample(model.space, seed, count).
inline std::vector<double> draw_statistic(const StatisticModel& model, std::uint64_t seed, std::size_t count) {
  std::vector<double> out(count);
  for_each_sampled_row(model.space, seed, count,
                       [&](std::size_t r, std::span<const double> row) { out[r] = model.evaluate(row); });
  return out;
}

}  // namespace steingauge
