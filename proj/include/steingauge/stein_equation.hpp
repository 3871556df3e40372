#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"

namespace steingauge {

using RealFn = std::function<double(double)>;

struct TestFunction {
  std::string name;
  RealFn h;
  RealFn h1;  // h'
  RealFn h2;  // h''
  double sup_h1 = 0.0;
  double sup_h2 = 0.0;
  double eh = 0.0;  // E h(N)
};

// Builds a test function, computing E h(N) and checking the declared
// sup-norms on a fine grid over [-12, 12].
inline TestFunction make_test_function(std::string name, RealFn h, RealFn h1, RealFn h2, double sup_h1,
                                       double sup_h2) {
  TestFunction t{std::move(name), std::move(h), std::move(h1), std::move(h2), sup_h1, sup_h2, 0.0};
  constexpr int kPoints = 24001;
  for (int i = 0; i < kPoints; ++i) {
    const double x = -12.0 + 24.0 * i / (kPoints - 1);
    if (std::abs(t.h1(x)) > sup_h1 * (1.0 + 1e-9) + 1e-12)
      throw InvalidArgument(t.name + ": declared sup|h'| is exceeded at x = " + std::to_string(x));
    if (std::abs(t.h2(x)) > sup_h2 * (1.0 + 1e-9) + 1e-12)
      throw InvalidArgument(t.name + ": declared sup|h''| is exceeded at x = " + std::to_string(x));
  }
  t.eh = normal_expectation(t.h);
  return t;
}

namespace detail {
inline double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}
inline double sech2(double y) {
  const double c = std::cosh(y);
  return std::isfinite(c) ? 1.0 / (c * c) : 0.0;
}
}  // namespace detail

inline TestFunction test_identity() {
  return make_test_function("x", [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; },
                            1.0, 0.0);
}

inline TestFunction test_constant(double c) {
  return make_test_function("constant", [c](double) { return c; }, [](double) { return 0.0; },
                            [](double) { return 0.0; }, 0.0, 0.0);
}

// sin(w x)/w
inline TestFunction test_sine(double w) {
  return make_test_function("sin" + std::to_string(static_cast<int>(w)), [w](double x) { return std::sin(w * x) / w; },
                            [w](double x) { return std::cos(w * x); }, [w](double x) { return -w * std::sin(w * x); },
                            1.0, w);
}

inline TestFunction test_cosine() {
  return make_test_function("cos", [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); },
                            [](double x) { return -std::cos(x); }, 1.0, 1.0);
}

inline TestFunction test_tanh() {
  return make_test_function(
      "tanh", [](double x) { return std::tanh(x); }, [](double x) { return detail::sech2(x); },
      [](double x) { return -2.0 * std::tanh(x) * detail::sech2(x); }, 1.0, 4.0 / (3.0 * std::sqrt(3.0)));
}

// Smoothed clamp to [-1, 1]: h' = (tanh(c(x+1)) - tanh(c(x-1)))/2.
inline TestFunction test_ramp(double c) {
  return make_test_function(
      "ramp" + std::to_string(static_cast<int>(c)),
      [c](double x) { return (detail::log_cosh(c * (x + 1.0)) - detail::log_cosh(c * (x - 1.0))) / (2.0 * c); },
      [c](double x) { return 0.5 * (std::tanh(c * (x + 1.0)) - std::tanh(c * (x - 1.0))); },
      [c](double x) { return 0.5 * c * (detail::sech2(c * (x + 1.0)) - detail::sech2(c * (x - 1.0))); },
      std::tanh(c), c / 2.0);
}

inline std::vector<TestFunction> stein_battery() {
  return {test_identity(), test_sine(1.0), test_sine(2.0), test_tanh(), test_cosine(), test_ramp(1.0), test_ramp(2.0)};
}

inline std::optional<TestFunction> battery_function(const std::string& name) {
  if (name == "sin") return test_sine(1.0);
  if (name == "constant") return test_constant(1.0);
  for (auto& t : stein_battery())
    if (t.name == name) return t;
  return std::nullopt;
}

struct SteinSolution {
  std::vector<double> grid;
  std::vector<double> f, f1, f2, f3;
  double tolerance = 1e-11;
  double max_residual = 0.0;
};

// Bounded solution of f' - x f = h - E h(N), written as Gaussian-weighted
// integrals that decay in s on each half line:
//   x >= 0: f(x) = -int_0^inf g(x+s) exp(-x s - s^2/2) ds
//   x <  0: f(x) =  int_0^inf g(x-s) exp( x s - s^2/2) ds
// with g = h - E h(N). f' is integrated the same way; f'' and f''' follow
// from differentiating the equation.
inline SteinSolution solve(const TestFunction& tf, double L = 8.0, std::size_t grid_size = 4001) {
  if (!(L >= 4.0 && L <= 12.0)) throw InvalidArgument("L must lie in [4, 12]");
  if (grid_size < 1001 || grid_size % 2 == 0) throw InvalidArgument("grid size must be odd and >= 1001");
  SteinSolution sol;
  sol.grid.resize(grid_size);
  sol.f.resize(grid_size);
  sol.f1.resize(grid_size);
  sol.f2.resize(grid_size);
  sol.f3.resize(grid_size);
  const double eh = tf.eh;
  const double cuts[] = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> residual(grid_size);
  parallel_for(grid_size, [&](std::size_t i) {
    const double x = -L + 2.0 * L * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    double f = 0.0, f1 = 0.0;
    if (x >= 0.0) {
      f = -integrate([&](double s) { return (tf.h(x + s) - eh) * std::exp(-x * s - 0.5 * s * s); }, 0.0, 40.0, cuts,
                     sol.tolerance);
      f1 = -integrate(
          [&](double s) { return (tf.h1(x + s) - s * (tf.h(x + s) - eh)) * std::exp(-x * s - 0.5 * s * s); }, 0.0,
          40.0, cuts, sol.tolerance);
    } else {
      f = integrate([&](double s) { return (tf.h(x - s) - eh) * std::exp(x * s - 0.5 * s * s); }, 0.0, 40.0, cuts,
                    sol.tolerance);
      f1 = integrate(
          [&](double s) { return (tf.h1(x - s) + s * (tf.h(x - s) - eh)) * std::exp(x * s - 0.5 * s * s); }, 0.0,
          40.0, cuts, sol.tolerance);
    }
    sol.grid[i] = x;
    sol.f[i] = f;
    sol.f1[i] = f1;
    sol.f2[i] = f + x * f1 + tf.h1(x);
    sol.f3[i] = 2.0 * f1 + x * sol.f2[i] + tf.h2(x);
    residual[i] = std::abs(f1 - x * f - (tf.h(x) - eh));
  });
  sol.max_residual = *std::max_element(residual.begin(), residual.end());
  if (!(sol.max_residual <= 1e-7))
    throw QuadratureFailure(tf.name + ": Stein residual " + std::to_string(sol.max_residual) + " exceeds 1e-7");
  return sol;
}

struct HolderResult {
  double max_ratio = 0.0;
  std::vector<double> per_point;  // largest ratio over the pairs containing each grid point
  std::size_t pairs = 0;
};

namespace detail {

// Pair offsets: every offset up to 64, then geometric (factor 1.1) to the
// full width. For a 4001-point grid this is about 5e5 pairs.
inline std::vector<std::size_t> holder_offsets(std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t d = 1; d <= std::min<std::size_t>(64, n - 1); ++d) out.push_back(d);
  double d = 64.0;
  while (true) {
    d *= 1.1;
    const auto k = static_cast<std::size_t>(d);
    if (k >= n) break;
    if (k > out.back()) out.push_back(k);
  }
  if (out.back() != n - 1) out.push_back(n - 1);
  return out;
}

inline HolderResult holder_scan(const std::vector<double>& grid, const std::vector<double>& v, double delta,
                                double constant) {
  const std::size_t n = grid.size();
  auto offsets = holder_offsets(n);
  std::size_t total = 0;
  for (std::size_t d : offsets) total += n - d;
  while (total > 1'000'000) {
    offsets.pop_back();
    total = 0;
    for (std::size_t d : offsets) total += n - d;
  }
  HolderResult r;
  r.per_point.assign(n, 0.0);
  r.pairs = total;
  for (std::size_t d : offsets) {
    for (std::size_t i = 0; i + d < n; ++i) {
      const double num = std::abs(v[i] - v[i + d]);
      double ratio = 0.0;
      if (num > 0.0) {
        const double den = constant * std::pow(grid[i + d] - grid[i], delta);
        ratio = den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
      }
      r.per_point[i] = std::max(r.per_point[i], ratio);
      r.per_point[i + d] = std::max(r.per_point[i + d], ratio);
      r.max_ratio = std::max(r.max_ratio, ratio);
    }
  }
  return r;
}

}  // namespace detail

// max |f'(x) - f'(y)| / (2 |h'| |x - y|^delta) over grid pairs.
inline HolderResult holder_check_first(const SteinSolution& sol, double delta, double sup_h1) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  return detail::holder_scan(sol.grid, sol.f1, delta, 2.0 * sup_h1);
}

// max |f''(x) - f''(y)| / (2 max(2|h'|, |h''|) |x - y|^delta).
inline HolderResult holder_check_second(const SteinSolution& sol, double delta, double sup_h1, double sup_h2) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0,1]");
  return detail::holder_scan(sol.grid, sol.f2, delta, 2.0 * std::max(2.0 * sup_h1, sup_h2));
}

inline double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

}  // namespace steingauge
