#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "steingauge/error.hpp"

namespace steingauge {

// Neumaier's variant of Kahan compensated summation.
class KahanSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double v) {
    add(v);
    return *this;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double kahan_sum(std::span<const double> values) {
  KahanSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

// |x|^p computed as exp(p ln|x|) with |x| floored at 1e-300, so that exact
// zeros never produce NaN for fractional p.
inline double abs_pow(double x, double p) {
  const double a = std::max(std::abs(x), 1e-300);
  return std::exp(p * std::log(a));
}

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("normal_quantile: p must lie in (0,1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

// Antiderivative of the normal CDF vanishing at -infinity:
// G(x) = x Phi(x) + phi(x) = integral_{-inf}^{x} Phi(t) dt.
inline double normal_cdf_antiderivative(double x) { return x * normal_cdf(x) + normal_pdf(x); }

// Adaptive 15-point Gauss-Kronrod over [a, b], split at the given interior
// breakpoints (kinks of the integrand). Infinite limits are accepted.
template <class F>
double integrate(F&& f, double a, double b, std::span<const double> breakpoints = {},
                 double tolerance = 1e-13) {
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);
  KahanSum total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, cuts[i], cuts[i + 1], 15,
                                                                         tolerance, &err);
  }
  return total.value();
}

// Tanh-sinh over a finite interval; tolerant of integrable endpoint
// singularities.
template <class F>
double integrate_singular(F&& f, double a, double b, double tolerance = 1e-12) {
  static thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, a, b, tolerance);
}

// E[h(N)] for a standard normal N, by quadrature on the real line.
template <class F>
double normal_expectation(F&& h) {
  auto g = [&](double x) { return h(x) * normal_pdf(x); };
  const double cuts[] = {-8.0, 0.0, 8.0};
  return integrate(g, -40.0, 40.0, cuts, 1e-14);
}

}  // namespace steingauge
