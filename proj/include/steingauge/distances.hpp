#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"
#include "steingauge/parallel.hpp"
#include "steingauge/random.hpp"
#include "steingauge/stein_equation.hpp"

namespace steingauge {

enum class DistanceKind { W1_EMPIRICAL, D2_LOWER };

struct DistanceEstimate {
  DistanceKind kind = DistanceKind::W1_EMPIRICAL;
  double value = 0.0;
  std::size_t sample_size = 0;
  double resample_std_error = 0.0;
};

inline constexpr std::size_t kBootstrapResamples = 200;

namespace detail {

// Sorted sample with Phi and its antiderivative cached at each point.
struct SortedSample {
  std::vector<double> x, cdf, anti;
  explicit SortedSample(std::span<const double> samples) : x(samples.begin(), samples.end()) {
    std::sort(x.begin(), x.end());
    cdf.resize(x.size());
    anti.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      cdf[i] = normal_cdf(x[i]);
      anti[i] = normal_cdf_antiderivative(x[i]);
    }
  }
};

// int |F - Phi| where F jumps to height heights[i] at x[i].
inline double w1_from_heights(const SortedSample& s, std::span<const double> heights) {
  const std::size_t m = s.x.size();
  KahanSum acc;
  acc += s.anti[0];                         // int_{-inf}^{x_0} Phi
  acc += normal_cdf_antiderivative(-s.x[m - 1]);  // int_{x_last}^{inf} (1 - Phi)
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double a = s.x[i], b = s.x[i + 1];
    if (b <= a) continue;
    const double c = heights[i];
    const double pa = s.cdf[i], pb = s.cdf[i + 1];
    const double intphi = s.anti[i + 1] - s.anti[i];
    if (pa >= c) {
      acc += intphi - c * (b - a);
    } else if (pb <= c) {
      acc += c * (b - a) - intphi;
    } else {
      const double t = std::clamp(normal_quantile(c), a, b);
      const double gt = normal_cdf_antiderivative(t);
      acc += c * (t - a) - (gt - s.anti[i]);
      acc += (s.anti[i + 1] - gt) - c * (b - t);
    }
  }
  return acc.value();
}

// Multinomial resample counts over m sorted points.
inline std::vector<std::uint32_t> resample_counts(std::size_t m, std::uint64_t seed, std::size_t r) {
  Xoshiro256 rng = make_stream(seed, {stream_tag::kBootstrap, r});
  std::vector<std::uint32_t> counts(m, 0);
  for (std::size_t i = 0; i < m; ++i) ++counts[rng.below(m)];
  return counts;
}

inline double std_dev(const std::vector<double>& v) {
  const double mean = kahan_sum(v) / static_cast<double>(v.size());
  KahanSum ss;
  for (double a : v) ss += (a - mean) * (a - mean);
  return std::sqrt(ss.value() / static_cast<double>(v.size() - 1));
}

}  // namespace detail

// Exact W1 between the empirical law of `samples` and N(0,1), with a
// bootstrap standard error over 200 resamples.
inline DistanceEstimate w1_to_normal(std::span<const double> samples, std::uint64_t seed = 0,
                                     std::size_t resamples = kBootstrapResamples) {
  if (samples.size() < 2) throw EmptySample("w1_to_normal needs at least two samples");
  const detail::SortedSample s(samples);
  const std::size_t m = s.x.size();
  std::vector<double> heights(m);
  for (std::size_t i = 0; i < m; ++i) heights[i] = static_cast<double>(i + 1) / static_cast<double>(m);
  DistanceEstimate est{DistanceKind::W1_EMPIRICAL, detail::w1_from_heights(s, heights), m, 0.0};
  if (resamples >= 2) {
    std::vector<double> boot(resamples);
    parallel_for(resamples, [&](std::size_t r) {
      const auto counts = detail::resample_counts(m, seed, r);
      std::vector<double> h(m);
      std::uint64_t cum = 0;
      for (std::size_t i = 0; i < m; ++i) {
        cum += counts[i];
        h[i] = static_cast<double>(cum) / static_cast<double>(m);
      }
      boot[r] = detail::w1_from_heights(s, h);
    });
    est.resample_std_error = detail::std_dev(boot);
  }
  return est;
}

// sin(w x)/max(w, w^2) and cos(w x)/max(w, w^2) for w in {1/2, 1, 2}, and
// x exp(-x^2/4) (sup|h'| = 1, sup|h''| ~ 0.976).
inline std::vector<TestFunction> default_panel() {
  std::vector<TestFunction> panel;
  for (double w : {0.5, 1.0, 2.0}) {
    const double s = std::max(w, w * w);
    const std::string tag = w == 0.5 ? "0.5" : w == 1.0 ? "1" : "2";
    panel.push_back(make_test_function(
        "sin_" + tag, [w, s](double x) { return std::sin(w * x) / s; }, [w, s](double x) { return w * std::cos(w * x) / s; },
        [w, s](double x) { return -w * w * std::sin(w * x) / s; }, w / s, w * w / s));
    panel.push_back(make_test_function(
        "cos_" + tag, [w, s](double x) { return std::cos(w * x) / s; }, [w, s](double x) { return -w * std::sin(w * x) / s; },
        [w, s](double x) { return -w * w * std::cos(w * x) / s; }, w / s, w * w / s));
  }
  panel.push_back(make_test_function(
      "gauss_bump", [](double x) { return x * std::exp(-x * x / 4.0); },
      [](double x) { return (1.0 - x * x / 2.0) * std::exp(-x * x / 4.0); },
      [](double x) { return (x * x * x / 4.0 - 1.5 * x) * std::exp(-x * x / 4.0); }, 1.0, 0.976));
  return panel;
}

// max over the panel of |mean h(samples) - E h(N)|.
inline DistanceEstimate d2_lower(std::span<const double> samples, const std::vector<TestFunction>& panel,
                                 std::uint64_t seed = 0, std::size_t resamples = kBootstrapResamples) {
  if (panel.empty()) throw PanelViolatesNorms("d2 panel is empty");
  for (const auto& t : panel)
    if (t.sup_h1 > 1.0 + 1e-12 || t.sup_h2 > 1.0 + 1e-12)
      throw PanelViolatesNorms(t.name + ": panel functions need sup|h'| <= 1 and sup|h''| <= 1");
  if (samples.empty()) throw EmptySample("d2_lower needs samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t m = x.size();
  const std::size_t P = panel.size();
  std::vector<std::vector<double>> hv(P, std::vector<double>(m));
  parallel_for(P, [&](std::size_t p) {
    for (std::size_t i = 0; i < m; ++i) hv[p][i] = panel[p].h(x[i]);
  });
  double best = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    const double mean = kahan_sum(hv[p]) / static_cast<double>(m);
    best = std::max(best, std::abs(mean - panel[p].eh));
  }
  DistanceEstimate est{DistanceKind::D2_LOWER, best, m, 0.0};
  if (resamples >= 2 && m >= 2) {
    std::vector<double> boot(resamples);
    parallel_for(resamples, [&](std::size_t r) {
      const auto counts = detail::resample_counts(m, seed ^ 0x5DEECE66DULL, r);
      double b = 0.0;
      for (std::size_t p = 0; p < P; ++p) {
        KahanSum acc;
        for (std::size_t i = 0; i < m; ++i)
          if (counts[i]) acc += counts[i] * hv[p][i];
        b = std::max(b, std::abs(acc.value() / static_cast<double>(m) - panel[p].eh));
      }
      boot[r] = b;
    });
    est.resample_std_error = detail::std_dev(boot);
  }
  return est;
}

}  // namespace steingauge
