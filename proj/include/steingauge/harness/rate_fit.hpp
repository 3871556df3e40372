#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "json.hpp"
#include "steingauge/error.hpp"
#include "steingauge/numeric.hpp"

namespace steingauge {

struct RateFit {
  std::vector<std::pair<double, double>> points;  // (n, value)
  double slope = 0.0;
  double intercept = 0.0;         // log10 value at log10 n = 0
  double max_abs_residual = 0.0;  // log10 units
};

// Least squares of log10(value) on log10(n).
inline RateFit fit_rate(std::vector<std::pair<double, double>> points) {
  if (points.size() < 4) throw DegenerateFit("rate fits need at least 4 points");
  for (const auto& [n, v] : points) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DegenerateFit("rate fit values must be positive and finite");
    if (!(n > 0.0)) throw DegenerateFit("rate fit abscissae must be positive");
  }
  const double k = static_cast<double>(points.size());
  KahanSum sx, sy;
  for (const auto& [n, v] : points) {
    sx += std::log10(n);
    sy += std::log10(v);
  }
  const double mx = sx.value() / k, my = sy.value() / k;
  KahanSum sxx, sxy;
  for (const auto& [n, v] : points) {
    const double dx = std::log10(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log10(v) - my);
  }
  if (!(sxx.value() > 0.0)) throw DegenerateFit("rate fit needs at least two distinct n");
  RateFit r;
  r.slope = sxy.value() / sxx.value();
  r.intercept = my - r.slope * mx;
  for (const auto& [n, v] : points)
    r.max_abs_residual = std::max(r.max_abs_residual, std::abs(std::log10(v) - (r.intercept + r.slope * std::log10(n))));
  r.points = std::move(points);
  return r;
}

inline nlohmann::json to_json(const RateFit& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [n, v] : r.points) pts.push_back({n, v});
  return {{"points", pts}, {"slope", r.slope}, {"intercept", r.intercept}, {"max_abs_residual", r.max_abs_residual}};
}

}  // namespace steingauge
