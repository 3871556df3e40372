#pragma once

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <vector>

#include "steingauge/harness/inequality_battery.hpp"
#include "steingauge/stein_equation.hpp"

namespace steingauge {

inline constexpr double kHolderSlack = 1e-3;

// Smoothness of the Stein solution over a test-function battery: both Holder
// ratios at each delta, the three sup-norm bounds and the residual.
inline BatteryReport stein_check(const std::vector<TestFunction>& battery = stein_battery(),
                                 std::initializer_list<double> deltas = {0.25, 0.5, 1.0}, double L = 8.0,
                                 std::size_t grid = 4001) {
  BatteryReport rep;
  rep.statistics = battery.size();
  rep.check("holder_first", false, kHolderSlack);
  rep.check("holder_second", false, kHolderSlack);
  rep.check("sup_f1", false, 1e-9);
  rep.check("sup_f2", false, 1e-9);
  rep.check("sup_f3", false, 1e-9);
  rep.check("residual", false, 0.0);
  for (const auto& tf : battery) {
    const SteinSolution s = solve(tf, L, grid);
    for (double d : deltas) {
      rep.check("holder_first").inequality(holder_check_first(s, d, tf.sup_h1).max_ratio, 1.0);
      rep.check("holder_second").inequality(holder_check_second(s, d, tf.sup_h1, tf.sup_h2).max_ratio, 1.0);
    }
    rep.check("sup_f1").inequality(sup_norm(s.f1), std::sqrt(2.0 / std::numbers::pi) * tf.sup_h1);
    rep.check("sup_f2").inequality(sup_norm(s.f2), 2.0 * tf.sup_h1);
    rep.check("sup_f3").inequality(sup_norm(s.f3), 2.0 * tf.sup_h2);
    rep.check("residual").inequality(s.max_residual, 1e-7);
  }
  return rep;
}

}  // namespace steingauge
