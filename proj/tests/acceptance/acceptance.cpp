// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance               all criteria
//   acceptance --criterion 4 just one
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "steingauge/bounds.hpp"
#include "steingauge/harness/experiment.hpp"
#include "steingauge/harness/inequality_battery.hpp"
#include "steingauge/harness/stein_check.hpp"
#include "steingauge/profile.hpp"

#ifndef STEINGAUGE_GIT_HASH
#define STEINGAUGE_GIT_HASH "unknown"
#endif
#ifndef STEINGAUGE_SOURCE_DIR
#define STEINGAUGE_SOURCE_DIR "."
#endif

using namespace steingauge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string g(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

ExperimentConfig config(const std::string& name) {
  ExperimentConfig c = load_config(std::string(STEINGAUGE_SOURCE_DIR) + "/configs/" + name + ".toml");
  c.outputs = "acceptance_out/" + name;
  return c;
}

ExperimentResult run_and_write(const ExperimentConfig& c) {
  auto r = run_experiment(c, STEINGAUGE_GIT_HASH);
  write_outputs(r);
  return r;
}

// least squares slope in log-log, any number of points >= 2
double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  double mx = 0, my = 0;
  for (auto [x, y] : pts) mx += std::log10(x), my += std::log10(y);
  mx /= pts.size(), my /= pts.size();
  double sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sxx += (std::log10(x) - mx) * (std::log10(x) - mx);
    sxy += (std::log10(x) - mx) * (std::log10(y) - my);
  }
  return sxy / sxx;
}

void check_sandwich(Outcome& o, const ExperimentResult& r) {
  for (const auto& p : r.points)
    o.require(p.sandwich, "sandwich at n=" + std::to_string(p.n) + " (margin " + g(p.sandwich_margin) + ")");
  for (const auto& p : r.points) o.require(p.containment, "containment at n=" + std::to_string(p.n));
}

Outcome criterion1() {
  Outcome o;
  double worst1 = 0, worst2 = 0;
  for (std::size_t n : {5, 17, 65, 257}) {
    const auto m = product_example(n);
    const double d1 = d1_bound(profile(m, {0.0, 0.5, 0.0}, 1.0), BoundForm::termwise).total;
    const double d2 = d2_bound(profile(m, {0.0, 0.5, 0.0}, 1.0, ProfileLevel::d2), BoundForm::termwise).total;
    const double e1 = 8.0 / std::sqrt(n - 1.0), e2 = 24.0 / (n - 1.0);
    worst1 = std::max(worst1, std::abs(d1 - e1));
    worst2 = std::max(worst2, std::abs(d2 - e2));
  }
  o.require(worst1 <= 1e-12, "d1 vs 8/sqrt(n-1), max err " + g(worst1));
  o.require(worst2 <= 1e-12, "d2 vs 24/(n-1), max err " + g(worst2));
  o.note("max |d1 - 8/sqrt(n-1)| = " + g(worst1) + ", max |d2 - 24/(n-1)| = " + g(worst2));
  return o;
}

Outcome criterion2() {
  Outcome o;
  for (std::size_t n : {16, 64, 256, 1024}) {
    const auto sp = ProductSpace::iid(DistributionSpec::rademacher(), n);
    const double closed = partial_sum_d1_bound(sp, 1.0).total;
    const double agg = d1_bound(profile(partial_sum(sp), {0.5, 0.5, 0.5}, 1.0), BoundForm::aggregate).total;
    o.require(rel_close(closed, 16.0 / std::sqrt(n), 1e-12), "closed form 16/sqrt(n) at n=" + std::to_string(n));
    o.require(rel_close(agg, 8.0 / std::sqrt(n), 1e-12), "aggregate 8/sqrt(n) at n=" + std::to_string(n));
  }
  const auto r = run_and_write(config("lyapunov"));
  for (const auto& p : r.points)
    o.require(p.w1.value <= p.bound.total, "W1 <= bound at n=" + std::to_string(p.n));
  check_sandwich(o, r);
  o.require(r.w1_rate.has_value(), "w1 slope fit");
  if (r.w1_rate) {
    o.require(r.w1_rate->slope >= -0.65 && r.w1_rate->slope <= -0.35, "w1 slope in [-0.65, -0.35]");
    o.note("w1 slope " + g(r.w1_rate->slope));
  }
  return o;
}

Outcome criterion3() {
  Outcome o;
  const auto r = run_and_write(config("pareto"));
  check_sandwich(o, r);
  o.require(r.bound_rate.has_value(), "bound slope fit");
  if (r.bound_rate) {
    o.require(std::abs(r.bound_rate->slope + 0.5) <= 0.15, "bound slope within -0.5 +- 0.15");
    o.note("bound slope " + g(r.bound_rate->slope));
  }
  if (r.w1_rate) o.note("w1 slope " + g(r.w1_rate->slope) + " (not a criterion)");
  return o;
}

Outcome criterion4() {
  Outcome o;
  // 8 + 2^{2+d} (3^{d/3}(2 + 3^{(3+d)/3}))^{3/(3+d)} + 2^{4+d} with d = 1, written out
  const double c1 = 8.0 + 8.0 * std::pow(std::cbrt(3.0) * (2.0 + std::pow(3.0, 4.0 / 3.0)), 0.75) + 32.0;
  o.require(std::abs(c1 - 82.0) <= 0.1, "C_1 = 82.0 +- 0.1");
  o.require(rel_close(partial_sum_d2_constant(1.0), c1, 1e-14), "library constant matches the formula");
  o.note("C_1 = " + g(c1));
  const auto r = run_and_write(config("third_moment"));
  for (const auto& p : r.points) {
    o.require(rel_close(p.bound.total, c1 / p.n, 1e-12), "d2 bound = C_1/n at n=" + std::to_string(p.n));
    o.require(p.d2.value <= p.bound.total, "panel lower <= bound at n=" + std::to_string(p.n));
    o.require(p.lemma.value("path", "") == "exact" && p.lemma.value("standardised_residual", 1.0) <= 1e-9,
              "third-moment identity at n=" + std::to_string(p.n));
  }
  o.require(r.d2_rate.has_value(), "panel slope fit");
  if (r.d2_rate) {
    o.require(r.d2_rate->slope >= -1.25 && r.d2_rate->slope <= -0.75, "panel lower slope in [-1.25, -0.75]");
    o.note("panel lower slope " + g(r.d2_rate->slope));
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const double c = std::pow(4.0, 3.0) * (8.0 * 3.0 + 8.0);                      // c_{2,1}
  const double C = std::pow(4.0, 4.0) * (16.0 * 36.0 + 16.0 * 6.0 + 16.0);     // C_{2,1}
  o.require(rel_close(mdep_d1_constant(2, 1), c, 1e-14), "c_{2,1} from the formula");
  o.require(rel_close(mdep_d2_constant(2, 1), C, 1e-14), "C_{2,1} from the formula");
  const auto r1 = run_and_write(config("mruns_d1"));
  const auto r2 = run_and_write(config("mruns_d2"));
  for (const auto& p : r1.points)
    o.require(rel_close(p.bound.total, c / std::sqrt(p.n), 1e-12), "d1 = c/sqrt(n) at n=" + std::to_string(p.n));
  for (const auto& p : r2.points)
    o.require(rel_close(p.bound.total, C / p.n, 1e-12), "d2 = C/n at n=" + std::to_string(p.n));
  check_sandwich(o, r1);
  check_sandwich(o, r2);
  o.require(r1.w1_rate.has_value(), "w1 slope fit");
  if (r1.w1_rate) {
    o.require(r1.w1_rate->slope >= -0.65 && r1.w1_rate->slope <= -0.35, "w1 slope in [-0.65, -0.35]");
    o.note("c_{2,1} = " + g(c) + ", C_{2,1} = " + g(C) + ", w1 slope " + g(r1.w1_rate->slope));
  }
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto cov = covariance_battery(20240601);
  const auto ineq = inequality_battery(20240601);
  o.require(cov.statistics >= 200 && ineq.statistics >= 200, "at least 200 statistics");
  for (const auto* rep : {&cov, &ineq})
    for (const auto& c : rep->checks) {
      o.require(c.passed(), c.name);
      if (c.name == "covariance_identity" || c.name == "third_moment_identity")
        o.require(c.max_residual <= 1e-9, c.name + " residual <= 1e-9");
    }
  for (const auto& c : cov.checks)
    if (c.identity) o.note(c.name + " residual " + g(c.max_residual));
  o.note(std::to_string(cov.statistics) + " statistics");
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto rep = stein_check();
  for (const auto& c : rep.checks) {
    o.require(c.passed(), c.name);
    o.note(c.name + " " + g(c.max_violation));
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  std::vector<std::pair<double, double>> lt;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n : {16, 64, 256}) {
    const auto m = quadratic_form(ProductSpace::iid(DistributionSpec::rademacher(), n), circulant_band(n));
    const auto b = quadform_d1_bound(m, 1.0, 1.0);
    o.require(b.total < prev, "bracket decreases at n=" + std::to_string(n));
    prev = b.total;
    lt.emplace_back(n, b.diagnostics.at("L_tilde"));
  }
  const double s = loglog_slope(lt);
  o.require(s >= -1.2 && s <= -0.8, "L_tilde slope in [-1.2, -0.8]");
  const auto r = run_and_write(config("quadform"));
  o.require(r.calibrated_c.has_value(), "calibration");
  for (std::size_t i = 1; i < r.points.size(); ++i)
    o.require(r.points[i].sandwich, "calibrated sandwich at n=" + std::to_string(r.points[i].n));
  o.note("L_tilde slope " + g(s) + ", C_choice " + g(r.calibrated_c.value_or(0.0)));
  return o;
}

Outcome criterion9() {
  Outcome o;
  for (const char* name :
       {"product_example", "lyapunov", "pareto", "third_moment", "mruns_d1", "mruns_d2", "quadform"}) {
    const auto c = config(name);
    set_thread_count(1);
    const std::string a = results_csv(run_experiment(c));
    set_thread_count(8);
    const std::string b = results_csv(run_experiment(c));
    set_thread_count(0);
    o.require(a == b, std::string(name) + " results.csv differs between 1 and 8 threads");
  }
  if (o.pass) o.note("7 experiments byte-identical at 1 and 8 threads");
  return o;
}

struct Criterion {
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::map<int, Criterion> all = {
      {1, {"product example exact values", 1, criterion1}},
      {2, {"Lyapunov reproduction", 180, criterion2}},
      {3, {"relaxed moments (Pareto 3.2)", 300, criterion3}},
      {4, {"vanishing third moment", 600, criterion4}},
      {5, {"m-runs", 300, criterion5}},
      {6, {"oracle equivalence batteries", 120, criterion6}},
      {7, {"Stein smoothness", 30, criterion7}},
      {8, {"quadratic form", 300, criterion8}},
      {9, {"determinism across thread counts", 1800, criterion9}},
  };
  bool ok = true;
  for (const auto& [id, c] : all) {
    if (only && id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs < c.limit_seconds, "runtime " + g(secs) + " s over limit " + g(c.limit_seconds) + " s");
    std::printf("CRITERION %d %s: %s [%.1f s] %s\n", id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail.c_str());
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
