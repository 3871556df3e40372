#pragma once

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steingauge/bounds.hpp"
#include "steingauge/distances.hpp"
#include "steingauge/error.hpp"
#include "steingauge/harness/config.hpp"
#include "steingauge/harness/plot.hpp"
#include "steingauge/harness/rate_fit.hpp"
#include "steingauge/profile.hpp"
#include "steingauge/random.hpp"
#include "steingauge/statistics.hpp"

namespace steingauge {

// Sandwich slack and containment slack, in standard errors.
inline constexpr double kSandwichSigmas = 5.0;
inline constexpr double kContainmentSigmas = 3.0;
inline constexpr double kLemmaTolerance = 1e-9;

struct PointResult {
  std::size_t n = 0;
  BoundReport bound;
  DistanceEstimate w1;
  DistanceEstimate d2;
  double mean = 0.0;   // centring used for standardisation
  double sigma = 0.0;  // scale used for standardisation
  std::string standardisation;  // exact | profile | sample
  bool sandwich = true;
  double sandwich_margin = 0.0;  // bound + 5 se - distance
  bool containment = true;
  nlohmann::json lemma;          // d2 runs only
  nlohmann::json o1;             // profile runs with o1_epsilon
  std::string profile_method;    // empty for closed-form bounds
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string git_hash;
  std::vector<PointResult> points;
  std::optional<RateFit> bound_rate, w1_rate, d2_rate;
  std::optional<double> calibrated_c;
  std::vector<std::string> failures;

  [[nodiscard]] bool passed() const { return failures.empty(); }
};

namespace detail {

// Re-raises the active exception with "n = <n>: " prepended, keeping its type.
[[noreturn]] inline void rethrow_with_n(std::size_t n) {
  const std::string tag = "n = " + std::to_string(n) + ": ";
  try {
    throw;
  }
#define SG_REANNOTATE(T) \
  catch (const T& e) { throw T(tag + e.what()); }
  SG_REANNOTATE(InvalidConfig)
  SG_REANNOTATE(DegenerateFit)
  SG_REANNOTATE(PanelViolatesNorms)
  SG_REANNOTATE(EmptySample)
  SG_REANNOTATE(QuadratureFailure)
  SG_REANNOTATE(ThirdMomentNotZero)
  SG_REANNOTATE(MissingProfileEntry)
  SG_REANNOTATE(BudgetMissing)
  SG_REANNOTATE(BadStandardization)
  SG_REANNOTATE(NonzeroDiagonal)
  SG_REANNOTATE(AsymmetricMatrix)
  SG_REANNOTATE(ArityMismatch)
  SG_REANNOTATE(ArityTooSmall)
  SG_REANNOTATE(SupportTooLarge)
  SG_REANNOTATE(InvalidOrder)
  SG_REANNOTATE(MomentDoesNotExist)
  SG_REANNOTATE(InvalidArgument)
  SG_REANNOTATE(Error)
#undef SG_REANNOTATE
  throw;
}

inline StatisticModel build_model(const ExperimentConfig& c, std::size_t n) {
  const auto& s = c.statistic;
  if (s.family == "partial_sum") return partial_sum(ProductSpace::iid(c.component, n));
  if (s.family == "product_example") return product_example(n);
  if (s.family == "m_runs") return m_runs(ProductSpace::iid(c.component, n + s.m - 1), s.m);
  if (s.family == "quadratic_form") {
    if (!s.matrix_file.empty()) {
      const DenseMatrix A = load_matrix_csv(s.matrix_file);
      if (A.n != n) throw ArityMismatch("matrix file is " + std::to_string(A.n) + "x" + std::to_string(A.n));
      return quadratic_form(ProductSpace::iid(c.component, n), A);
    }
    return quadratic_form(ProductSpace::iid(c.component, n), circulant_band(n, s.bandwidth));
  }
  if (s.family == "black_box") return black_box_plugin(ProductSpace::iid(c.component, n), s.plugin);
  throw InvalidConfig("unknown statistic family '" + s.family + "'");
}

inline void scale_report(BoundReport& r, double factor) {
  for (auto& [k, v] : r.terms) v *= factor;
  for (auto& [k, v] : r.constants)
    if (k == "C_choice") v *= factor;
  r.finish();
}

inline std::pair<BoundReport, std::optional<DiffProfile>> bound_at(const ExperimentConfig& cfg,
                                                                   const StatisticModel& model, std::uint64_t seed) {
  if (cfg.bound == BoundChoice::closed_form) {
    const auto& f = cfg.statistic.family;
    if (f == "partial_sum")
      return {cfg.level == ProfileLevel::d1 ? partial_sum_d1_bound(model.space, cfg.delta)
                                            : partial_sum_d2_bound(model.space, cfg.delta),
              std::nullopt};
    if (f == "m_runs") return {m_dep_bounds(model, cfg.delta, cfg.level, derive_seed(seed, {stream_tag::kKernelMoments})), std::nullopt};
    return {quadform_d1_bound(model, cfg.delta, cfg.c_choice.value_or(1.0)), std::nullopt};
  }
  std::optional<McBudget> budget = cfg.budget;
  if (budget) budget->seed = derive_seed(budget->seed, {stream_tag::kProfileOuter, seed});
  DiffProfile prof = profile(model, cfg.alphas, cfg.delta, cfg.level, budget);
  const BoundForm form = cfg.bound == BoundChoice::termwise ? BoundForm::termwise : BoundForm::aggregate;
  BoundReport r = cfg.level == ProfileLevel::d1 ? d1_bound(prof, form) : d2_bound(prof, form);
  return {std::move(r), std::move(prof)};
}

}  // namespace detail

// Bound columns only, no sampling.
inline std::vector<std::pair<std::size_t, BoundReport>> compute_bounds(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::size_t, BoundReport>> out;
  for (std::size_t n : cfg.n_grid) {
    try {
      const StatisticModel model = detail::build_model(cfg, n);
      out.emplace_back(n, detail::bound_at(cfg, model, derive_seed(cfg.seed, {stream_tag::kHarness, n})).first);
    } catch (...) {
      detail::rethrow_with_n(n);
    }
  }
  return out;
}

// Runs every n of the grid in order. Randomness for grid point i comes from
// derive_seed(seed, {kHarness, n}), so adding or removing grid points leaves
// the others unchanged.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& git_hash = "unknown") {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  res.git_hash = git_hash;
  const auto panel = default_panel();
  for (std::size_t n : cfg.n_grid) {
    PointResult pt;
    pt.n = n;
    try {
      const StatisticModel model = detail::build_model(cfg, n);
      const std::uint64_t seed = derive_seed(cfg.seed, {stream_tag::kHarness, n});
      auto [bound, prof] = detail::bound_at(cfg, model, seed);
      pt.bound = std::move(bound);
      if (prof) {
        pt.profile_method = prof->method;
        for (double eps : cfg.o1_epsilon) pt.o1[format_double(eps)] = o1_expression(*prof, eps);
      }

      // Standardisation, exact where the model knows its moments.
      if (model.mean && model.variance) {
        pt.mean = *model.mean;
        pt.sigma = std::sqrt(*model.variance);
        pt.standardisation = "exact";
      } else if (prof) {
        pt.mean = prof->mean.value;
        pt.sigma = prof->sigma();
        pt.standardisation = "profile";
      }
      std::vector<double> z = draw_statistic(model, derive_seed(seed, {stream_tag::kSampling}), cfg.samples_per_n);
      if (pt.standardisation.empty()) {
        KahanSum s, s2;
        for (double v : z) s += v;
        pt.mean = s.value() / static_cast<double>(z.size());
        for (double v : z) s2 += (v - pt.mean) * (v - pt.mean);
        pt.sigma = std::sqrt(s2.value() / static_cast<double>(z.size() - 1));
        pt.standardisation = "sample";
      }
      if (!(pt.sigma > 0.0)) throw BadStandardization("statistic has zero variance");
      for (double& v : z) v = (v - pt.mean) / pt.sigma;
      pt.w1 = w1_to_normal(z, derive_seed(seed, {stream_tag::kBootstrap, 1}), cfg.resamples);
      pt.d2 = d2_lower(z, panel, derive_seed(seed, {stream_tag::kBootstrap, 2}), cfg.resamples);

      if (cfg.level == ProfileLevel::d2) {
        std::optional<ThirdMomentCheck> tm;
        std::string path;
        if (prof && prof->third_moment && prof->z_alpha_beta_mean) {
          tm = third_moment_check(*prof);
          path = prof->mode == ProfileMode::exact ? "exact" : "monte_carlo";
        } else {
          try {
            tm = third_moment_check(model, cfg.alphas, cfg.budget);
            path = tm->third_moment.se == 0.0 ? "exact" : "monte_carlo";
          } catch (const BudgetMissing&) {
            path = "unavailable";
          }
        }
        pt.lemma = {{"path", path}};
        if (tm) {
          const double s3 = pt.sigma * pt.sigma * pt.sigma;
          pt.lemma["third_moment"] = tm->third_moment.value;
          pt.lemma["third_moment_se"] = tm->third_moment.se;
          pt.lemma["twice_z_alpha_beta"] = tm->twice_z_alpha_beta.value;
          pt.lemma["twice_z_alpha_beta_se"] = tm->twice_z_alpha_beta.se;
          pt.lemma["residual"] = tm->residual;
          pt.lemma["standardised_residual"] = tm->residual / s3;
          if (path == "exact" && !(tm->residual / s3 <= kLemmaTolerance))
            res.failures.push_back("n = " + std::to_string(n) + ": third-moment identity residual " +
                                   std::to_string(tm->residual / s3));
        }
      }
    } catch (...) {
      detail::rethrow_with_n(n);
    }
    res.points.push_back(std::move(pt));
  }

  if (cfg.calibrate && !res.points.empty()) {
    const auto& p0 = res.points.front();
    const double c = (p0.w1.value + kSandwichSigmas * p0.w1.resample_std_error) / p0.bound.total;
    res.calibrated_c = c;
    for (auto& p : res.points) detail::scale_report(p.bound, c);
  }

  for (auto& p : res.points) {
    const DistanceEstimate& est = cfg.level == ProfileLevel::d1 ? p.w1 : p.d2;
    p.sandwich_margin = p.bound.total + kSandwichSigmas * est.resample_std_error - est.value;
    p.sandwich = p.sandwich_margin >= 0.0;
    if (!p.sandwich)
      res.failures.push_back("n = " + std::to_string(p.n) + ": " +
                             (cfg.level == ProfileLevel::d1 ? "w1 " : "d2 panel lower ") + format_double(est.value) +
                             " exceeds bound " + format_double(p.bound.total) + " + 5 se");
    const double se = std::hypot(p.w1.resample_std_error, p.d2.resample_std_error);
    p.containment = p.d2.value <= p.w1.value + kContainmentSigmas * se;
    if (!p.containment) res.failures.push_back("n = " + std::to_string(p.n) + ": d2 panel lower exceeds w1 + 3 se");
  }

  if (res.points.size() >= 4) {
    auto series = [&](auto get) {
      std::vector<std::pair<double, double>> v;
      for (const auto& p : res.points) v.emplace_back(static_cast<double>(p.n), get(p));
      return v;
    };
    auto try_fit = [](std::vector<std::pair<double, double>> v) -> std::optional<RateFit> {
      try {
        return fit_rate(std::move(v));
      } catch (const DegenerateFit&) {
        return std::nullopt;
      }
    };
    res.bound_rate = try_fit(series([](const PointResult& p) { return p.bound.total; }));
    res.w1_rate = try_fit(series([](const PointResult& p) { return p.w1.value; }));
    res.d2_rate = try_fit(series([](const PointResult& p) { return p.d2.value; }));
  }
  return res;
}

inline std::string results_csv(const ExperimentResult& r) {
  std::string out = "n,";
  out += r.points.empty() ? std::string("bound_total") : csv_header(r.points.front().bound);
  out += ",w1,w1_se,d2_lower,d2_se\n";
  for (const auto& p : r.points) {
    out += std::to_string(p.n) + "," + csv_row(p.bound) + "," + format_double(p.w1.value) + "," +
           format_double(p.w1.resample_std_error) + "," + format_double(p.d2.value) + "," +
           format_double(p.d2.resample_std_error) + "\n";
  }
  return out;
}

inline nlohmann::json manifest_json(const ExperimentResult& r) {
  return {{"config", to_json(r.config)}, {"git_hash", r.git_hash}, {"seed", r.config.seed},
          {"seed_scheme", "grid point n uses derive_seed(seed, {8, n}); sampling {1}, w1 bootstrap {2, 1}, "
                          "d2 bootstrap {2, 2}"}};
}

inline nlohmann::json rates_json(const ExperimentResult& r) {
  auto f = [](const std::optional<RateFit>& x) { return x ? to_json(*x) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"bound", f(r.bound_rate)}, {"w1", f(r.w1_rate)}, {"d2_lower", f(r.d2_rate)}};
  if (r.points.size() < 4) j["note"] = "rate fits need at least 4 grid points";
  return j;
}

inline nlohmann::json reports_json(const ExperimentResult& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    nlohmann::json j;
    j["n"] = p.n;
    j["bound"] = report_to_json(p.bound);
    j["w1"] = {{"value", p.w1.value}, {"se", p.w1.resample_std_error}, {"sample_size", p.w1.sample_size}};
    j["d2_lower"] = {{"value", p.d2.value}, {"se", p.d2.resample_std_error}, {"sample_size", p.d2.sample_size}};
    j["standardisation"] = {{"method", p.standardisation}, {"mean", p.mean}, {"sigma", p.sigma}};
    j["sandwich"] = {{"holds", p.sandwich}, {"margin", p.sandwich_margin}};
    j["containment"] = p.containment;
    if (!p.lemma.is_null()) j["third_moment_identity"] = p.lemma;
    if (!p.o1.is_null()) j["o1_expression"] = p.o1;
    if (!p.profile_method.empty()) j["profile_method"] = p.profile_method;
    pts.push_back(std::move(j));
  }
  nlohmann::json out = {{"points", pts}, {"passed", r.passed()}, {"failures", r.failures}};
  if (r.calibrated_c) out["calibrated_c_choice"] = *r.calibrated_c;
  return out;
}

inline std::string plot_svg(const ExperimentResult& r) {
  PlotSeries b{"bound", "#c0392b", {}}, w{"w1", "#2471a3", {}}, d{"d2 panel", "#229954", {}};
  for (const auto& p : r.points) {
    b.points.emplace_back(static_cast<double>(p.n), p.bound.total);
    w.points.emplace_back(static_cast<double>(p.n), p.w1.value);
    d.points.emplace_back(static_cast<double>(p.n), p.d2.value);
  }
  return loglog_svg(r.config.name, {b, w, d});
}

// Writes manifest.json, results.csv, rates.json, reports.json and, when
// requested, plot.svg into the configured outputs directory.
inline void write_outputs(const ExperimentResult& r, std::filesystem::path dir = {}) {
  if (dir.empty()) dir = r.config.outputs;
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw InvalidConfig("cannot write " + (dir / name).string());
    out << text;
  };
  put("manifest.json", manifest_json(r).dump(2) + "\n");
  put("results.csv", results_csv(r));
  put("rates.json", rates_json(r).dump(2) + "\n");
  put("reports.json", reports_json(r).dump(2) + "\n");
  if (r.config.plot) put("plot.svg", plot_svg(r));
}

}  // namespace steingauge
