#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "steingauge/harness/config.hpp"
#include "steingauge/harness/experiment.hpp"
#include "steingauge/harness/inequality_battery.hpp"
#include "steingauge/harness/stein_check.hpp"
#include "steingauge/stein_equation.hpp"

#ifndef STEINGAUGE_GIT_HASH
#define STEINGAUGE_GIT_HASH "unknown"
#endif

using namespace steingauge;

namespace {

int cmd_bounds(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.outputs = out_dir;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [n, r] : compute_bounds(cfg)) {
    auto e = report_to_json(r);
    e["n"] = n;
    j.push_back(std::move(e));
    std::printf("n=%zu %s\n", n, format_double(r.total).c_str());
  }
  std::filesystem::create_directories(cfg.outputs);
  std::ofstream(std::filesystem::path(cfg.outputs) / "bounds.json") << j.dump(2) << "\n";
  return 0;
}

int cmd_rates(const std::string& config_path, const std::string& out_dir, bool plot) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_dir.empty()) cfg.outputs = out_dir;
  if (plot) cfg.plot = true;
  const ExperimentResult r = run_experiment(cfg, STEINGAUGE_GIT_HASH);
  write_outputs(r);
  std::cout << results_csv(r);
  auto slope = [](const std::optional<RateFit>& f) { return f ? format_double(f->slope) : std::string("n/a"); };
  std::printf("slopes: bound %s, w1 %s, d2_lower %s\n", slope(r.bound_rate).c_str(), slope(r.w1_rate).c_str(),
              slope(r.d2_rate).c_str());
  for (const auto& f : r.failures) std::fprintf(stderr, "contract failed: %s\n", f.c_str());
  std::printf("outputs in %s\n", cfg.outputs.c_str());
  return r.passed() ? 0 : 1;
}

int cmd_verify(const std::string& battery, std::uint64_t seed) {
  bool ok = true;
  nlohmann::json j;
  auto run = [&](const std::string& name, const BatteryReport& rep) {
    j[name] = to_json(rep);
    ok = ok && rep.passed();
    for (const auto& c : rep.checks)
      std::printf("%-8s %-32s %s\n", c.passed() ? "ok" : "FAILED", (name + "/" + c.name).c_str(),
                  format_double(c.identity ? c.max_residual : c.max_violation).c_str());
  };
  if (battery == "all" || battery == "inequalities") run("inequalities", inequality_battery(seed));
  if (battery == "all" || battery == "covariance") run("covariance", covariance_battery(seed));
  if (battery == "all" || battery == "stein") run("stein", stein_check());
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : 1;
}

int cmd_stein(const std::string& h, double delta, double L, std::size_t grid, const std::string& out) {
  const auto tf = battery_function(h);
  if (!tf) throw InvalidArgument("unknown test function '" + h + "'");
  const SteinSolution s = solve(*tf, L, grid);
  const HolderResult first = holder_check_first(s, delta, tf->sup_h1);
  const HolderResult second = holder_check_second(s, delta, tf->sup_h1, tf->sup_h2);
  std::ofstream file;
  if (!out.empty()) file.open(out, std::ios::binary);
  std::ostream& os = out.empty() ? std::cout : file;
  os << "x,f,f1,f2,ratio_first,ratio_second\n";
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    os << format_double(s.grid[i]) << ',' << format_double(s.f[i]) << ',' << format_double(s.f1[i]) << ','
       << format_double(s.f2[i]) << ',' << format_double(first.per_point[i]) << ','
       << format_double(second.per_point[i]) << '\n';
  std::fprintf(stderr, "%s delta=%g residual=%s ratio_first=%s ratio_second=%s\n", tf->name.c_str(), delta,
               format_double(s.max_residual).c_str(), format_double(first.max_ratio).c_str(),
               format_double(second.max_ratio).c_str());
  return first.max_ratio <= 1.0 + kHolderSlack && second.max_ratio <= 1.0 + kHolderSlack ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein's-method normal approximation bounds and rate experiments"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0: STEINGAUGE_THREADS or hardware)");

  std::string config, out_dir;
  bool plot = false;
  auto* bounds = app.add_subcommand("bounds", "bound columns for each n of a config, no sampling");
  bounds->add_option("--config", config, "experiment TOML")->required()->check(CLI::ExistingFile);
  bounds->add_option("--out", out_dir, "override the outputs directory");

  auto* rates = app.add_subcommand("rates", "full experiment: bounds, empirical distances, rate fits");
  rates->add_option("--config", config, "experiment TOML")->required()->check(CLI::ExistingFile);
  rates->add_option("--out", out_dir, "override the outputs directory");
  rates->add_flag("--plot", plot, "also write plot.svg");

  std::string battery = "all";
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "property batteries");
  verify->add_option("--battery", battery, "inequalities | covariance | stein | all")
      ->check(CLI::IsMember({"inequalities", "covariance", "stein", "all"}));
  verify->add_option("--seed", seed, "battery seed");

  std::string h = "sin", csv;
  double delta = 0.5, L = 8.0;
  std::size_t grid = 4001;
  auto* stein = app.add_subcommand("stein", "solve the Stein equation and dump the grid as CSV");
  stein->set_help_flag("--help", "print this help and exit");
  stein->add_option("--h", h, "test function: sin, sin1, sin2, cos, tanh, x, ramp1, ramp2, constant");
  stein->add_option("--delta", delta, "Holder exponent in (0,1]");
  stein->add_option("--L", L, "half-width of the grid");
  stein->add_option("--grid", grid, "grid points (odd)");
  stein->add_option("--out", csv, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  set_thread_count(threads);
  try {
    if (*bounds) return cmd_bounds(config, out_dir);
    if (*rates) return cmd_rates(config, out_dir, plot);
    if (*verify) return cmd_verify(battery, seed);
    if (*stein) return cmd_stein(h, delta, L, grid, csv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
