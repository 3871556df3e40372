#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "steingauge/bounds.hpp"
#include "steingauge/distances.hpp"
#include "steingauge/distributions.hpp"
#include "steingauge/error.hpp"
#include "steingauge/profile.hpp"
#include "steingauge/statistics.hpp"
#include "toml.hpp"

namespace steingauge {

// Which bound goes in the bound columns.
//   closed_form  family formula (partial sum, m-dependent, quadratic form)
//   termwise / aggregate  profile-based general bound
enum class BoundChoice { closed_form, termwise, aggregate };

struct StatisticConfig {
  std::string family = "partial_sum";  // partial_sum | product_example | m_runs | quadratic_form | black_box
  std::size_t m = 2;                    // m_runs window
  std::size_t bandwidth = 1;            // quadratic_form circulant band
  std::string matrix_file;              // quadratic_form, replaces the band when set
  std::string plugin = "max";           // black_box
};

struct ExperimentConfig {
  std::string name = "experiment";
  StatisticConfig statistic;
  DistributionSpec component = DistributionSpec::rademacher();
  double delta = 1.0;
  AlphaParams alphas;
  ProfileLevel level = ProfileLevel::d1;
  BoundChoice bound = BoundChoice::closed_form;
  std::vector<std::size_t> n_grid;
  std::size_t samples_per_n = 100'000;
  std::uint64_t seed = 1;
  std::string outputs = "out";
  std::size_t resamples = kBootstrapResamples;
  bool plot = false;
  std::optional<double> c_choice;  // quadratic form; unset with calibrate = true fits it at the first n
  bool calibrate = false;
  std::vector<double> o1_epsilon;
  std::optional<McBudget> budget;

  void validate() const;
};

inline const char* to_string(BoundChoice b) {
  switch (b) {
    case BoundChoice::closed_form: return "closed_form";
    case BoundChoice::termwise: return "termwise";
    case BoundChoice::aggregate: return "aggregate";
  }
  return "?";
}

inline void ExperimentConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidConfig("delta must lie in (0,1], got " + std::to_string(delta));
  try {
    alphas.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidConfig(e.what());
  }
  if (n_grid.empty()) throw InvalidConfig("n_grid is empty");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw InvalidConfig("n_grid must be strictly increasing");
  if (samples_per_n < 1000) throw InvalidConfig("samples_per_n must be at least 1000");
  if (n_grid.front() < 1) throw InvalidConfig("n_grid entries must be positive");
  const auto& f = statistic.family;
  if (f != "partial_sum" && f != "product_example" && f != "m_runs" && f != "quadratic_form" && f != "black_box")
    throw InvalidConfig("unknown statistic family '" + f + "'");
  if (f == "product_example" && !std::holds_alternative<Rademacher>(component.family()))
    throw InvalidConfig("product_example is defined over Rademacher components");
  if (f == "product_example" && n_grid.front() < 2) throw InvalidConfig("product_example needs n >= 2");
  if (f == "m_runs" && statistic.m < 1) throw InvalidConfig("m_runs needs m >= 1");
  if (bound == BoundChoice::closed_form && (f == "product_example" || f == "black_box"))
    throw InvalidConfig(f + " has no closed-form bound; use termwise or aggregate");
  if (f == "quadratic_form" && level == ProfileLevel::d2 && bound == BoundChoice::closed_form)
    throw InvalidConfig("the quadratic-form bound is a d1 bound");
  if (calibrate && f != "quadratic_form") throw InvalidConfig("calibrate applies to quadratic_form only");
  if (c_choice && !(*c_choice > 0.0)) throw InvalidConfig("c_choice must be positive");
  for (double e : o1_epsilon)
    if (!(e > 0.0 && e <= delta)) throw InvalidConfig("o1 epsilon must lie in (0, delta]");
  if (resamples < 2) throw InvalidConfig("resamples must be at least 2");
}

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw InvalidConfig("unsupported TOML value");
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidConfig(std::string("config key '") + key + "' has the wrong type");
  }
}

inline ProfileLevel parse_level(const std::string& s) {
  if (s == "d1") return ProfileLevel::d1;
  if (s == "d2") return ProfileLevel::d2;
  throw InvalidConfig("level must be d1 or d2, got '" + s + "'");
}

inline BoundChoice parse_bound(const std::string& s) {
  if (s == "closed_form") return BoundChoice::closed_form;
  if (s == "termwise") return BoundChoice::termwise;
  if (s == "aggregate") return BoundChoice::aggregate;
  throw InvalidConfig("bound must be closed_form, termwise or aggregate, got '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"name",      "statistic", "component", "delta",   "alphas",
                                                 "level",     "bound",     "n_grid",    "samples_per_n",
                                                 "seed",      "outputs",   "resamples", "plot",    "quadform",
                                                 "o1_epsilon", "budget"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end()) throw InvalidConfig("unknown config key '" + k + "'");
  ExperimentConfig c;
  using detail::get_or;
  c.name = get_or<std::string>(j, "name", c.name);
  if (j.contains("statistic")) {
    const auto& s = j.at("statistic");
    c.statistic.family = get_or<std::string>(s, "family", c.statistic.family);
    c.statistic.m = get_or<std::size_t>(s, "m", c.statistic.m);
    c.statistic.bandwidth = get_or<std::size_t>(s, "bandwidth", c.statistic.bandwidth);
    c.statistic.matrix_file = get_or<std::string>(s, "matrix_file", c.statistic.matrix_file);
    c.statistic.plugin = get_or<std::string>(s, "plugin", c.statistic.plugin);
  }
  if (j.contains("component")) {
    try {
      c.component = distribution_from_json(j.at("component"));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig(std::string("component: ") + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidConfig(std::string("component: ") + e.what());
    }
  }
  c.delta = get_or<double>(j, "delta", c.delta);
  if (j.contains("alphas")) {
    const auto& a = j.at("alphas");
    c.alphas.alpha = get_or<double>(a, "alpha", 0.0);
    c.alphas.beta = get_or<double>(a, "beta", 0.0);
    c.alphas.gamma = get_or<double>(a, "gamma", 0.0);
  }
  c.level = detail::parse_level(get_or<std::string>(j, "level", "d1"));
  c.bound = detail::parse_bound(get_or<std::string>(j, "bound", "closed_form"));
  if (j.contains("n_grid")) {
    for (const auto& v : j.at("n_grid")) {
      if (!v.is_number_integer() || v.get<long long>() < 1) throw InvalidConfig("n_grid entries must be positive integers");
      c.n_grid.push_back(v.get<std::size_t>());
    }
  }
  c.samples_per_n = get_or<std::size_t>(j, "samples_per_n", c.samples_per_n);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.outputs = get_or<std::string>(j, "outputs", c.outputs);
  c.resamples = get_or<std::size_t>(j, "resamples", c.resamples);
  c.plot = get_or<bool>(j, "plot", c.plot);
  if (j.contains("quadform")) {
    const auto& q = j.at("quadform");
    if (q.contains("c_choice")) {
      if (q.at("c_choice").is_string()) {
        if (q.at("c_choice").get<std::string>() != "calibrate")
          throw InvalidConfig("quadform.c_choice must be a number or \"calibrate\"");
        c.calibrate = true;
      } else {
        c.c_choice = get_or<double>(q, "c_choice", 1.0);
      }
    }
  }
  if (j.contains("o1_epsilon"))
    for (const auto& v : j.at("o1_epsilon")) c.o1_epsilon.push_back(v.get<double>());
  if (j.contains("budget")) {
    const auto& b = j.at("budget");
    McBudget mb;
    mb.outer = get_or<std::size_t>(b, "outer", mb.outer);
    mb.inner = get_or<std::size_t>(b, "inner", mb.inner);
    mb.batches = get_or<std::size_t>(b, "batches", mb.batches);
    mb.exact_set_limit = get_or<std::size_t>(b, "exact_set_limit", mb.exact_set_limit);
    mb.drift_check = get_or<bool>(b, "drift_check", mb.drift_check);
    mb.seed = get_or<std::uint64_t>(b, "seed", c.seed);
    c.budget = mb;
  }
  c.validate();
  return c;
}

inline ExperimentConfig config_from_toml_string(std::string_view text, std::string_view source = "config") {
  try {
    const toml::table t = toml::parse(text, source);
    return config_from_json(detail::toml_to_json(t));
  } catch (const toml::parse_error& e) {
    throw InvalidConfig(std::string(source) + ": " + std::string(e.description()));
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  try {
    const toml::table t = toml::parse_file(path);
    return config_from_json(detail::toml_to_json(t));
  } catch (const toml::parse_error& e) {
    throw InvalidConfig(path + ": " + std::string(e.description()));
  }
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["statistic"] = {{"family", c.statistic.family}};
  if (c.statistic.family == "m_runs") j["statistic"]["m"] = c.statistic.m;
  if (c.statistic.family == "quadratic_form") {
    j["statistic"]["bandwidth"] = c.statistic.bandwidth;
    if (!c.statistic.matrix_file.empty()) j["statistic"]["matrix_file"] = c.statistic.matrix_file;
  }
  if (c.statistic.family == "black_box") j["statistic"]["plugin"] = c.statistic.plugin;
  j["component"] = c.component;
  j["delta"] = c.delta;
  j["alphas"] = {{"alpha", c.alphas.alpha}, {"beta", c.alphas.beta}, {"gamma", c.alphas.gamma}};
  j["level"] = c.level == ProfileLevel::d1 ? "d1" : "d2";
  j["bound"] = to_string(c.bound);
  j["n_grid"] = c.n_grid;
  j["samples_per_n"] = c.samples_per_n;
  j["seed"] = c.seed;
  j["outputs"] = c.outputs;
  j["resamples"] = c.resamples;
  j["plot"] = c.plot;
  if (c.calibrate)
    j["quadform"] = {{"c_choice", "calibrate"}};
  else if (c.c_choice)
    j["quadform"] = {{"c_choice", *c.c_choice}};
  if (!c.o1_epsilon.empty()) j["o1_epsilon"] = c.o1_epsilon;
  if (c.budget)
    j["budget"] = {{"outer", c.budget->outer},
                   {"inner", c.budget->inner},
                   {"batches", c.budget->batches},
                   {"exact_set_limit", c.budget->exact_set_limit},
                   {"drift_check", c.budget->drift_check},
                   {"seed", c.budget->seed}};
  return j;
}

}  // namespace steingauge
