#pragma once

// JSON experiment configs. A file is either a bare generator spec ({"kind": ...}) or an
// experiment object with the sections below. Unknown keys are rejected.
//
//   {
//     "generator":  {"kind": "mm1", "lambda": 1, "mu": 0.5},
//     "scale":      {"n_max": 2000, "extension": "linear" | "exponential"},
//     "checks":     {"p": [1.5, 2], "beta": 2, "M": 10, "delta_grid": [0.5, 0.25], "k_max": 2000},
//     "simulation": {"rules": ["fixed:10", "min:10,5"], "paths": 10000, "seed": 1,
//                    "state_cap": 1000000, "event_cap": 100000000},
//     "outputs":    {"dir": "out"}
//   }

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "chain_model.hpp"
#include "errors.hpp"
#include "scale_function.hpp"
#include "simulator.hpp"

namespace skipfree {

struct ScaleOptions {
  state_t n_max = 2000;
  Extension extension = Extension::PiecewiseLinear;
};

struct CheckOptions {
  std::vector<double> p{1.0, 2.0};
  double beta = 2.0;
  state_t M = 10;
  std::vector<double> delta_grid{0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  state_t k_max = 2000;
};

struct SimulationOptions {
  std::vector<StoppingRule> rules;
  std::size_t paths = 10000;
  std::uint64_t seed = 1;
  SimulationCaps caps = SimulationCaps::from_environment();
};

struct ExperimentConfig {
  nlohmann::json generator_spec;
  ScaleOptions scale;
  CheckOptions checks;
  SimulationOptions simulation;
  std::string output_dir = ".";

  Generator generator() const;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline double positive_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  const double x = v.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(what + ": must be positive and finite");
  return x;
}

inline double nonnegative_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  const double x = v.get<double>();
  if (!(x >= 0.0) || !std::isfinite(x)) throw ConfigError(what + ": must be >= 0 and finite");
  return x;
}

inline std::int64_t positive_integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x <= 0) throw ConfigError(what + ": must be positive");
  return x;
}

inline std::vector<double> positive_list(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a non-empty array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(positive_number(x, what));
  return out;
}

/// A rate given either as a number (constant) or as an array indexed by state.
inline RateSequence rate_from_json(const json& v, const std::string& what, bool first_ignored) {
  if (v.is_number()) return constant_rate(positive_number(v, what));
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a number or a non-empty array");
  std::vector<double> values;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (first_ignored && i == 0) {
      values.push_back(nonnegative_number(v[i], what));
      continue;
    }
    values.push_back(positive_number(v[i], what));
  }
  return tabulated_rate(std::move(values));
}

}  // namespace detail

inline Generator generator_from_json(const nlohmann::json& spec) {
  using detail::positive_number;
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw ConfigError("generator: missing string field 'kind'");
  const auto kind = spec["kind"].get<std::string>();
  if (kind == "mm1" || kind == "catastrophe") {
    detail::reject_unknown(spec, {"kind", "lambda", "mu"}, "generator");
    if (!spec.contains("lambda") || !spec.contains("mu")) throw ConfigError(kind + ": needs 'lambda' and 'mu'");
    const double lambda = positive_number(spec["lambda"], kind + ".lambda");
    const double mu = positive_number(spec["mu"], kind + ".mu");
    return kind == "mm1" ? mm1(lambda, mu) : catastrophe(lambda, mu);
  }
  if (kind == "birth_death") {
    detail::reject_unknown(spec, {"kind", "lambda", "mu"}, "generator");
    if (!spec.contains("lambda") || !spec.contains("mu")) throw ConfigError("birth_death: needs 'lambda' and 'mu'");
    return birth_death(detail::rate_from_json(spec["lambda"], "birth_death.lambda", false),
                       detail::rate_from_json(spec["mu"], "birth_death.mu", true));
  }
  if (kind == "explicit") {
    detail::reject_unknown(spec, {"kind", "rates", "state_cap"}, "generator");
    if (!spec.contains("rates") || !spec["rates"].is_array()) throw ConfigError("explicit: needs array 'rates'");
    std::vector<std::tuple<state_t, state_t, double>> rates;
    for (const auto& r : spec["rates"]) {
      if (!r.is_array() || r.size() != 3 || !r[0].is_number_integer() || !r[1].is_number_integer() || !r[2].is_number())
        throw ConfigError("explicit: each rate must be [from, to, rate]");
      rates.emplace_back(r[0].get<state_t>(), r[1].get<state_t>(), r[2].get<double>());
    }
    std::optional<state_t> cap;
    if (spec.contains("state_cap")) cap = detail::positive_integer(spec["state_cap"], "explicit.state_cap");
    try {
      return explicit_generator(rates, cap);
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("explicit: ") + e.what());
    }
  }
  throw ConfigError("generator: unknown kind '" + kind + "'");
}

inline Generator ExperimentConfig::generator() const { return generator_from_json(generator_spec); }

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using namespace detail;
  ExperimentConfig cfg;
  if (root.is_object() && root.contains("kind")) {
    generator_from_json(root);
    cfg.generator_spec = root;
    return cfg;
  }
  reject_unknown(root, {"generator", "scale", "checks", "simulation", "outputs"}, "config");
  if (!root.contains("generator")) throw ConfigError("config: missing 'generator'");
  generator_from_json(root["generator"]);
  cfg.generator_spec = root["generator"];

  if (root.contains("scale")) {
    const auto& s = root["scale"];
    reject_unknown(s, {"n_max", "extension"}, "scale");
    if (s.contains("n_max")) cfg.scale.n_max = positive_integer(s["n_max"], "scale.n_max");
    if (s.contains("extension")) {
      const auto e = s["extension"].is_string() ? s["extension"].get<std::string>() : std::string();
      if (e == "linear") cfg.scale.extension = Extension::PiecewiseLinear;
      else if (e == "exponential") cfg.scale.extension = Extension::PiecewiseExponential;
      else throw ConfigError("scale.extension: expected 'linear' or 'exponential'");
    }
  }
  if (root.contains("checks")) {
    const auto& c = root["checks"];
    reject_unknown(c, {"p", "beta", "M", "delta_grid", "k_max"}, "checks");
    if (c.contains("p")) cfg.checks.p = positive_list(c["p"], "checks.p");
    if (c.contains("beta")) {
      cfg.checks.beta = positive_number(c["beta"], "checks.beta");
      if (!(cfg.checks.beta > 1.0)) throw ConfigError("checks.beta: must be > 1");
    }
    if (c.contains("M")) cfg.checks.M = positive_integer(c["M"], "checks.M");
    if (c.contains("delta_grid")) {
      cfg.checks.delta_grid = positive_list(c["delta_grid"], "checks.delta_grid");
      for (std::size_t i = 1; i < cfg.checks.delta_grid.size(); ++i)
        if (!(cfg.checks.delta_grid[i] < cfg.checks.delta_grid[i - 1]))
          throw ConfigError("checks.delta_grid: must be strictly decreasing");
    }
    if (c.contains("k_max")) cfg.checks.k_max = positive_integer(c["k_max"], "checks.k_max");
  }
  if (root.contains("simulation")) {
    const auto& s = root["simulation"];
    reject_unknown(s, {"rules", "paths", "seed", "state_cap", "event_cap"}, "simulation");
    if (s.contains("rules")) {
      if (!s["rules"].is_array()) throw ConfigError("simulation.rules: expected an array of strings");
      for (const auto& r : s["rules"]) {
        if (!r.is_string()) throw ConfigError("simulation.rules: expected strings");
        try {
          cfg.simulation.rules.push_back(StoppingRule::parse(r.get<std::string>()));
        } catch (const Error& e) {
          throw ConfigError(std::string("simulation.rules: ") + e.what());
        }
      }
    }
    if (s.contains("paths")) cfg.simulation.paths = static_cast<std::size_t>(positive_integer(s["paths"], "simulation.paths"));
    if (s.contains("seed")) {
      if (!s["seed"].is_number_unsigned()) throw ConfigError("simulation.seed: expected a non-negative integer");
      cfg.simulation.seed = s["seed"].get<std::uint64_t>();
    }
    if (s.contains("state_cap")) cfg.simulation.caps.state_cap = positive_integer(s["state_cap"], "simulation.state_cap");
    if (s.contains("event_cap"))
      cfg.simulation.caps.event_cap = static_cast<std::uint64_t>(positive_integer(s["event_cap"], "simulation.event_cap"));
  }
  if (root.contains("outputs")) {
    const auto& o = root["outputs"];
    reject_unknown(o, {"dir"}, "outputs");
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("outputs.dir: expected a string");
      cfg.output_dir = o["dir"].get<std::string>();
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  return config_from_json(root);
}

}  // namespace skipfree
