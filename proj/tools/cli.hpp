#pragma once

// Command-line front end. Exit codes: 0 success, 1 failed assertion, 2 bad input or
// configuration (including argument parse errors).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <skipfree/skipfree.hpp>

namespace skipfree::cli {

using ojson = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitInput = 2;

/// Writes to a file, or to stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

inline ModerateFunction parse_function(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("function '" + text + "': bad number '" + item + "'");
      }
    }
  }
  if (kind == "power" && args.size() == 1) return ModerateFunction::power(args[0]);
  if (kind == "power_log" && args.size() == 2) return ModerateFunction::power_log(args[0], args[1]);
  throw ConfigError("function '" + text + "': expected power:P or power_log:P,Q");
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
  return grid;
}

/// Prints the JSON summary and the one-line verdict; returns the exit code.
inline int finish(const std::string& name, bool pass, ojson details, const std::string& summary_path) {
  ojson summary;
  summary["pass"] = pass;
  summary["details"] = std::move(details);
  Output out(summary_path);
  out.stream() << summary.dump(2) << '\n';
  std::cout << (pass ? "PASS " : "FAIL ") << name << '\n';
  return pass ? kExitOk : kExitAssertion;
}

inline ojson report_json(const EstimatorReport& r) {
  return ojson{{"mean", r.mean}, {"std_error", r.std_error}, {"ci95", {r.ci95.first, r.ci95.second}},
               {"n_samples", r.n_samples}, {"seed", r.seed}};
}

struct Common {
  std::string config;
  std::string out = "-";
  std::string summary = "-";
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned threads = 0;
};

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Scale functions, condition checks and maximal-inequality experiments for upward skip-free chains"};
  app.require_subcommand(1);
  Common c;

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config", c.config, "JSON generator or experiment config");
    if (required) opt->required();
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", c.out, "CSV output path ('-' for stdout)"); };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "master seed")->each([&](const std::string&) { c.seed_given = true; });
    sub->add_option("--threads", c.threads, "worker threads (0 = all cores)");
  };
  auto add_summary = [&](CLI::App* sub) { sub->add_option("--summary", c.summary, "JSON summary path ('-' for stdout)"); };

  // scale
  auto* scale = app.add_subcommand("scale", "tabulate m_n, f_n or evaluate g");
  std::optional<state_t> n_max;
  std::vector<double> invert;
  std::string extension;
  add_config(scale, true);
  add_out(scale);
  scale->add_option("--n-max", n_max, "table size N");
  scale->add_option("--invert", invert, "times t at which to evaluate g(t)")->delimiter(',');
  scale->add_option("--extension", extension, "linear|exponential")->check(CLI::IsMember({"linear", "exponential"}));

  // check
  auto* check = app.add_subcommand("check", "sufficient-condition checkers");
  check->require_subcommand(1);
  auto* peskir = check->add_subcommand("peskir", "Peskir summability condition");
  std::vector<double> p_list;
  std::optional<state_t> k_max;
  std::string trace_out;
  add_config(peskir, true);
  add_out(peskir);
  peskir->add_option("--p", p_list, "exponents")->delimiter(',');
  peskir->add_option("--k-max", k_max, "truncation K");
  peskir->add_option("--trace-out", trace_out, "per-n trace CSV (p, n, S_n, corrected)");

  auto* dilation = check->add_subcommand("dilation", "vanishing-ratio condition");
  std::optional<double> beta;
  std::optional<state_t> M;
  std::vector<double> delta_grid;
  double tol = 0.05;
  add_config(dilation, true);
  add_out(dilation);
  dilation->add_option("--beta", beta, "beta > 1");
  dilation->add_option("--m", M, "smallest k");
  dilation->add_option("--delta-grid", delta_grid, "decreasing delta values")->delimiter(',');
  dilation->add_option("--k-max", k_max, "largest k");
  dilation->add_option("--tol", tol, "tolerance for the smallest delta");

  auto* moderate = check->add_subcommand("moderate", "moderate-growth evidence for F");
  std::string function_text = "power:2";
  double decades = 8;
  moderate->add_option("--function", function_text, "power:P or power_log:P,Q");
  moderate->add_option("--beta", beta, "beta > 1");
  moderate->add_option("--decades", decades, "grid span in decades (>= 6)");
  add_out(moderate);

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate stopped paths from 0");
  std::string rule_text;
  std::optional<std::size_t> paths;
  add_config(simulate_cmd, true);
  add_out(simulate_cmd);
  add_seed(simulate_cmd);
  simulate_cmd->add_option("--rule", rule_text, "fixed:T | hit:L | min:T,L")->required();
  simulate_cmd->add_option("--paths", paths, "number of paths");

  // couple
  auto* couple = app.add_subcommand("couple", "monotone couplings from m and 0");
  std::string family = "bd";
  double lambda = 1.0, mu = 1.0, horizon = 10.0;
  state_t m = 1;
  std::size_t couple_paths = 1000;
  add_out(couple);
  add_seed(couple);
  add_summary(couple);
  couple->add_option("--family", family, "bd|catastrophe")->check(CLI::IsMember({"bd", "catastrophe"}));
  couple->add_option("--lambda", lambda, "birth rate");
  couple->add_option("--mu", mu, "death or catastrophe rate");
  couple->add_option("--m", m, "start of the upper chain");
  couple->add_option("--t", horizon, "time horizon");
  couple->add_option("--paths", couple_paths, "number of coupled paths");

  // lab
  auto* lab = app.add_subcommand("lab", "inequality experiments");
  lab->require_subcommand(1);
  std::vector<double> t_grid;
  std::vector<state_t> l_grid;
  std::vector<std::string> functions;

  auto* sweep = lab->add_subcommand("ratio-sweep", "E F(X*+1) / E F(g+1) over a rule grid");
  add_config(sweep, true);
  add_out(sweep);
  add_seed(sweep);
  add_summary(sweep);
  sweep->add_option("--function", functions, "F, repeatable (default power:1 and power:2)");
  sweep->add_option("--t-grid", t_grid, "time caps")->delimiter(',');
  sweep->add_option("--l-grid", l_grid, "levels, 0 for none")->delimiter(',');
  sweep->add_option("--paths", paths, "paths per rule");
  double max_band = 100.0, max_half_ratio = 2.0;
  sweep->add_option("--max-band", max_band, "largest admissible max/min ratio");
  sweep->add_option("--max-half-ratio", max_half_ratio, "largest admissible half-grid band ratio");

  auto* martingale = lab->add_subcommand("martingale", "E f(X_tau) = E tau on a (t, L) grid");
  add_config(martingale, true);
  add_out(martingale);
  add_seed(martingale);
  add_summary(martingale);
  martingale->add_option("--t-grid", t_grid, "time caps")->delimiter(',');
  martingale->add_option("--l-grid", l_grid, "levels")->delimiter(',');
  martingale->add_option("--paths", paths, "paths per cell");

  auto* good_lambda = lab->add_subcommand("good-lambda", "empirical good-lambda ratios");
  std::vector<state_t> k_grid;
  add_config(good_lambda, true);
  add_out(good_lambda);
  add_seed(good_lambda);
  add_summary(good_lambda);
  good_lambda->add_option("--beta", beta, "beta > 1");
  good_lambda->add_option("--delta-grid", delta_grid, "delta values")->delimiter(',');
  good_lambda->add_option("--k-grid", k_grid, "levels k")->delimiter(',');
  good_lambda->add_option("--rule", rule_text, "stopping rule with a time cap");
  good_lambda->add_option("--paths", paths, "number of paths");

  auto* tail_identity = lab->add_subcommand("tail-identity", "exact integration identity on random instances");
  std::size_t trials = 100, max_support = 200;
  double identity_tol = 1e-12;
  add_out(tail_identity);
  add_seed(tail_identity);
  add_summary(tail_identity);
  tail_identity->add_option("--trials", trials, "number of random instances");
  tail_identity->add_option("--max-support", max_support, "largest support size");
  tail_identity->add_option("--tol", identity_tol, "relative tolerance");

  auto* phase = lab->add_subcommand("phase-transition", "growth law of E X*_t for mm1 and catastrophe");
  std::vector<double> alphas{0.5, 1.0, 2.0};
  double t_min = 1.0, t_max = 1000.0, coef_tol = 0.15;
  std::size_t points = 31;
  add_out(phase);
  add_seed(phase);
  add_summary(phase);
  phase->add_option("--alphas", alphas, "mu / lambda values")->delimiter(',');
  phase->add_option("--lambda", lambda, "birth rate");
  phase->add_option("--t-min", t_min, "smallest time");
  phase->add_option("--t-max", t_max, "largest time");
  phase->add_option("--points", points, "log-spaced grid points");
  phase->add_option("--paths", paths, "paths per chain");
  phase->add_option("--coef-tol", coef_tol, "relative tolerance on the leading coefficient");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a generator for skip-free legality");
  state_t up_to = 1000;
  add_config(validate_cmd, true);
  add_summary(validate_cmd);
  validate_cmd->add_option("--up-to", up_to, "highest state to inspect");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    std::optional<ExperimentConfig> cfg;
    if (!c.config.empty()) cfg = load_config(c.config);
    const auto seed = [&] { return c.seed_given || !cfg ? c.seed : cfg->simulation.seed; };
    const auto n_paths = [&](std::size_t fallback) {
      return paths ? *paths : cfg && cfg->simulation.paths ? cfg->simulation.paths : fallback;
    };
    const auto caps = [&] { return cfg ? cfg->simulation.caps : SimulationCaps::from_environment(); };
    const auto scale_table = [&](state_t n) {
      auto ext = cfg->scale.extension;
      if (extension == "exponential") ext = Extension::PiecewiseExponential;
      if (extension == "linear") ext = Extension::PiecewiseLinear;
      return compute_scale(cfg->generator(), n, ext);
    };

    if (*scale) {
      const auto s = scale_table(n_max.value_or(cfg->scale.n_max));
      Output out(c.out);
      CsvWriter csv(out.stream());
      if (!invert.empty()) {
        csv.row("t", "g", "floor_g", "ceil_g");
        for (double t : invert) {
          const auto [lo, hi] = s.floor_ceil_g(t);
          csv.row(t, s.g_eval(t), lo, hi);
        }
      } else {
        csv.row("n", "m_n", "f_n");
        for (state_t n = 0; n <= s.n_max(); ++n)
          csv.row(n, n < s.n_max() ? s.m()[static_cast<std::size_t>(n)] : std::nan(""), s.f()[static_cast<std::size_t>(n)]);
      }
      if (s.overflowed()) std::cerr << "note: f overflows double beyond n = " << s.finite_n_max() << '\n';
      return kExitOk;
    }

    if (*peskir) {
      const state_t K = k_max.value_or(cfg->checks.k_max);
      const auto ps = p_list.empty() ? cfg->checks.p : p_list;
      const auto s = scale_table(std::max(K, cfg->scale.n_max));
      Output out(c.out);
      CsvWriter csv(out.stream());
      std::unique_ptr<Output> trace;
      std::unique_ptr<CsvWriter> trace_csv;
      if (!trace_out.empty()) {
        trace = std::make_unique<Output>(trace_out);
        trace_csv = std::make_unique<CsvWriter>(trace->stream());
        trace_csv->row("p", "n", "S_n", "S_n_corrected");
      }
      csv.row("p", "trend", "sup_value", "tail_exponent", "tail_bound_estimate", "truncation");
      for (double p : ps) {
        const auto v = peskir_check(s, p, K);
        csv.row(p, to_string(v.trend), v.sup_value, v.tail_exponent, v.tail_bound_estimate, v.truncation);
        if (trace_csv)
          for (std::size_t i = 0; i < v.per_n_trace.size(); ++i)
            trace_csv->row(p, v.per_n_trace[i].first, v.per_n_trace[i].second, v.corrected_trace[i]);
        if (c.out != "-") std::cout << "p=" << format_double(p) << " trend=" << to_string(v.trend) << '\n';
      }
      return kExitOk;
    }

    if (*dilation) {
      const state_t K = k_max.value_or(cfg->checks.k_max);
      const auto deltas = delta_grid.empty() ? cfg->checks.delta_grid : delta_grid;
      const double b = beta.value_or(cfg->checks.beta);
      const auto needed = static_cast<state_t>(std::ceil(b * static_cast<double>(K)));
      const auto s = scale_table(std::max(needed, cfg->scale.n_max));
      const auto v = dilation_check(s, b, M.value_or(cfg->checks.M), deltas, K, tol);
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("delta", "sup_ratio", "argmax_k");
      for (std::size_t i = 0; i < v.delta_grid.size(); ++i) csv.row(v.delta_grid[i], v.sup_curve[i], v.argmax_k[i]);
      std::cerr << "condition " << (v.passes ? "holds" : "not confirmed") << " on the grid\n";
      return kExitOk;
    }

    if (*moderate) {
      const auto F = parse_function(function_text);
      if (decades < 6) throw ConfigError("--decades must be >= 6");
      const double b = beta.value_or(2.0);
      const auto grid = log_grid(1e-3, 1e-3 * std::pow(10.0, decades), static_cast<std::size_t>(20 * decades) + 1);
      const auto e = moderate_check(F, b, grid);
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("function", "beta", "sup_ratio", "is_moderate_evidence", "bound_gap");
      csv.row(F.name(), b, e.sup_ratio, e.is_moderate_evidence, e.bound_gap);
      return kExitOk;
    }

    if (*simulate_cmd) {
      const auto rule = StoppingRule::parse(rule_text);
      const auto result = simulate_paths(cfg->generator(), 0, rule, n_paths(1000), seed(), c.threads, caps());
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("path_index", "tau", "x_tau", "x_star", "n_jumps");
      for (std::size_t i = 0; i < result.size(); ++i)
        csv.row(i, result[i].tau, result[i].x_at_tau, result[i].x_star, result[i].n_jumps);
      return kExitOk;
    }

    if (*couple) {
      const auto sim_caps = caps();
      const auto outcomes = parallel_map(couple_paths, c.threads, [&](std::size_t i) {
        SplitMix64 rng = SplitMix64::for_stream(c.seed, i);
        return family == "bd" ? simulate_coupled_bd(constant_rate(lambda), constant_rate(mu), m, horizon, rng, sim_caps)
                              : simulate_coupled_catastrophe(constant_rate(lambda), mu, m, horizon, rng, sim_caps);
      });
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("path_index", "y_star", "z_star", "y_at_t", "z_at_t", "min_gap", "max_distance_increase", "n_jumps");
      std::size_t violations = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        csv.row(i, o.y_star, o.z_star, o.y_at_t, o.z_at_t, o.min_gap, o.max_distance_increase, o.n_jumps);
        if (o.max_distance_increase != 0 || o.min_gap < 0) ++violations;
      }
      return finish("couple", violations == 0,
                    ojson{{"family", family}, {"m", m}, {"t", horizon}, {"paths", couple_paths}, {"violations", violations}},
                    c.summary);
    }

    if (*sweep) {
      std::vector<ModerateFunction> Fs;
      for (const auto& f : functions) Fs.push_back(parse_function(f));
      if (Fs.empty()) Fs = {ModerateFunction::power(1.0), ModerateFunction::power(2.0)};
      std::vector<StoppingRule> rules;
      if (!t_grid.empty()) rules = rule_grid(t_grid, l_grid.empty() ? std::vector<state_t>{0} : l_grid);
      else rules = cfg->simulation.rules;
      if (rules.empty()) throw ConfigError("ratio-sweep: give --t-grid or simulation.rules");
      const auto g = cfg->generator();
      const auto s = scale_table(cfg->scale.n_max);
      const auto results = ratio_sweeps(g, s, Fs, rules, n_paths(10000), seed(), {c.threads, caps()});
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("function", "rule", "E_F_max", "E_F_max_se", "E_F_g", "E_F_g_se", "ratio");
      bool pass = true;
      ojson details = ojson::array();
      for (const auto& r : results) {
        for (const auto& row : r.rows)
          csv.row(r.function_name, row.rule.describe(), row.E_F_max.mean, row.E_F_max.std_error, row.E_F_g.mean,
                  row.E_F_g.std_error, row.ratio);
        const bool ok = r.band <= max_band && r.half_band_ratio() <= max_half_ratio;
        pass = pass && ok;
        details.push_back({{"function", r.function_name}, {"min_ratio", r.min_ratio}, {"max_ratio", r.max_ratio},
                           {"band", r.band}, {"first_half_band", r.first_half_band},
                           {"second_half_band", r.second_half_band}, {"half_band_ratio", r.half_band_ratio()},
                           {"pass", ok}});
      }
      return finish("lab ratio-sweep", pass, details, c.summary);
    }

    if (*martingale) {
      const auto rules = rule_grid(t_grid.empty() ? std::vector<double>{1, 10, 100} : t_grid,
                                   l_grid.empty() ? std::vector<state_t>{3, 10, 30} : l_grid);
      const auto s = scale_table(cfg->scale.n_max);
      const auto report = martingale_identity_check(cfg->generator(), s, rules, n_paths(10000), seed(), {c.threads, caps()});
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("rule", "E_f_x", "E_f_x_se", "E_tau", "E_tau_se", "abs_diff", "joint_se", "pass");
      ojson details = ojson::array();
      for (const auto& r : report.rows) {
        csv.row(r.rule.describe(), r.f_of_x.mean, r.f_of_x.std_error, r.tau.mean, r.tau.std_error, r.abs_diff,
                r.joint_std_error, r.pass);
        details.push_back({{"rule", r.rule.describe()}, {"abs_diff", r.abs_diff}, {"joint_se", r.joint_std_error},
                           {"pass", r.pass}});
      }
      return finish("lab martingale", report.pass, details, c.summary);
    }

    if (*good_lambda) {
      const double b = beta.value_or(cfg->checks.beta);
      const auto deltas = delta_grid.empty() ? cfg->checks.delta_grid : delta_grid;
      const auto ks = k_grid.empty() ? std::vector<state_t>{2, 4, 8, 16} : k_grid;
      const auto rule = rule_text.empty() ? StoppingRule::fixed(100.0) : StoppingRule::parse(rule_text);
      const auto s = scale_table(cfg->scale.n_max);
      const auto rows = good_lambda_probe(cfg->generator(), s, b, deltas, ks, rule, n_paths(10000), seed(), {c.threads, caps()});
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("delta", "k", "joint", "joint_se", "denominator", "denominator_count", "ratio", "zero_denominator");
      for (const auto& r : rows)
        csv.row(r.delta, r.k, r.joint.mean, r.joint.std_error, r.denominator.mean, r.denominator_count, r.ratio,
                r.zero_denominator);
      // on common paths the joint event shrinks with delta, so the ratio must not increase
      std::size_t violations = 0;
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j)
          if (rows[i].k == rows[j].k && rows[j].delta < rows[i].delta && rows[j].ratio > rows[i].ratio) ++violations;
      return finish("lab good-lambda", violations == 0,
                    ojson{{"beta", b}, {"rule", rule.describe()}, {"monotonicity_violations", violations}}, c.summary);
    }

    if (*tail_identity) {
      const auto rows = tail_identity_suite(trials, c.seed, max_support);
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("trial", "support", "beta", "function", "lhs", "rhs", "abs_diff", "rel_diff");
      double worst = 0.0;
      for (const auto& r : rows) {
        csv.row(r.trial, r.support, r.beta, r.function_name, r.check.lhs, r.check.rhs, r.check.abs_diff, r.rel_diff);
        worst = std::max(worst, r.rel_diff);
      }
      return finish("lab tail-identity", worst <= identity_tol,
                    ojson{{"trials", trials}, {"max_rel_diff", worst}, {"tol", identity_tol}}, c.summary);
    }

    if (*phase) {
      if (points < 3) throw ConfigError("--points must be >= 3");
      const auto grid = log_grid(t_min, t_max, points);
      const auto report = phase_transition_experiment(alphas, lambda, grid, paths.value_or(10000), c.seed, {c.threads, caps()});
      Output out(c.out);
      CsvWriter csv(out.stream());
      csv.row("family", "alpha", "t", "mean_x_star", "se");
      bool pass = true;
      ojson details = ojson::array();
      for (const auto& e : report.entries) {
        for (std::size_t i = 0; i < e.t_grid.size(); ++i)
          csv.row(e.family, e.alpha, e.t_grid[i], e.mean_max[i].mean, e.mean_max[i].std_error);
        const bool ok = e.law_matches() && e.coefficient_rel_error <= coef_tol;
        pass = pass && ok;
        ojson fits = ojson::array();
        for (const auto& f : e.fits)
          fits.push_back({{"law", to_string(f.law)}, {"coefficient", f.coefficient}, {"intercept", f.intercept}, {"sse", f.sse}});
        details.push_back({{"family", e.family}, {"alpha", e.alpha}, {"best_law", to_string(e.best_law)},
                           {"expected_law", to_string(e.expected_law)},
                           {"expected_coefficient", e.expected_coefficient},
                           {"coefficient_rel_error", e.coefficient_rel_error}, {"fits", fits}, {"pass", ok}});
      }
      return finish("lab phase-transition", pass, details, c.summary);
    }

    if (*validate_cmd) {
      const auto report = validate(cfg->generator(), up_to);
      ojson violations = ojson::array();
      for (const auto& v : report.violations) violations.push_back({{"state", v.state}, {"description", v.description}});
      return finish("validate", report.ok, ojson{{"up_to", up_to}, {"violations", violations}}, c.summary);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace skipfree::cli
