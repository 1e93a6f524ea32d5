#pragma once

// Monte Carlo experiments around the moderate maximal inequalities
//
//   c_F E F(g(tau) + 1) <= E F(X*_tau + 1) <= C_F E F(g(tau) + 1),
//
// plus exact checks of the identities used in their proofs. The constants c_F, C_F are
// existential, so the lab measures ratio bands and their stability, not the constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "conditions.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "scale_function.hpp"
#include "simulator.hpp"

namespace skipfree {

struct LabOptions {
  unsigned threads = 0;
  SimulationCaps caps{};
};

/// Both sides of the inequality for one rule and one F, estimated on common paths.
struct PairEstimate {
  EstimatorReport max_side;  // E F(X*_tau + 1)
  EstimatorReport g_side;    // E F(g(tau) + 1)
  double ratio = 0.0;        // max_side.mean / g_side.mean
  // Secondary columns without the +1, and with floor/ceil of g.
  EstimatorReport max_plain;  // E F(X*_tau)
  EstimatorReport g_plain;    // E F(g(tau))
  EstimatorReport g_floor;    // E F(floor g(tau))
  EstimatorReport g_ceil;     // E F(ceil g(tau))
};

namespace detail {

/// Smallest table level whose f reaches T, found by doubling.
inline state_t required_level(const Generator& g, double T, state_t from) {
  state_t n = std::max<state_t>(from, 1);
  for (int i = 0; i < 40; ++i) {
    n *= 2;
    const auto s = compute_scale(g, n);
    const state_t level = s.level_covering(T);
    if (level >= 0) return level;
    if (s.n_max() < n) break;  // overflowed
  }
  return -1;
}

inline void require_coverage(const Generator& g, const ScaleTable& s, const StoppingRule& rule) {
  if (!rule.bounded()) throw InvalidParameter("lab: stopping rule must contain a FixedTime cap");
  const double T = *rule.time_cap;
  if (T <= s.f().back()) return;
  const state_t need = required_level(g, T, s.n_max());
  throw TableTooSmall(need, "scale table too small: time cap " + std::to_string(T) + " exceeds f_{n_max} = " +
                                std::to_string(s.f().back()) + "; need n_max >= " + std::to_string(need));
}

}  // namespace detail

/// Estimates the pair for every F in `functions` on the same n_samples paths.
inline std::vector<PairEstimate> estimate_pairs(const Generator& g, const ScaleTable& s,
                                                std::span<const ModerateFunction> functions, const StoppingRule& rule,
                                                std::size_t n_samples, std::uint64_t seed, const LabOptions& opt = {}) {
  if (n_samples == 0) throw InvalidParameter("estimate_pair: n_samples must be > 0");
  detail::require_coverage(g, s, rule);
  const auto paths = simulate_paths(g, 0, rule, n_samples, seed, opt.threads, opt.caps);

  std::vector<PairEstimate> out;
  out.reserve(functions.size());
  std::vector<double> g_tau(paths.size());
  std::vector<std::pair<state_t, state_t>> bounds(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    g_tau[i] = s.g_eval(paths[i].tau);
    bounds[i] = s.floor_ceil_g(paths[i].tau);
  }
  for (const auto& F : functions) {
    RunningMoments max_side, g_side, max_plain, g_plain, g_floor, g_ceil;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const double xs = static_cast<double>(paths[i].x_star);
      max_side.add(F(xs + 1.0));
      g_side.add(F(g_tau[i] + 1.0));
      max_plain.add(F(xs));
      g_plain.add(F(g_tau[i]));
      g_floor.add(F(static_cast<double>(bounds[i].first)));
      g_ceil.add(F(static_cast<double>(bounds[i].second)));
    }
    PairEstimate e;
    e.max_side = max_side.report(seed);
    e.g_side = g_side.report(seed);
    e.max_plain = max_plain.report(seed);
    e.g_plain = g_plain.report(seed);
    e.g_floor = g_floor.report(seed);
    e.g_ceil = g_ceil.report(seed);
    e.ratio = e.max_side.mean / e.g_side.mean;
    out.push_back(e);
  }
  return out;
}

inline PairEstimate estimate_pair(const Generator& g, const ScaleTable& s, const ModerateFunction& F,
                                  const StoppingRule& rule, std::size_t n_samples, std::uint64_t seed,
                                  const LabOptions& opt = {}) {
  return estimate_pairs(g, s, std::span(&F, 1), rule, n_samples, seed, opt).front();
}

struct RatioSweepRow {
  StoppingRule rule;
  EstimatorReport E_F_max;
  EstimatorReport E_F_g;
  double ratio = 0.0;
};

struct RatioSweepResult {
  std::string function_name;
  std::vector<RatioSweepRow> rows;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  /// max/min over all rows, over the first ceil(n/2) rows, and over the rest.
  double band = 1.0;
  double first_half_band = 1.0;
  double second_half_band = 1.0;

  /// Growth of the band past the first half of the (time-cap ordered) grid.
  double band_growth() const { return band / first_half_band; }
  /// Symmetric ratio between the two half-grid bands.
  double half_band_ratio() const {
    return std::max(second_half_band / first_half_band, first_half_band / second_half_band);
  }
};

namespace detail {
inline double band_of(std::span<const RatioSweepRow> rows) {
  if (rows.empty()) return 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  return hi / lo;
}
}  // namespace detail

/// Ratio sweeps for several F at once; rule r uses stream_seed(seed, r) for every F.
inline std::vector<RatioSweepResult> ratio_sweeps(const Generator& g, const ScaleTable& s,
                                                  std::span<const ModerateFunction> functions,
                                                  const std::vector<StoppingRule>& rules, std::size_t n_samples,
                                                  std::uint64_t seed, const LabOptions& opt = {}) {
  if (rules.empty()) throw InvalidParameter("ratio_sweep: no rules");
  for (const auto& r : rules) detail::require_coverage(g, s, r);
  std::vector<RatioSweepResult> results(functions.size());
  for (std::size_t f = 0; f < functions.size(); ++f) results[f].function_name = functions[f].name();

  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto pairs = estimate_pairs(g, s, functions, rules[r], n_samples, SplitMix64::stream_seed(seed, r), opt);
    for (std::size_t f = 0; f < functions.size(); ++f)
      results[f].rows.push_back({rules[r], pairs[f].max_side, pairs[f].g_side, pairs[f].ratio});
  }
  for (auto& res : results) {
    res.min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& row : res.rows) {
      res.min_ratio = std::min(res.min_ratio, row.ratio);
      res.max_ratio = std::max(res.max_ratio, row.ratio);
    }
    const std::span<const RatioSweepRow> all(res.rows);
    const std::size_t half = (all.size() + 1) / 2;
    res.band = detail::band_of(all);
    res.first_half_band = detail::band_of(all.first(half));
    res.second_half_band = detail::band_of(all.subspan(half));
  }
  return results;
}

inline RatioSweepResult ratio_sweep(const Generator& g, const ScaleTable& s, const ModerateFunction& F,
                                    const std::vector<StoppingRule>& rules, std::size_t n_samples, std::uint64_t seed,
                                    const LabOptions& opt = {}) {
  return ratio_sweeps(g, s, std::span(&F, 1), rules, n_samples, seed, opt).front();
}

/// Rules min(T, L) over T in time_caps and L in levels (0 in `levels` means no level),
/// time-cap major.
inline std::vector<StoppingRule> rule_grid(const std::vector<double>& time_caps, const std::vector<state_t>& levels) {
  std::vector<StoppingRule> rules;
  for (double T : time_caps)
    for (state_t L : levels) rules.push_back(L > 0 ? StoppingRule::min_of(T, L) : StoppingRule::fixed(T));
  return rules;
}

struct MartingaleRow {
  StoppingRule rule;
  EstimatorReport f_of_x;  // E f(X_tau)
  EstimatorReport tau;     // E tau
  double abs_diff = 0.0;
  /// Standard error of the paired difference f(X_tau) - tau.
  double joint_std_error = 0.0;
  bool pass = false;
};

struct MartingaleReport {
  std::vector<MartingaleRow> rows;
  bool pass = true;
};

/// Checks E f(X_tau) = E tau for rules min(t, L), within `se_multiple` joint standard errors.
inline MartingaleReport martingale_identity_check(const Generator& g, const ScaleTable& s,
                                                  const std::vector<StoppingRule>& rules, std::size_t n_samples,
                                                  std::uint64_t seed, const LabOptions& opt = {},
                                                  double se_multiple = 4.0) {
  MartingaleReport report;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const auto& rule = rules[r];
    if (!rule.bounded() || !rule.level) throw InvalidParameter("martingale check: rules must be min(t, L)");
    if (*rule.level > s.n_max()) throw OutOfRange("martingale check: level exceeds table n_max");
    const std::uint64_t cell_seed = SplitMix64::stream_seed(seed, r);
    const auto paths = simulate_paths(g, 0, rule, n_samples, cell_seed, opt.threads, opt.caps);
    RunningMoments fx, tau, diff;
    for (const auto& p : paths) {
      const double value = s.f()[static_cast<std::size_t>(p.x_at_tau)];
      fx.add(value);
      tau.add(p.tau);
      diff.add(value - p.tau);
    }
    MartingaleRow row{rule, fx.report(cell_seed), tau.report(cell_seed), std::abs(diff.mean()), diff.std_error(), false};
    row.pass = row.abs_diff <= se_multiple * row.joint_std_error;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

struct GoodLambdaRow {
  double delta = 0.0;
  state_t k = 0;
  EstimatorReport joint;        // P(X*_tau >= floor(beta k), g(tau) < floor(delta k))
  EstimatorReport denominator;  // P(X*_tau >= k)
  std::uint64_t denominator_count = 0;
  double ratio = 0.0;
  bool zero_denominator = false;
};

/// Empirical good-lambda hypothesis: ratio of the joint tail event to P(X*_tau >= k).
inline std::vector<GoodLambdaRow> good_lambda_probe(const Generator& g, const ScaleTable& s, double beta,
                                                    const std::vector<double>& delta_grid,
                                                    const std::vector<state_t>& k_grid, const StoppingRule& rule,
                                                    std::size_t n_samples, std::uint64_t seed,
                                                    const LabOptions& opt = {}) {
  if (!(beta > 1.0)) throw InvalidParameter("good_lambda_probe: beta must be > 1");
  if (n_samples == 0) throw InvalidParameter("good_lambda_probe: n_samples must be > 0");
  detail::require_coverage(g, s, rule);
  const auto paths = simulate_paths(g, 0, rule, n_samples, seed, opt.threads, opt.caps);
  std::vector<double> g_tau(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) g_tau[i] = s.g_eval(paths[i].tau);

  std::vector<GoodLambdaRow> rows;
  for (double delta : delta_grid) {
    for (state_t k : k_grid) {
      const auto high = static_cast<state_t>(std::floor(beta * static_cast<double>(k)));
      const auto low = std::floor(delta * static_cast<double>(k));
      std::uint64_t joint = 0, denom = 0;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        if (paths[i].x_star >= k) ++denom;
        if (paths[i].x_star >= high && g_tau[i] < low) ++joint;
      }
      GoodLambdaRow row;
      row.delta = delta;
      row.k = k;
      row.joint = proportion_report(joint, n_samples, seed);
      row.denominator = proportion_report(denom, n_samples, seed);
      row.denominator_count = denom;
      row.zero_denominator = denom == 0;
      row.ratio = denom == 0 ? 0.0 : static_cast<double>(joint) / static_cast<double>(denom);
      rows.push_back(row);
    }
  }
  return rows;
}

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_diff = 0.0;
};

namespace detail {
/// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};
}  // namespace detail

/// Both sides of
///   int_0^inf P(X >= floor(beta x)) dF(x) = E F((floor X + 1) / beta)
/// for X with probabilities pmf[k] on k = 0..K, the left side evaluated as
/// sum_k P(X >= k) [F((k+1)/beta) - F(k/beta)].
inline IdentityCheck tail_identity_check(std::span<const double> pmf, const ModerateFunction& F, double beta) {
  if (pmf.empty()) throw InvalidParameter("tail_identity_check: empty distribution");
  if (!(beta > 0.0)) throw InvalidParameter("tail_identity_check: beta must be > 0");
  detail::CompensatedSum total;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw InvalidParameter("tail_identity_check: probabilities must be >= 0");
    total.add(p);
  }
  if (std::abs(total.value() - 1.0) > 1e-9) throw InvalidParameter("tail_identity_check: probabilities must sum to 1");

  const std::size_t K = pmf.size();
  std::vector<double> survival(K);  // P(X >= k)
  detail::CompensatedSum tail;
  for (std::size_t k = K; k-- > 0;) {
    tail.add(pmf[k]);
    survival[k] = tail.value();
  }
  detail::CompensatedSum lhs, rhs;
  for (std::size_t k = 0; k < K; ++k) {
    const double kk = static_cast<double>(k);
    lhs.add(survival[k] * (F((kk + 1.0) / beta) - F(kk / beta)));
    rhs.add(pmf[k] * F((kk + 1.0) / beta));
  }
  IdentityCheck out{lhs.value(), rhs.value(), 0.0};
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

struct TailIdentityInstance {
  std::vector<double> pmf;
  ModerateFunction F = ModerateFunction::power(1.0);
  double beta = 2.0;
};

/// Random finite-support distribution on 0..K (K <= max_support), beta in (1, 4], and F a
/// power or power-log function with random exponents.
inline TailIdentityInstance random_tail_identity_instance(SplitMix64& rng, std::size_t max_support = 200) {
  TailIdentityInstance inst;
  const std::size_t K = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_support));
  inst.pmf.resize(K);
  detail::CompensatedSum total;
  for (auto& p : inst.pmf) {
    // a few heavy atoms among small ones
    p = rng.uniform() < 0.1 ? rng.uniform() * 10.0 : rng.uniform();
    total.add(p);
  }
  const double z = total.value();
  for (auto& p : inst.pmf) p /= z;
  inst.beta = 1.0 + 3.0 * (1.0 - rng.uniform());
  const double p = 0.25 + 3.75 * rng.uniform();
  inst.F = rng.uniform() < 0.5 ? ModerateFunction::power(p) : ModerateFunction::power_log(p, 2.0 * rng.uniform());
  return inst;
}

struct TailIdentityRow {
  std::size_t trial = 0;
  std::size_t support = 0;
  double beta = 0.0;
  std::string function_name;
  IdentityCheck check;
  double rel_diff = 0.0;
};

/// Runs the identity on `trials` random instances; trial i draws from stream i of `seed`.
inline std::vector<TailIdentityRow> tail_identity_suite(std::size_t trials, std::uint64_t seed, std::size_t max_support = 200) {
  std::vector<TailIdentityRow> rows;
  for (std::size_t i = 0; i < trials; ++i) {
    SplitMix64 rng = SplitMix64::for_stream(seed, i);
    const auto inst = random_tail_identity_instance(rng, max_support);
    TailIdentityRow row{i, inst.pmf.size(), inst.beta, inst.F.name(), tail_identity_check(inst.pmf, inst.F, inst.beta), 0.0};
    row.rel_diff = row.check.abs_diff / std::max(1.0, std::abs(row.check.rhs));
    rows.push_back(row);
  }
  return rows;
}

enum class GrowthLaw { Linear, SquareRoot, Logarithmic };

inline const char* to_string(GrowthLaw law) {
  switch (law) {
    case GrowthLaw::Linear: return "linear";
    case GrowthLaw::SquareRoot: return "sqrt";
    case GrowthLaw::Logarithmic: return "log";
  }
  return "unknown";
}

struct LawFit {
  GrowthLaw law = GrowthLaw::Linear;
  double coefficient = 0.0;  // c in y = a + c phi(t)
  double intercept = 0.0;
  double sse = 0.0;
};

/// Least-squares fits of y = a + c phi(t) for phi in {t, sqrt t, ln t}.
inline std::vector<LawFit> fit_growth_laws(std::span<const double> t, std::span<const double> y) {
  std::vector<LawFit> fits;
  for (GrowthLaw law : {GrowthLaw::Linear, GrowthLaw::SquareRoot, GrowthLaw::Logarithmic}) {
    std::vector<double> x(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      x[i] = law == GrowthLaw::Linear ? t[i] : law == GrowthLaw::SquareRoot ? std::sqrt(t[i]) : std::log(t[i]);
    LawFit fit;
    fit.law = law;
    fit.coefficient = fitted_slope(x, y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    fit.intercept = my - fit.coefficient * mx;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - fit.intercept - fit.coefficient * x[i];
      fit.sse += e * e;
    }
    fits.push_back(fit);
  }
  return fits;
}

struct PhaseTransitionEntry {
  std::string family;  // "mm1" or "catastrophe"
  double alpha = 0.0;
  std::vector<double> t_grid;
  std::vector<EstimatorReport> mean_max;  // E X*_t per grid point
  std::vector<LawFit> fits;
  GrowthLaw best_law = GrowthLaw::Linear;
  double best_coefficient = 0.0;
  GrowthLaw expected_law = GrowthLaw::Linear;
  /// lambda(1-alpha), sqrt(2 lambda), or 1/ln(base) for the log laws (coefficient of ln t).
  double expected_coefficient = 0.0;
  double coefficient_rel_error = 0.0;

  bool law_matches() const { return best_law == expected_law; }
};

struct PhaseTransitionReport {
  std::vector<PhaseTransitionEntry> entries;
};

/// Growth law of E X*_t for mm1(lambda, alpha lambda) and catastrophe(lambda, alpha lambda).
/// Each alpha uses n_samples paths; every path contributes X*_t at all grid times.
inline PhaseTransitionReport phase_transition_experiment(const std::vector<double>& alphas, double lambda,
                                                         const std::vector<double>& t_grid, std::size_t n_samples,
                                                         std::uint64_t seed, const LabOptions& opt = {}) {
  if (t_grid.size() < 3) throw InvalidParameter("phase transition: need at least 3 grid times");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw InvalidParameter("phase transition: grid times must be positive");
    if (i > 0 && !(t_grid[i] > t_grid[i - 1])) throw InvalidParameter("phase transition: grid must ascend");
  }
  if (t_grid.back() / t_grid.front() < 100.0)
    throw InvalidParameter("phase transition: t grid must span at least two decades");
  if (!(lambda > 0.0)) throw InvalidParameter("phase transition: lambda must be > 0");
  if (n_samples < 2) throw InvalidParameter("phase transition: n_samples must be >= 2");

  PhaseTransitionReport report;
  std::uint64_t cell = 0;
  for (const char* family : {"mm1", "catastrophe"}) {
    for (double alpha : alphas) {
      if (!(alpha > 0.0)) throw InvalidParameter("phase transition: alpha must be > 0");
      const double mu = alpha * lambda;
      const Generator g = std::string(family) == "mm1" ? mm1(lambda, mu) : catastrophe(lambda, mu);
      const std::uint64_t cell_seed = SplitMix64::stream_seed(seed, cell++);
      const auto maxima = parallel_map(n_samples, opt.threads, [&](std::size_t i) {
        SplitMix64 rng = SplitMix64::for_stream(cell_seed, i);
        return running_max_at(g, 0, t_grid, rng, opt.caps);
      });

      PhaseTransitionEntry e;
      e.family = family;
      e.alpha = alpha;
      e.t_grid = t_grid;
      std::vector<double> means;
      for (std::size_t j = 0; j < t_grid.size(); ++j) {
        RunningMoments acc;
        for (const auto& path : maxima) acc.add(static_cast<double>(path[j]));
        e.mean_max.push_back(acc.report(cell_seed));
        means.push_back(acc.mean());
      }
      e.fits = fit_growth_laws(t_grid, means);
      const auto best = std::min_element(e.fits.begin(), e.fits.end(),
                                         [](const LawFit& a, const LawFit& b) { return a.sse < b.sse; });
      e.best_law = best->law;
      e.best_coefficient = best->coefficient;

      if (e.family == "catastrophe") {
        e.expected_law = GrowthLaw::Logarithmic;
        e.expected_coefficient = 1.0 / std::log1p(alpha);
      } else if (alpha < 1.0) {
        e.expected_law = GrowthLaw::Linear;
        e.expected_coefficient = lambda * (1.0 - alpha);
      } else if (alpha == 1.0) {
        e.expected_law = GrowthLaw::SquareRoot;
        e.expected_coefficient = std::sqrt(2.0 * lambda);
      } else {
        e.expected_law = GrowthLaw::Logarithmic;
        e.expected_coefficient = 1.0 / std::log(alpha);
      }
      const auto expected_fit = std::find_if(e.fits.begin(), e.fits.end(),
                                             [&](const LawFit& f) { return f.law == e.expected_law; });
      e.coefficient_rel_error =
          std::abs(expected_fit->coefficient - e.expected_coefficient) / std::abs(e.expected_coefficient);
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

}  // namespace skipfree
