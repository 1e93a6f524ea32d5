#pragma once

// Exact event-driven simulation of upward skip-free chains: exponential holding times
// with the total exit rate, next state drawn proportionally to the row's rates. Each path
// owns a SplitMix64 stream derived from (master seed, path index).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chain_model.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace skipfree {

/// FixedTime(T), HitLevel(L), or their minimum. tau = min(T, first time X >= L).
struct StoppingRule {
  std::optional<double> time_cap;
  std::optional<state_t> level;

  static StoppingRule fixed(double T) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidParameter("FixedTime: T must be finite and >= 0");
    return {T, std::nullopt};
  }
  static StoppingRule hit(state_t L) {
    if (L < 0) throw InvalidParameter("HitLevel: L must be >= 0");
    return {std::nullopt, L};
  }
  static StoppingRule min_of(double T, state_t L) {
    StoppingRule r = fixed(T);
    r.level = hit(L).level;
    return r;
  }

  /// True when tau is bounded by a deterministic time.
  bool bounded() const noexcept { return time_cap.has_value(); }

  /// "fixed:T", "hit:L" or "min:T,L".
  std::string describe() const {
    auto num = [](double v) {
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, v);
      return std::string(buf, r.ptr);
    };
    if (time_cap && level) return "min:" + num(*time_cap) + "," + std::to_string(*level);
    if (time_cap) return "fixed:" + num(*time_cap);
    if (level) return "hit:" + std::to_string(*level);
    return "none";
  }

  /// Parses the describe() grammar.
  static StoppingRule parse(std::string_view text) {
    auto fail = [&]() -> StoppingRule { throw InvalidParameter("bad stopping rule '" + std::string(text) + "'"); };
    auto to_double = [&](std::string_view s) {
      double v = 0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail();
      return v;
    };
    auto to_level = [&](std::string_view s) {
      state_t v = 0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) fail();
      return v;
    };
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) return fail();
    const auto kind = text.substr(0, colon);
    const auto args = text.substr(colon + 1);
    if (kind == "fixed") return fixed(to_double(args));
    if (kind == "hit") return hit(to_level(args));
    if (kind == "min") {
      const auto comma = args.find(',');
      if (comma == std::string_view::npos) return fail();
      return min_of(to_double(args.substr(0, comma)), to_level(args.substr(comma + 1)));
    }
    return fail();
  }
};

/// Hard limits guarding against explosive or runaway generators.
struct SimulationCaps {
  state_t state_cap = 1'000'000;
  std::uint64_t event_cap = 100'000'000;

  /// Defaults overridden by SKIPFREE_STATE_CAP / SKIPFREE_EVENT_CAP when set.
  static SimulationCaps from_environment() {
    SimulationCaps caps;
    if (const char* s = std::getenv("SKIPFREE_STATE_CAP")) caps.state_cap = std::strtoll(s, nullptr, 10);
    if (const char* s = std::getenv("SKIPFREE_EVENT_CAP")) caps.event_cap = std::strtoull(s, nullptr, 10);
    if (caps.state_cap <= 0 || caps.event_cap == 0) throw InvalidParameter("simulation caps must be positive");
    return caps;
  }
};

struct TrajectoryOutcome {
  double tau = 0.0;
  state_t x_at_tau = 0;
  state_t x_star = 0;
  std::uint64_t n_jumps = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_caps(state_t x, std::uint64_t jumps, const SimulationCaps& caps) {
  if (x > caps.state_cap)
    throw ExplosionGuard(ExplosionGuard::Cause::StateCap,
                         "state " + std::to_string(x) + " exceeded state cap " + std::to_string(caps.state_cap));
  if (jumps >= caps.event_cap)
    throw ExplosionGuard(ExplosionGuard::Cause::EventCap,
                         "path exceeded event cap " + std::to_string(caps.event_cap));
}

/// Next state after a jump out of x; `u` is uniform on [0, 1).
inline state_t next_state(const Generator& g, state_t x, double lambda, double total, double u) {
  double target = u * total;
  if (target < lambda) return x + 1;
  target -= lambda;
  state_t chosen = -1;
  state_t last = -1;
  g.visit_down(x, [&](state_t j, double rate) {
    if (chosen >= 0) return;
    if (j < 0 || j >= x || !(rate >= 0.0))
      throw InvalidParameter("generator row " + std::to_string(x) + " is not a valid skip-free row");
    last = j;
    if (target < rate) chosen = j;
    target -= rate;
  });
  // Rounding can leave target marginally past the last entry.
  return chosen >= 0 ? chosen : (last >= 0 ? last : x + 1);
}

}  // namespace detail

/// One path started at `start`, stopped at the (bounded) rule.
inline TrajectoryOutcome simulate_from(const Generator& g, state_t start, const StoppingRule& rule, SplitMix64& rng,
                                       const SimulationCaps& caps = {}) {
  if (!rule.bounded()) throw InvalidParameter("simulate: stopping rule must contain a FixedTime cap");
  if (start < 0) throw InvalidParameter("simulate: start must be >= 0");
  TrajectoryOutcome out;
  out.seed = rng.state();
  const double T = *rule.time_cap;
  const state_t L = rule.level.value_or(std::numeric_limits<state_t>::max());
  state_t x = start;
  state_t x_star = start;
  double t = 0.0;
  std::uint64_t jumps = 0;

  while (x < L) {
    detail::check_caps(x, jumps, caps);
    const double lambda = g.birth_rate(x);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("simulate: birth rate at state " + std::to_string(x) + " must be positive");
    const double total = lambda + g.death_rate(x);
    const double dt = rng.exponential(total);
    if (t + dt > T) {
      t = T;
      break;
    }
    t += dt;
    x = detail::next_state(g, x, lambda, total, rng.uniform());
    ++jumps;
    if (x > x_star) x_star = x;
  }
  out.tau = t;
  out.x_at_tau = x;
  out.x_star = x_star;
  out.n_jumps = jumps;
  return out;
}

inline TrajectoryOutcome simulate_from(const Generator& g, state_t start, const StoppingRule& rule, std::uint64_t seed,
                                       const SimulationCaps& caps = {}) {
  SplitMix64 rng(seed);
  return simulate_from(g, start, rule, rng, caps);
}

/// Path from X_0 = 0.
inline TrajectoryOutcome simulate(const Generator& g, const StoppingRule& rule, std::uint64_t seed,
                                  const SimulationCaps& caps = {}) {
  return simulate_from(g, 0, rule, seed, caps);
}

/// n_paths independent paths; path i uses SplitMix64::stream_seed(master_seed, i).
/// The result does not depend on `threads`.
inline std::vector<TrajectoryOutcome> simulate_paths(const Generator& g, state_t start, const StoppingRule& rule,
                                                     std::size_t n_paths, std::uint64_t master_seed,
                                                     unsigned threads = 0, const SimulationCaps& caps = {}) {
  if (!rule.bounded()) throw InvalidParameter("simulate: stopping rule must contain a FixedTime cap");
  return parallel_map(n_paths, threads, [&](std::size_t i) {
    return simulate_from(g, start, rule, SplitMix64::stream_seed(master_seed, i), caps);
  });
}

/// Running maximum X*_t at each of the ascending `times`, from one path started at `start`.
inline std::vector<state_t> running_max_at(const Generator& g, state_t start, const std::vector<double>& times,
                                           SplitMix64& rng, const SimulationCaps& caps = {}) {
  std::vector<state_t> out;
  out.reserve(times.size());
  state_t x = start, x_star = start;
  double t = 0.0;
  std::uint64_t jumps = 0;
  double next_jump = -1.0;  // pending jump time, drawn lazily
  for (double checkpoint : times) {
    if (checkpoint < t) throw InvalidParameter("running_max_at: times must ascend");
    for (;;) {
      if (next_jump < 0.0) {
        detail::check_caps(x, jumps, caps);
        const double lambda = g.birth_rate(x);
        if (!(lambda > 0.0)) throw InvalidParameter("simulate: birth rate must be positive");
        next_jump = t + rng.exponential(lambda + g.death_rate(x));
      }
      if (next_jump > checkpoint) break;
      t = next_jump;
      next_jump = -1.0;
      const double lambda = g.birth_rate(x);
      x = detail::next_state(g, x, lambda, lambda + g.death_rate(x), rng.uniform());
      ++jumps;
      if (x > x_star) x_star = x;
    }
    out.push_back(x_star);
  }
  return out;
}

/// P_start(X*_T >= level) from n_paths paths stopped at min(T, tau_level).
inline EstimatorReport exceedance_probability(const Generator& g, state_t start, state_t level, double T,
                                              std::size_t n_paths, std::uint64_t seed, unsigned threads = 0,
                                              const SimulationCaps& caps = {}) {
  if (start >= level) return proportion_report(n_paths, n_paths, seed);
  const auto paths = simulate_paths(g, start, StoppingRule::min_of(T, level), n_paths, seed, threads, caps);
  std::uint64_t hits = 0;
  for (const auto& p : paths) hits += p.x_star >= level ? 1 : 0;
  return proportion_report(hits, n_paths, seed);
}

struct CoupledOutcome {
  state_t y_star = 0;
  state_t z_star = 0;
  /// Largest one-jump increase of the gap Y - Z; 0 for a monotone coupling.
  state_t max_distance_increase = 0;
  state_t start_m = 0;
  state_t y_at_t = 0;
  state_t z_at_t = 0;
  /// Smallest gap Y - Z seen; never negative for a monotone coupling.
  state_t min_gap = 0;
  std::uint64_t n_jumps = 0;
};

namespace detail {

struct CoupledMove {
  state_t dy, dz;  // for the catastrophe move, dy == dz == kReset
  double rate;
};
inline constexpr state_t kReset = std::numeric_limits<state_t>::min();

template <class Moves>
CoupledOutcome run_coupled(state_t m, double T, SplitMix64& rng, const SimulationCaps& caps, Moves&& moves_at) {
  if (m < 0) throw InvalidParameter("coupling: m must be >= 0");
  if (!(T >= 0.0)) throw InvalidParameter("coupling: T must be >= 0");
  CoupledOutcome out;
  out.start_m = m;
  state_t y = m, z = 0;
  out.y_star = y;
  out.z_star = z;
  out.min_gap = y - z;
  double t = 0.0;
  std::uint64_t jumps = 0;
  CoupledMove moves[4];
  for (;;) {
    check_caps(y, jumps, caps);
    const int count = moves_at(y, z, moves);
    double total = 0.0;
    for (int i = 0; i < count; ++i) total += moves[i].rate;
    if (!(total > 0.0)) throw InvalidParameter("coupling: zero exit rate");
    t += rng.exponential(total);
    if (t > T) break;
    double u = rng.uniform() * total;
    int pick = count - 1;
    for (int i = 0; i < count; ++i) {
      if (u < moves[i].rate) {
        pick = i;
        break;
      }
      u -= moves[i].rate;
    }
    const state_t gap_before = y - z;
    if (moves[pick].dy == kReset) {
      y = 0;
      z = 0;
    } else {
      y += moves[pick].dy;
      z += moves[pick].dz;
    }
    ++jumps;
    const state_t gap = y - z;
    out.max_distance_increase = std::max(out.max_distance_increase, gap - gap_before);
    out.min_gap = std::min(out.min_gap, gap);
    out.y_star = std::max(out.y_star, y);
    out.z_star = std::max(out.z_star, z);
  }
  out.y_at_t = y;
  out.z_at_t = z;
  out.n_jumps = jumps;
  return out;
}

// The rates are also checked on 0..m+1 up front so that misuse does not depend on
// which states a path happens to visit.
inline void require_monotone(const RateSequence& rate, state_t m, bool decreasing, const char* name) {
  for (state_t n = 1; n <= m + 1; ++n) {
    const double prev = rate(n - 1), cur = rate(n);
    if (decreasing ? cur > prev : (n > 1 && cur < prev))
      throw HypothesisViolation(std::string("coupling: ") + name + (decreasing ? " must be decreasing" : " must be increasing") +
                                " (at " + std::to_string(n) + ")");
  }
}

}  // namespace detail

/// Monotone coupling of two birth-death chains (decreasing lambda, increasing mu) started
/// at (m, 0) on {(i, j): i >= j}:
///   (i,j)->(i+1,j+1) at lambda_i,  (i,j)->(i,j+1) at lambda_j - lambda_i,
///   (i,j)->(i-1,j-1) at mu_j,      (i,j)->(i-1,j) at mu_i - mu_j   (mu_0 = 0).
inline CoupledOutcome simulate_coupled_bd(const RateSequence& lambda, const RateSequence& mu, state_t m, double T,
                                          SplitMix64& rng, const SimulationCaps& caps = {}) {
  auto death = [&](state_t n) { return n <= 0 ? 0.0 : mu(n); };
  detail::require_monotone(lambda, m, true, "lambda");
  detail::require_monotone(mu, m, false, "mu");
  return detail::run_coupled(m, T, rng, caps, [&](state_t i, state_t j, detail::CoupledMove* moves) {
    const double li = lambda(i), lj = lambda(j), mi = death(i), mj = death(j);
    if (lj - li < 0.0)
      throw HypothesisViolation("coupling: lambda must be decreasing (lambda_" + std::to_string(j) + " < lambda_" +
                                std::to_string(i) + ")");
    if (mi - mj < 0.0)
      throw HypothesisViolation("coupling: mu must be increasing (mu_" + std::to_string(i) + " < mu_" +
                                std::to_string(j) + ")");
    int n = 0;
    moves[n++] = {1, 1, li};
    if (i > j && lj - li > 0.0) moves[n++] = {0, 1, lj - li};
    if (mj > 0.0) moves[n++] = {-1, -1, mj};
    if (i > j && mi - mj > 0.0) moves[n++] = {-1, 0, mi - mj};
    return n;
  });
}

inline CoupledOutcome simulate_coupled_bd(const RateSequence& lambda, const RateSequence& mu, state_t m, double T,
                                          std::uint64_t seed, const SimulationCaps& caps = {}) {
  SplitMix64 rng(seed);
  return simulate_coupled_bd(lambda, mu, m, T, rng, caps);
}

/// Monotone coupling of two catastrophe chains (decreasing lambda, reset rate mu):
///   (i,j)->(i+1,j+1) at lambda_i, (i,j)->(i,j+1) at lambda_j - lambda_i,
///   (i,j)->(0,0) at mu for (i,j) != (0,0).
inline CoupledOutcome simulate_coupled_catastrophe(const RateSequence& lambda, double mu, state_t m, double T,
                                                   SplitMix64& rng, const SimulationCaps& caps = {}) {
  if (!(mu > 0.0)) throw InvalidParameter("coupling: mu must be > 0");
  detail::require_monotone(lambda, m, true, "lambda");
  return detail::run_coupled(m, T, rng, caps, [&](state_t i, state_t j, detail::CoupledMove* moves) {
    const double li = lambda(i), lj = lambda(j);
    if (lj - li < 0.0)
      throw HypothesisViolation("coupling: lambda must be decreasing (lambda_" + std::to_string(j) + " < lambda_" +
                                std::to_string(i) + ")");
    int n = 0;
    moves[n++] = {1, 1, li};
    if (i > j && lj - li > 0.0) moves[n++] = {0, 1, lj - li};
    if (i != 0 || j != 0) moves[n++] = {detail::kReset, detail::kReset, mu};
    return n;
  });
}

inline CoupledOutcome simulate_coupled_catastrophe(const RateSequence& lambda, double mu, state_t m, double T,
                                                   std::uint64_t seed, const SimulationCaps& caps = {}) {
  SplitMix64 rng(seed);
  return simulate_coupled_catastrophe(lambda, mu, m, T, rng, caps);
}

struct ControllabilityRow {
  double t = 0.0;
  state_t k = 0;
  /// P_k(X*_t >= floor(beta k))
  EstimatorReport lhs;
  /// P_0(X*_t >= floor(gamma k))
  EstimatorReport rhs;
  double ratio = 0.0;
  /// 95% interval for lhs/rhs (log-ratio method).
  std::pair<double, double> ratio_ci{0.0, 0.0};
  /// rhs estimated as 0 while lhs > 0.
  bool insufficient_samples = false;
};

struct ControllabilityReport {
  std::vector<ControllabilityRow> rows;
  double max_ratio = 0.0;
  double max_ratio_ci_high = 0.0;
};

/// Monte Carlo estimates of both sides of the restart-domination bound
/// P_k(X*_t >= floor(beta k)) <= C P_0(X*_t >= floor(gamma k)) on a (t, k) grid.
inline ControllabilityReport controllability_probe(const Generator& g, double beta, double gamma,
                                                   const std::vector<double>& t_grid,
                                                   const std::vector<state_t>& k_grid, std::size_t n_samples,
                                                   std::uint64_t seed, unsigned threads = 0,
                                                   const SimulationCaps& caps = {}) {
  if (!(beta > 1.0)) throw InvalidParameter("controllability_probe: beta must be > 1");
  if (!(gamma > 0.0)) throw InvalidParameter("controllability_probe: gamma must be > 0");
  if (n_samples == 0) throw InvalidParameter("controllability_probe: n_samples must be > 0");
  ControllabilityReport report;
  std::uint64_t cell = 0;
  for (double t : t_grid) {
    for (state_t k : k_grid) {
      if (k < 0) throw InvalidParameter("controllability_probe: k must be >= 0");
      ControllabilityRow row;
      row.t = t;
      row.k = k;
      const auto upper = static_cast<state_t>(std::floor(beta * static_cast<double>(k)));
      const auto lower = static_cast<state_t>(std::floor(gamma * static_cast<double>(k)));
      row.lhs = exceedance_probability(g, k, upper, t, n_samples, SplitMix64::stream_seed(seed, 2 * cell), threads, caps);
      row.rhs = exceedance_probability(g, 0, lower, t, n_samples, SplitMix64::stream_seed(seed, 2 * cell + 1), threads, caps);
      ++cell;
      const double n = static_cast<double>(n_samples);
      if (row.rhs.mean == 0.0) {
        row.insufficient_samples = row.lhs.mean > 0.0;
        row.ratio = row.lhs.mean > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        row.ratio_ci = {0.0, std::numeric_limits<double>::infinity()};
      } else if (row.lhs.mean == 0.0) {
        row.ratio = 0.0;
        row.ratio_ci = {0.0, row.lhs.ci95.second / row.rhs.mean};
      } else {
        row.ratio = row.lhs.mean / row.rhs.mean;
        const double se = std::sqrt((1.0 - row.lhs.mean) / (row.lhs.mean * n) + (1.0 - row.rhs.mean) / (row.rhs.mean * n));
        row.ratio_ci = {row.ratio * std::exp(-kZ95 * se), row.ratio * std::exp(kZ95 * se)};
      }
      if (!row.insufficient_samples) {
        report.max_ratio = std::max(report.max_ratio, row.ratio);
        report.max_ratio_ci_high = std::max(report.max_ratio_ci_high, row.ratio_ci.second);
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace skipfree
