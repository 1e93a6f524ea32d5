#pragma once

// Finite-truncation checks of the sufficient conditions for the maximal inequalities,
// moderate-function evidence, and the M/M/1 asymptotic scale h.
//
// Every verdict here is a heuristic over a truncated range and carries its trace.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "scale_function.hpp"

namespace skipfree {

enum class Trend { Bounded, Growing, Inconclusive };

inline const char* to_string(Trend t) {
  switch (t) {
    case Trend::Bounded: return "bounded";
    case Trend::Growing: return "growing";
    case Trend::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// k^p - (k-1)^p without cancellation for large k.
inline double power_increment(double k, double p) {
  if (k <= 1.0) return std::pow(k, p);
  return std::pow(k, p) * -std::expm1(p * std::log1p(-1.0 / k));
}

struct PeskirOptions {
  /// Bounded requires the running max of S_n to grow by less than this over the last
  /// quartile of n.
  double plateau_tol = 1e-3;
  /// The dropped tail sum_{k>K} a_k is treated as infinite when the summand decays no
  /// faster than k^{-threshold}.
  double tail_exponent_threshold = 1.0;
};

struct PeskirVerdict {
  double p = 0.0;
  /// max_n S_n over the truncated trace.
  double sup_value = 0.0;
  Trend trend = Trend::Inconclusive;
  /// (n, S_n) with S_n = (f_n / n^p) sum_{k=n+1}^{K} (k^p - (k-1)^p) / f_k, n = 1..K/2.
  std::vector<std::pair<state_t, double>> per_n_trace;
  state_t truncation = 0;
  /// Estimate of sum_{k>K} (k^p - (k-1)^p) / f_k from the empirical power-law decay of
  /// the summand over [K/2, K]; +inf when that decay is too slow to sum.
  double tail_bound_estimate = 0.0;
  /// Fitted decay exponent gamma of the summand, a_k ~ k^{-gamma}.
  double tail_exponent = 0.0;
  /// Trace with the estimated tail added back.
  std::vector<double> corrected_trace;
};

/// Least-squares slope of ys against xs.
inline double fitted_slope(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Evaluates the Peskir summability condition on a truncated range.
inline PeskirVerdict peskir_check(const ScaleTable& s, double p, state_t K, const PeskirOptions& options = {}) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InvalidParameter("peskir_check: p must be > 0");
  if (K < 8) throw InvalidParameter("peskir_check: K must be >= 8");
  if (K > s.n_max()) throw OutOfRange("peskir_check: K exceeds table n_max");

  const auto log_f = s.log_f();
  PeskirVerdict out;
  out.p = p;
  out.truncation = K;

  // U_n = sum_{k=n+1}^{K} d_k f_n / f_k, built backwards with ratios f_n / f_{n+1} < 1.
  std::vector<double> U(static_cast<std::size_t>(K + 1), 0.0);
  for (state_t n = K - 1; n >= 1; --n) {
    const double ratio = std::exp(log_f[n] - log_f[n + 1]);
    U[n] = ratio * (power_increment(static_cast<double>(n + 1), p) + U[n + 1]);
  }

  // Tail decay exponent over the window [K/2, K].
  std::vector<double> xs, ys;
  for (state_t k = K / 2; k <= K; ++k) {
    xs.push_back(std::log(static_cast<double>(k)));
    ys.push_back(std::log(power_increment(static_cast<double>(k), p)) - log_f[k]);
  }
  const double gamma = -fitted_slope(xs, ys);
  out.tail_exponent = gamma;
  double log_tail = std::numeric_limits<double>::infinity();
  if (gamma > options.tail_exponent_threshold) {
    const double log_aK = ys.back();
    const double lk = std::log(static_cast<double>(K));
    log_tail = log_aK + gamma * lk + (1.0 - gamma) * std::log(static_cast<double>(K) + 0.5) - std::log(gamma - 1.0);
  }
  out.tail_bound_estimate = std::exp(log_tail);

  const state_t half = K / 2;
  out.per_n_trace.reserve(static_cast<std::size_t>(half));
  out.corrected_trace.reserve(static_cast<std::size_t>(half));
  for (state_t n = 1; n <= half; ++n) {
    const double log_np = p * std::log(static_cast<double>(n));
    const double value = U[n] * std::exp(-log_np);
    out.per_n_trace.emplace_back(n, value);
    out.sup_value = std::max(out.sup_value, value);
    out.corrected_trace.push_back(value + std::exp(log_f[n] - log_np + log_tail));
  }

  if (!std::isfinite(log_tail)) {
    out.trend = Trend::Growing;
    return out;
  }

  // Running max of the corrected trace over the last quartile of n.
  const auto& c = out.corrected_trace;
  const std::size_t q3 = (3 * c.size()) / 4;
  const double before = *std::max_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(q3));
  const double after = std::max(before, *std::max_element(c.begin() + static_cast<std::ptrdiff_t>(q3), c.end()));
  const double growth = (after - before) / before;
  if (growth < options.plateau_tol) {
    out.trend = Trend::Bounded;
    return out;
  }

  // Superlinear in log n: successive octave increments of S are positive and increasing.
  auto at = [&](state_t n) { return c[static_cast<std::size_t>(n - 1)]; };
  const double d1 = at(half / 4) - at(half / 8), d2 = at(half / 2) - at(half / 4), d3 = at(half) - at(half / 2);
  out.trend = (d1 > 0.0 && d2 > d1 && d3 > d2) ? Trend::Growing : Trend::Inconclusive;
  return out;
}

struct DilationVerdict {
  double beta = 0.0;
  state_t M = 0;
  std::vector<double> delta_grid;
  /// Per delta: sup over k in [M, K] of f(floor(delta k)) / (f(floor(beta k)) - f(k)).
  std::vector<double> sup_curve;
  /// k attaining each sup.
  std::vector<state_t> argmax_k;
  bool passes = false;
};

/// Evaluates the vanishing-ratio condition behind the lower moderate bound. Values of k with
/// floor(beta k) == k (possible only for small k when beta < 2) are skipped.
inline DilationVerdict dilation_check(const ScaleTable& s, double beta, state_t M, const std::vector<double>& delta_grid,
                            state_t K, double tol) {
  if (!(beta > 1.0)) throw InvalidParameter("dilation_check: beta must be > 1");
  if (M < 1 || K < M) throw InvalidParameter("dilation_check: need 1 <= M <= K");
  if (delta_grid.empty()) throw InvalidParameter("dilation_check: empty delta grid");
  for (std::size_t i = 0; i < delta_grid.size(); ++i) {
    if (!(delta_grid[i] > 0.0)) throw InvalidParameter("dilation_check: delta values must be positive");
    if (i > 0 && !(delta_grid[i] < delta_grid[i - 1])) throw InvalidParameter("dilation_check: delta grid must decrease");
  }
  const auto top = static_cast<state_t>(std::floor(beta * static_cast<double>(K)));
  if (top > s.n_max())
    throw OutOfRange("dilation_check: floor(beta K) = " + std::to_string(top) + " exceeds table n_max " +
                     std::to_string(s.n_max()));

  const auto log_f = s.log_f();
  DilationVerdict out;
  out.beta = beta;
  out.M = M;
  out.delta_grid = delta_grid;
  for (double delta : delta_grid) {
    double best = 0.0;
    state_t best_k = M;
    for (state_t k = M; k <= K; ++k) {
      const auto upper = static_cast<state_t>(std::floor(beta * static_cast<double>(k)));
      if (upper <= k) continue;
      const auto low = static_cast<state_t>(std::floor(delta * static_cast<double>(k)));
      if (low == 0) continue;  // f(0) = 0
      // f(low) / (f(upper) - f(k)) in log space
      const double value =
          std::exp(log_f[low] - log_f[upper] - std::log1p(-std::exp(log_f[k] - log_f[upper])));
      if (value > best) {
        best = value;
        best_k = k;
      }
    }
    out.sup_curve.push_back(best);
    out.argmax_k.push_back(best_k);
  }

  bool nonincreasing = true;
  for (std::size_t i = 1; i < out.sup_curve.size(); ++i)
    if (out.sup_curve[i] > 1.1 * out.sup_curve[i - 1]) nonincreasing = false;
  out.passes = nonincreasing && out.sup_curve.back() < tol;
  return out;
}

enum class ModerateKind { Power, PowerLog, UserMonotone };

/// Candidate moderate function F: continuous, increasing, F(0) = 0.
class ModerateFunction {
 public:
  /// F(x) = x^p.
  static ModerateFunction power(double p) {
    if (!(p > 0.0)) throw InvalidParameter("Power: p must be > 0");
    ModerateFunction F;
    F.kind_ = ModerateKind::Power;
    F.p_ = p;
    F.name_ = "power(" + format_number(p) + ")";
    return F;
  }

  /// F(x) = x^p log(1 + x)^q.
  static ModerateFunction power_log(double p, double q) {
    if (!(p > 0.0) || !(q >= 0.0)) throw InvalidParameter("PowerLog: need p > 0, q >= 0");
    ModerateFunction F;
    F.kind_ = ModerateKind::PowerLog;
    F.p_ = p;
    F.q_ = q;
    F.name_ = "power_log(" + format_number(p) + "," + format_number(q) + ")";
    return F;
  }

  static ModerateFunction user(std::function<double(double)> fn, std::string name = "user") {
    if (!fn) throw InvalidParameter("UserMonotone: missing evaluator");
    ModerateFunction F;
    F.kind_ = ModerateKind::UserMonotone;
    F.fn_ = std::move(fn);
    F.name_ = std::move(name);
    return F;
  }

  ModerateKind kind() const noexcept { return kind_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  const std::string& name() const noexcept { return name_; }

  double operator()(double x) const {
    switch (kind_) {
      case ModerateKind::Power: return std::pow(x, p_);
      case ModerateKind::PowerLog: return std::pow(x, p_) * std::pow(std::log1p(x), q_);
      case ModerateKind::UserMonotone: return fn_(x);
    }
    return 0.0;
  }

  /// Analytic bound on sup_x F(beta x) / F(x) when one is known: beta^p for Power and
  /// beta^{p+q} for PowerLog (log(1 + beta x) <= beta log(1 + x)).
  std::optional<double> beta_ratio_bound(double beta) const {
    switch (kind_) {
      case ModerateKind::Power: return std::pow(beta, p_);
      case ModerateKind::PowerLog: return std::pow(beta, p_ + q_);
      case ModerateKind::UserMonotone: return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  static std::string format_number(double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  ModerateKind kind_ = ModerateKind::Power;
  double p_ = 1.0;
  double q_ = 0.0;
  std::function<double(double)> fn_;
  std::string name_;
};

struct ModerateEvidence {
  /// Empirical sup of F(beta x) / F(x) over the grid; +inf if any ratio is not finite.
  double sup_ratio = 0.0;
  bool is_moderate_evidence = false;
  /// Relative gap between sup_ratio and beta_ratio_bound for Power; 0 otherwise.
  double bound_gap = 0.0;
};

/// Evidence for sup_x F(beta x)/F(x) < infinity on a grid spanning at least six decades.
/// The evidence is positive when the ratio stays finite and its maximum over the top decade
/// of the grid does not exceed the maximum elsewhere by more than 1%.
inline ModerateEvidence moderate_check(const ModerateFunction& F, double beta, const std::vector<double>& grid) {
  if (!(beta > 1.0)) throw InvalidParameter("moderate_check: beta must be > 1");
  if (grid.size() < 2) throw InvalidParameter("moderate_check: grid too small");
  const auto [lo_it, hi_it] = std::minmax_element(grid.begin(), grid.end());
  if (!(*lo_it > 0.0)) throw InvalidParameter("moderate_check: grid must be positive");
  if (*hi_it / *lo_it < 1e6) throw InvalidParameter("moderate_check: grid must span at least 6 decades");
  if (!(F(0.0) == 0.0)) throw InvalidParameter("moderate_check: F(0) must be 0");

  const double top_decade = *hi_it / 10.0;
  double sup_top = 0.0, sup_rest = 0.0;
  ModerateEvidence out;
  for (double x : grid) {
    const double denom = F(x);
    if (denom == 0.0) throw InvalidParameter("moderate_check: F(x) = 0 at x > 0; not a moderate candidate");
    double ratio = F(beta * x) / denom;
    if (!std::isfinite(ratio)) ratio = std::numeric_limits<double>::infinity();
    if (x >= top_decade)
      sup_top = std::max(sup_top, ratio);
    else
      sup_rest = std::max(sup_rest, ratio);
    out.sup_ratio = std::max(out.sup_ratio, ratio);
  }
  out.is_moderate_evidence = std::isfinite(out.sup_ratio) && sup_top <= 1.01 * sup_rest;
  if (F.kind() == ModerateKind::Power) {
    const double bound = *F.beta_ratio_bound(beta);
    out.bound_gap = std::abs(out.sup_ratio - bound) / bound;
  }
  return out;
}

/// Asymptotic scale of the M/M/1 queue:
/// x/(lambda(1-alpha)) for alpha < 1, x^2/(2 lambda) for alpha = 1,
/// alpha(alpha^x - 1)/(lambda(alpha-1)^2) for alpha > 1.
inline std::function<double(double)> h_mm1(double alpha, double lambda) {
  if (!(alpha > 0.0) || !(lambda > 0.0)) throw InvalidParameter("h_mm1: alpha, lambda must be > 0");
  if (alpha < 1.0) return [=](double x) { return x / (lambda * (1.0 - alpha)); };
  if (alpha == 1.0) return [=](double x) { return x * x / (2.0 * lambda); };
  return [=](double x) { return alpha * std::expm1(x * std::log(alpha)) / (lambda * (alpha - 1.0) * (alpha - 1.0)); };
}

/// Large-t behaviour of g for the M/M/1 queue: lambda(1-alpha) t, sqrt(2 lambda t), log_alpha t.
inline std::function<double(double)> g_asymptote_mm1(double alpha, double lambda) {
  if (!(alpha > 0.0) || !(lambda > 0.0)) throw InvalidParameter("g_asymptote_mm1: alpha, lambda must be > 0");
  if (alpha < 1.0) return [=](double t) { return lambda * (1.0 - alpha) * t; };
  if (alpha == 1.0) return [=](double t) { return std::sqrt(2.0 * lambda * t); };
  return [=](double t) { return std::log(t) / std::log(alpha); };
}

}  // namespace skipfree
