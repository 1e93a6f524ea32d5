#pragma once

// Scale function of an upward skip-free chain.
//
//   m_n = sum_{i<=n} F_{in} / lambda_i,   f_n = sum_{k<n} m_k,
//
// with F_{ii} = 1 and F_{in} = (1/lambda_n) sum_{k=i}^{n-1} F_{ik} G_n(k) for n > i.
// f_n is the expected first passage time from 0 to level n and f solves Qf = 1, f_0 = 0.
//
// The production path never builds F. Exchanging the order of summation gives
//
//   m_n = (1/lambda_n) [1 + sum_k G_n(k) m_k] = (1/lambda_n) [1 + sum_{j<n} q(n,j) (f_n - f_j)],
//
// which costs one pass over the sparse row of n. FTable is kept as the reference route.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chain_model.hpp"
#include "errors.hpp"

namespace skipfree {

/// How f is continued between integer knots. Floor and ceiling of g do not depend on it.
enum class Extension { PiecewiseLinear, PiecewiseExponential };

/// Lower-triangular table of F_{in}, 0 <= i <= n <= N.
class FTable {
 public:
  FTable() = default;
  explicit FTable(state_t n_max)
      : n_max_(n_max), data_(static_cast<std::size_t>((n_max + 1) * (n_max + 2) / 2), 0.0) {}

  state_t n_max() const noexcept { return n_max_; }

  double operator()(state_t i, state_t n) const { return data_[index(i, n)]; }
  double& operator()(state_t i, state_t n) { return data_[index(i, n)]; }

 private:
  std::size_t index(state_t i, state_t n) const {
    if (i < 0 || n < i || n > n_max_) throw OutOfRange("FTable: index outside 0 <= i <= n <= N");
    return static_cast<std::size_t>(n * (n + 1) / 2 + i);
  }

  state_t n_max_ = 0;
  std::vector<double> data_;
};

/// Direct evaluation of the F recursion. O(N^2) memory; O(N^3) time in general and
/// O(N^2) when every downward row is concentrated near n.
inline FTable compute_F(const Generator& g, state_t n_max) {
  if (n_max < 0) throw InvalidParameter("compute_F: N must be >= 0");
  FTable table(n_max);
  std::vector<double> cumulative;
  for (state_t n = 0; n <= n_max; ++n) {
    table(n, n) = 1.0;
    if (n == 0) continue;
    const double lambda = g.birth_rate(n);
    if (!(lambda > 0.0)) throw InvalidParameter("compute_F: lambda_" + std::to_string(n) + " must be positive");

    // G_n(k) for k = 0..n-1.
    cumulative.assign(static_cast<std::size_t>(n), 0.0);
    state_t lowest = n;
    g.visit_down(n, [&](state_t j, double rate) {
      if (j < 0 || j >= n) throw InvalidParameter("compute_F: downward target out of range");
      cumulative[static_cast<std::size_t>(j)] += rate;
      lowest = std::min(lowest, j);
    });
    for (state_t k = 1; k < n; ++k) cumulative[k] += cumulative[k - 1];

    for (state_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (state_t k = std::max(i, lowest); k < n; ++k) sum += table(i, k) * cumulative[k];
      table(i, n) = sum / lambda;
    }
  }
  return table;
}

/// m_n = sum_i F_{in} / lambda_i, evaluated from an FTable.
inline std::vector<double> m_from_F(const FTable& table, const Generator& g) {
  std::vector<double> m(static_cast<std::size_t>(table.n_max() + 1));
  for (state_t n = 0; n <= table.n_max(); ++n) {
    double sum = 0.0;
    for (state_t i = 0; i <= n; ++i) sum += table(i, n) / g.birth_rate(i);
    m[n] = sum;
  }
  return m;
}

/// m_n and f_n up to a truncation level, with a continuous extension of f and its inverse.
/// Immutable; all queries are const.
class ScaleTable {
 public:
  state_t n_max() const noexcept { return static_cast<state_t>(f_.size()) - 1; }
  /// Level that was asked for; larger than n_max() when a general generator overflowed.
  state_t requested_n_max() const noexcept { return requested_n_max_; }
  /// Largest n with finite f_n. Built-in constant-rate chains continue in log space past it.
  state_t finite_n_max() const noexcept { return finite_n_max_; }
  bool overflowed() const noexcept { return finite_n_max_ < requested_n_max_; }

  std::span<const double> m() const noexcept { return m_; }          // m_0 .. m_{N-1}
  std::span<const double> f() const noexcept { return f_; }          // f_0 .. f_N
  std::span<const double> log_m() const noexcept { return log_m_; }
  std::span<const double> log_f() const noexcept { return log_f_; }  // log f_0 = -inf
  std::span<const double> birth_rates() const noexcept { return lambda_; }  // lambda_0 .. lambda_{N-1}

  double f_at(state_t n) const {
    check_level(n);
    return f_[static_cast<std::size_t>(n)];
  }

  Extension extension() const noexcept { return extension_; }

  ScaleTable with_extension(Extension e) const {
    ScaleTable copy = *this;
    copy.extension_ = e;
    return copy;
  }

  /// Continuous extension of f at x in [0, n_max].
  double f_eval(double x) const {
    if (!(x >= 0.0)) throw DomainError("f_eval: x must be >= 0");
    if (x > static_cast<double>(n_max())) throw OutOfRange("f_eval: x beyond table n_max");
    const auto n = static_cast<state_t>(std::floor(x));
    const double theta = x - static_cast<double>(n);
    if (n == n_max() || theta == 0.0) return f_[n];
    if (extension_ == Extension::PiecewiseExponential && n >= 1)
      return std::exp((1.0 - theta) * log_f_[n] + theta * log_f_[n + 1]);
    return f_[n] + theta * m_[n];
  }

  /// Inverse of f_eval; g(0) = 0.
  double g_eval(double t) const {
    if (!(t >= 0.0)) throw DomainError("g_eval: t must be >= 0");
    if (t > f_.back()) throw out_of_range_for(t);
    if (t == 0.0) return 0.0;
    const auto finite_end = f_.begin() + finite_n_max_ + 1;
    if (t > f_[static_cast<std::size_t>(finite_n_max_)]) return g_eval_log(std::log(t));
    // largest n with f_n <= t
    const auto n = static_cast<state_t>(std::upper_bound(f_.begin(), finite_end, t) - f_.begin()) - 1;
    if (f_[n] == t || n == n_max()) return static_cast<double>(n);
    double theta;
    if (extension_ == Extension::PiecewiseExponential && n >= 1)
      theta = (std::log(t) - log_f_[n]) / (log_f_[n + 1] - log_f_[n]);
    else if (std::isfinite(m_[n]))
      theta = (t - f_[n]) / m_[n];
    else
      theta = std::exp(std::log(t) - log_m_[n]) - std::exp(log_f_[n] - log_m_[n]);
    return static_cast<double>(n) + std::clamp(theta, 0.0, 1.0);
  }

  /// Inverse of f_eval at t = exp(log_t). Works past the double overflow of f_n for the
  /// built-in chains.
  double g_eval_log(double log_t) const {
    if (log_t == -std::numeric_limits<double>::infinity()) return 0.0;
    if (std::isnan(log_t)) throw DomainError("g_eval_log: NaN");
    if (log_t > log_f_.back()) throw OutOfRange("g_eval: t beyond f_{n_max}; raise n_max");
    // largest n with log f_n <= log_t
    const auto it = std::upper_bound(log_f_.begin(), log_f_.end(), log_t);
    const auto n = static_cast<state_t>(it - log_f_.begin()) - 1;
    if (log_f_[n] == log_t || n == n_max()) return static_cast<double>(n);
    double theta;
    if (extension_ == Extension::PiecewiseExponential && n >= 1) {
      theta = (log_t - log_f_[n]) / (log_f_[n + 1] - log_f_[n]);
    } else if (std::isfinite(m_[n]) && std::isfinite(f_[n])) {
      theta = (std::exp(log_t) - f_[n]) / m_[n];
    } else {
      theta = std::exp(log_t - log_m_[n]) - std::exp(log_f_[n] - log_m_[n]);
    }
    return static_cast<double>(n) + std::clamp(theta, 0.0, 1.0);
  }

  /// (floor g(t), ceil g(t)) from the knots alone: the largest n with f_n <= t and the
  /// smallest n with f_n >= t.
  std::pair<state_t, state_t> floor_ceil_g(double t) const {
    if (!(t >= 0.0)) throw DomainError("floor_ceil_g: t must be >= 0");
    if (t > f_.back()) throw out_of_range_for(t);
    const auto upper = std::upper_bound(f_.begin(), f_.end(), t);
    const auto lower = std::lower_bound(f_.begin(), f_.end(), t);
    return {static_cast<state_t>(upper - f_.begin()) - 1, static_cast<state_t>(lower - f_.begin())};
  }

  /// Smallest n <= n_max with f_n >= t, or -1.
  state_t level_covering(double t) const {
    const auto it = std::lower_bound(f_.begin(), f_.end(), t);
    return it == f_.end() ? -1 : static_cast<state_t>(it - f_.begin());
  }

  friend ScaleTable compute_scale(const Generator& g, state_t n_max, Extension extension);

 private:
  void check_level(state_t n) const {
    if (n < 0 || n > n_max()) throw OutOfRange("scale table: level " + std::to_string(n) + " outside [0, n_max]");
  }

  OutOfRange out_of_range_for(double t) const {
    return OutOfRange("g_eval: t = " + std::to_string(t) + " exceeds f_{n_max} = " + std::to_string(f_.back()) +
                      " (n_max = " + std::to_string(n_max()) + "); raise n_max");
  }

  std::vector<double> m_, f_, log_m_, log_f_, lambda_;
  state_t requested_n_max_ = 0;
  state_t finite_n_max_ = 0;
  Extension extension_ = Extension::PiecewiseLinear;
};

namespace detail {

// Closed forms in log space for the constant-rate families; used only after the
// recursion overflows. Returns false when the family has no exponential growth.
inline bool log_closed_form(const Generator& g, state_t n, double& log_m, double& log_f) {
  const auto rates = g.constant_rates();
  if (!rates) return false;
  const double lambda = rates->lambda, mu = rates->mu, alpha = rates->alpha();
  const double nn = static_cast<double>(n);
  if (g.kind() == GeneratorKind::Catastrophe) {
    const double c = std::log1p(alpha);
    log_m = nn * c - std::log(lambda);
    log_f = nn * c + std::log(-std::expm1(-nn * c)) - std::log(mu);
    return true;
  }
  if (g.kind() == GeneratorKind::BirthDeath && alpha > 1.0) {
    const double c = std::log(alpha);
    log_m = (nn + 1.0) * c + std::log(-std::expm1(-(nn + 1.0) * c)) - std::log(lambda) - std::log(alpha - 1.0);
    const double correction = -std::exp(-nn * c) - (alpha - 1.0) * nn * std::exp(-(nn + 1.0) * c);
    log_f = (nn + 1.0) * c + std::log1p(correction) - std::log(lambda) - 2.0 * std::log(alpha - 1.0);
    return true;
  }
  return false;
}

}  // namespace detail

/// Scale table via the sparse m-recursion. A general generator whose f overflows is
/// truncated at the last finite level (see overflowed()); the built-in mm1 (alpha > 1)
/// and catastrophe chains continue in log space up to n_max.
inline ScaleTable compute_scale(const Generator& g, state_t n_max,
                                Extension extension = Extension::PiecewiseLinear) {
  if (n_max < 1) throw InvalidParameter("compute_scale: N must be >= 1");
  ScaleTable s;
  s.requested_n_max_ = n_max;
  s.extension_ = extension;
  const auto N = static_cast<std::size_t>(n_max);
  s.m_.reserve(N);
  s.log_m_.reserve(N);
  s.lambda_.reserve(N);
  s.f_.reserve(N + 1);
  s.log_f_.reserve(N + 1);
  s.f_.push_back(0.0);
  s.log_f_.push_back(-std::numeric_limits<double>::infinity());

  bool log_mode = false;
  for (state_t n = 0; n < n_max; ++n) {
    const double lambda = g.birth_rate(n);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("compute_scale: lambda_" + std::to_string(n) + " must be positive and finite");
    s.lambda_.push_back(lambda);

    if (log_mode) {
      double lm, lf;
      detail::log_closed_form(g, n + 1, lm, lf);
      double lm_n, unused;
      detail::log_closed_form(g, n, lm_n, unused);
      s.m_.push_back(std::numeric_limits<double>::infinity());
      s.log_m_.push_back(lm_n);
      s.f_.push_back(std::numeric_limits<double>::infinity());
      s.log_f_.push_back(lf);
      continue;
    }

    const double fn = s.f_[n];
    double drift = 0.0;
    g.visit_down(n, [&](state_t j, double rate) {
      if (j < 0 || j >= n) throw InvalidParameter("compute_scale: downward target out of range at " + std::to_string(n));
      double gap;
      if (n - j <= 32) {
        gap = 0.0;
        for (state_t k = j; k < n; ++k) gap += s.m_[k];
      } else {
        gap = fn - s.f_[j];
      }
      drift += rate * gap;
    });
    const double mn = (1.0 + drift) / lambda;
    const double next = fn + mn;

    if (!std::isfinite(mn) || !std::isfinite(next)) {
      double lm, lf;
      if (!detail::log_closed_form(g, n, lm, lf)) {
        s.lambda_.pop_back();
        break;  // truncated at the last finite level n
      }
      log_mode = true;
      s.finite_n_max_ = n;
      --n;  // redo this level in log space
      s.lambda_.pop_back();
      continue;
    }
    s.m_.push_back(mn);
    s.log_m_.push_back(std::log(mn));
    s.f_.push_back(next);
    s.log_f_.push_back(std::log(next));
  }
  if (!log_mode) s.finite_n_max_ = static_cast<state_t>(s.f_.size()) - 1;
  return s;
}

/// f_n, the expected first time the chain started at 0 reaches level n.
inline double expected_hitting_time(const ScaleTable& s, state_t n) { return s.f_at(n); }

enum class ProbeVerdict { Diverging, Inconclusive };

inline const char* to_string(ProbeVerdict v) {
  return v == ProbeVerdict::Diverging ? "diverging" : "inconclusive";
}

struct ProbeOptions {
  /// f_N must exceed this multiple of f_{N/2}.
  double growth_multiplier = 1.5;
};

struct ProbeResult {
  ProbeVerdict verdict = ProbeVerdict::Inconclusive;
  std::vector<std::pair<state_t, double>> partial_sums;  // (n, f_n) at powers of two and N
};

/// Heuristic check that f_n = sum_{k<n} m_k diverges (equivalently, the chain does not
/// explode). Reports "diverging" when the tail window [N/2, N] adds at least
/// (N/2) * min 1/lambda_n and f_N >= growth_multiplier * f_{N/2}; never claims explosion.
inline ProbeResult nonexplosive_probe(const ScaleTable& s, const ProbeOptions& options = {}) {
  ProbeResult out;
  const state_t N = s.n_max();
  for (state_t n = 1; n < N; n *= 2) out.partial_sums.emplace_back(n, s.f()[n]);
  out.partial_sums.emplace_back(N, s.f()[N]);
  if (N < 2) return out;

  const state_t half = N / 2;
  double min_inverse_rate = std::numeric_limits<double>::infinity();
  for (state_t n = half; n < N; ++n) min_inverse_rate = std::min(min_inverse_rate, 1.0 / s.birth_rates()[n]);
  const double tail = std::isinf(s.f()[N]) ? std::numeric_limits<double>::infinity() : s.f()[N] - s.f()[half];
  const bool linear_tail = tail >= static_cast<double>(N - half) * min_inverse_rate;
  const bool grows = s.log_f()[N] - s.log_f()[half] >= std::log(options.growth_multiplier);
  out.verdict = (linear_tail && grows) ? ProbeVerdict::Diverging : ProbeVerdict::Inconclusive;
  return out;
}

}  // namespace skipfree
