#pragma once

// Upward skip-free generators on the nonnegative integers.
//
// A generator is described row by row: the birth rate lambda_n = q(n, n+1) and a sparse
// list of downward rates q(n, j), j < n. Rows are produced on demand so the (infinite)
// state space is never materialized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace skipfree {

struct RateEntry {
  state_t target;
  double rate;

  friend bool operator==(const RateEntry&, const RateEntry&) = default;
};

/// Sparse row of downward rates, sorted by target.
using DownRates = std::vector<RateEntry>;

/// n -> rate. Used for state-dependent birth or death sequences.
using RateSequence = std::function<double(state_t)>;
using DownRateFunction = std::function<DownRates(state_t)>;

/// Constant-rate sequence.
inline RateSequence constant_rate(double value) {
  return [value](state_t) { return value; };
}

/// Finite table; states past the end reuse the last entry.
inline RateSequence tabulated_rate(std::vector<double> values) {
  if (values.empty()) throw InvalidParameter("tabulated_rate: empty table");
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  return [table](state_t n) {
    const auto i = static_cast<std::size_t>(std::min<state_t>(n, static_cast<state_t>(table->size()) - 1));
    return (*table)[i];
  };
}

enum class GeneratorKind { BirthDeath, Catastrophe, ExplicitTruncated, Callback };

inline const char* to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::BirthDeath: return "birth_death";
    case GeneratorKind::Catastrophe: return "catastrophe";
    case GeneratorKind::ExplicitTruncated: return "explicit";
    case GeneratorKind::Callback: return "callback";
  }
  return "unknown";
}

/// (lambda, mu) for the two constant-rate families (M/M/1 and the catastrophe chain).
struct ConstantRates {
  double lambda;
  double mu;
  /// Ratio of total death to birth rate.
  double alpha() const noexcept { return mu / lambda; }
};

/// Immutable after construction; copies share state and are safe across threads.
class Generator {
 public:
  GeneratorKind kind() const noexcept { return kind_; }

  /// Truncation level for ExplicitTruncated generators.
  std::optional<state_t> state_cap() const noexcept { return state_cap_; }

  /// Set for mm1(...) and catastrophe(...) built-ins (and constant-rate equivalents).
  std::optional<ConstantRates> constant_rates() const noexcept { return constant_; }

  double birth_rate(state_t n) const {
    if (constant_) return constant_->lambda;
    switch (kind_) {
      case GeneratorKind::BirthDeath:
      case GeneratorKind::Catastrophe:
      case GeneratorKind::Callback:
        return birth_(n);
      case GeneratorKind::ExplicitTruncated:
        return explicit_->birth(n);
    }
    return 0.0;
  }

  /// Total downward rate mu_n = sum_{j<n} q(n, j).
  double death_rate(state_t n) const {
    if (n <= 0) return 0.0;
    switch (kind_) {
      case GeneratorKind::BirthDeath:
      case GeneratorKind::Catastrophe:
        return constant_ ? constant_->mu : death_(n);
      case GeneratorKind::ExplicitTruncated:
      case GeneratorKind::Callback: {
        double total = 0.0;
        for (const auto& e : down_rates(n)) total += e.rate;
        return total;
      }
    }
    return 0.0;
  }

  DownRates down_rates(state_t n) const {
    if (n <= 0 && kind_ != GeneratorKind::Callback && kind_ != GeneratorKind::ExplicitTruncated)
      return {};
    switch (kind_) {
      case GeneratorKind::BirthDeath: {
        const double mu = death_rate(n);
        if (mu == 0.0) return {};
        return {{n - 1, mu}};
      }
      case GeneratorKind::Catastrophe: {
        const double mu = death_rate(n);
        if (mu == 0.0) return {};
        return {{0, mu}};
      }
      case GeneratorKind::ExplicitTruncated:
        return explicit_->down(n);
      case GeneratorKind::Callback: {
        DownRates row = down_(n);
        std::sort(row.begin(), row.end(),
                  [](const RateEntry& a, const RateEntry& b) { return a.target < b.target; });
        return row;
      }
    }
    return {};
  }

  /// Calls visit(target, rate) for each downward entry of row n without allocating for
  /// the birth-death and catastrophe kinds.
  template <class Visit>
  void visit_down(state_t n, Visit&& visit) const {
    if (kind_ == GeneratorKind::BirthDeath || kind_ == GeneratorKind::Catastrophe) {
      if (n <= 0) return;
      const double mu = death_rate(n);
      if (mu != 0.0) visit(kind_ == GeneratorKind::BirthDeath ? n - 1 : state_t{0}, mu);
      return;
    }
    for (const auto& e : down_rates(n)) visit(e.target, e.rate);
  }

  /// Upward jumps of size >= 2 recorded by an explicit generator, as (from, to, rate).
  /// Always empty for the other kinds, which cannot express them.
  std::vector<std::tuple<state_t, state_t, double>> illegal_up_jumps() const {
    if (kind_ != GeneratorKind::ExplicitTruncated) return {};
    return explicit_->illegal;
  }

  // Factories; defined below.
  friend Generator mm1(double lambda, double mu);
  friend Generator catastrophe(double lambda, double mu);
  friend Generator birth_death(RateSequence lambda, RateSequence mu);
  friend Generator catastrophe_chain(RateSequence lambda, double mu);
  friend Generator explicit_generator(const std::vector<std::tuple<state_t, state_t, double>>& rates,
                                      std::optional<state_t> state_cap);
  friend Generator callback_generator(RateSequence birth, DownRateFunction down);

 private:
  struct ExplicitRows {
    std::map<state_t, double> births;
    std::map<state_t, DownRates> downs;
    std::vector<std::tuple<state_t, state_t, double>> illegal;

    double birth(state_t n) const {
      auto it = births.find(n);
      return it == births.end() ? 0.0 : it->second;
    }
    DownRates down(state_t n) const {
      auto it = downs.find(n);
      return it == downs.end() ? DownRates{} : it->second;
    }
  };

  GeneratorKind kind_ = GeneratorKind::BirthDeath;
  std::optional<ConstantRates> constant_;
  std::optional<state_t> state_cap_;
  RateSequence birth_;
  RateSequence death_;
  DownRateFunction down_;
  std::shared_ptr<const ExplicitRows> explicit_;
};

namespace detail {
inline void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw InvalidParameter(std::string(what) + " must be a positive finite rate");
}
}  // namespace detail

/// M/M/1 queue: lambda_n = lambda, q(n, n-1) = mu for n >= 1.
inline Generator mm1(double lambda, double mu) {
  detail::require_positive(lambda, "mm1: lambda");
  detail::require_positive(mu, "mm1: mu");
  Generator g;
  g.kind_ = GeneratorKind::BirthDeath;
  g.constant_ = ConstantRates{lambda, mu};
  return g;
}

/// Catastrophe chain: lambda_n = lambda, q(n, 0) = mu for n >= 1, no other downward moves.
inline Generator catastrophe(double lambda, double mu) {
  detail::require_positive(lambda, "catastrophe: lambda");
  detail::require_positive(mu, "catastrophe: mu");
  Generator g;
  g.kind_ = GeneratorKind::Catastrophe;
  g.constant_ = ConstantRates{lambda, mu};
  return g;
}

/// Catastrophe chain with state-dependent birth rates.
inline Generator catastrophe_chain(RateSequence lambda, double mu) {
  if (!lambda) throw InvalidParameter("catastrophe_chain: missing birth sequence");
  detail::require_positive(mu, "catastrophe_chain: mu");
  Generator g;
  g.kind_ = GeneratorKind::Catastrophe;
  g.birth_ = std::move(lambda);
  g.death_ = constant_rate(mu);
  return g;
}

/// Birth-death chain with lambda_n = lambda(n) and q(n, n-1) = mu(n) for n >= 1.
/// Rates are checked lazily (see validate); a sequence that is not positive at 0 is
/// rejected immediately.
inline Generator birth_death(RateSequence lambda, RateSequence mu) {
  if (!lambda || !mu) throw InvalidParameter("birth_death: missing rate sequence");
  if (!(lambda(0) > 0.0)) throw InvalidParameter("birth_death: lambda_0 must be positive");
  Generator g;
  g.kind_ = GeneratorKind::BirthDeath;
  g.birth_ = std::move(lambda);
  g.death_ = std::move(mu);
  return g;
}

/// Birth-death chain from finite tables; each table's last value is held for larger n.
inline Generator birth_death(const std::vector<double>& lambda, const std::vector<double>& mu) {
  for (double l : lambda) detail::require_positive(l, "birth_death: lambda_n");
  for (double m : mu)
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidParameter("birth_death: mu_n must be >= 0");
  std::vector<double> mu_table = mu.empty() ? std::vector<double>{0.0} : mu;
  return birth_death(tabulated_rate(lambda), tabulated_rate(std::move(mu_table)));
}

/// Pure birth process with constant rate.
inline Generator pure_birth(double lambda) {
  detail::require_positive(lambda, "pure_birth: lambda");
  return birth_death(constant_rate(lambda), constant_rate(0.0));
}

/// Generator from a row-sparse list of (from, to, rate) triples. Entries with
/// to == from + 1 are birth rates, to < from downward rates; to >= from + 2 is kept
/// and reported by validate as a skip-free violation. States above `state_cap`
/// (default: largest state mentioned) have no rates.
inline Generator explicit_generator(const std::vector<std::tuple<state_t, state_t, double>>& rates,
                                    std::optional<state_t> state_cap = std::nullopt) {
  auto rows = std::make_shared<Generator::ExplicitRows>();
  state_t largest = 0;
  for (const auto& [from, to, rate] : rates) {
    if (from < 0 || to < 0) throw InvalidParameter("explicit generator: negative state");
    largest = std::max({largest, from, to});
    if (to == from) continue;
    if (to == from + 1) {
      rows->births[from] += rate;
    } else if (to < from) {
      auto& row = rows->downs[from];
      auto it = std::find_if(row.begin(), row.end(), [to = to](const RateEntry& e) { return e.target == to; });
      if (it == row.end())
        row.push_back({to, rate});
      else
        it->rate += rate;
    } else {
      rows->illegal.emplace_back(from, to, rate);
    }
  }
  for (auto& [n, row] : rows->downs)
    std::sort(row.begin(), row.end(), [](const RateEntry& a, const RateEntry& b) { return a.target < b.target; });
  Generator g;
  g.kind_ = GeneratorKind::ExplicitTruncated;
  g.state_cap_ = state_cap.value_or(largest);
  g.explicit_ = std::move(rows);
  return g;
}

/// Fully user-defined rows.
inline Generator callback_generator(RateSequence birth, DownRateFunction down) {
  if (!birth || !down) throw InvalidParameter("callback generator: missing callback");
  Generator g;
  g.kind_ = GeneratorKind::Callback;
  g.birth_ = std::move(birth);
  g.down_ = std::move(down);
  return g;
}

/// G_n(k) = sum_{j=0}^{k} q(n, j), the mass of downward rates from n into {0..k}.
inline double cumulative_down(const Generator& g, state_t n, state_t k) {
  if (k < 0 || k >= n) throw DomainError("cumulative_down: requires 0 <= k < n");
  double sum = 0.0;
  g.visit_down(n, [&](state_t j, double rate) {
    if (j <= k) sum += rate;
  });
  return sum;
}

struct Violation {
  state_t state;
  std::string description;
};

struct ValidationReport {
  bool ok = true;
  std::vector<Violation> violations;
};

/// Checks the generator on states 0..up_to and lists every violation found.
inline ValidationReport validate(const Generator& g, state_t up_to) {
  if (up_to < 1) throw InvalidParameter("validate: up_to must be >= 1");
  ValidationReport report;
  auto flag = [&](state_t n, std::string what) { report.violations.push_back({n, std::move(what)}); };

  for (const auto& [from, to, rate] : g.illegal_up_jumps())
    if (from <= up_to)
      flag(from, "not skip-free: upward jump " + std::to_string(from) + " -> " + std::to_string(to) +
                     " (rate " + std::to_string(rate) + ")");

  // a truncated generator has no states above its cap and no birth out of the cap
  const state_t last = g.state_cap() ? std::min(up_to, *g.state_cap()) : up_to;
  const state_t last_birth = g.state_cap() ? *g.state_cap() : -1;
  for (state_t n = 0; n <= last; ++n) {
    const double lambda = g.birth_rate(n);
    if (!std::isfinite(lambda))
      flag(n, "birth rate is not finite");
    else if (!(lambda > 0.0) && n != last_birth)
      flag(n, "birth rate lambda_" + std::to_string(n) + " must be positive (got " + std::to_string(lambda) + ")");

    double total = lambda;
    for (const auto& [j, rate] : g.down_rates(n)) {
      if (j >= n + 2)
        flag(n, "not skip-free: upward jump " + std::to_string(n) + " -> " + std::to_string(j));
      else if (j >= n)
        flag(n, "downward entry with target " + std::to_string(j) + " >= state");
      else if (j < 0)
        flag(n, "negative target state");
      if (!std::isfinite(rate))
        flag(n, "downward rate is not finite");
      else if (rate < 0.0)
        flag(n, "negative downward rate q(" + std::to_string(n) + "," + std::to_string(j) + ")");
      total += rate;
    }
    if (std::isfinite(lambda) && !std::isfinite(total)) flag(n, "total exit rate is not finite");
  }
  report.ok = report.violations.empty();
  return report;
}

}  // namespace skipfree
