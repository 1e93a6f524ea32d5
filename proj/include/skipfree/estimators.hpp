#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>

namespace skipfree {

inline constexpr double kZ95 = 1.959963984540054;

/// Monte Carlo mean with its standard error and a 95% interval.
struct EstimatorReport {
  double mean = 0.0;
  double std_error = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Welford accumulator. Feed samples in a fixed order for reproducible output.
class RunningMoments {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const noexcept { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

  EstimatorReport report(std::uint64_t seed = 0) const noexcept {
    const double se = std_error();
    return {mean_, se, {mean_ - kZ95 * se, mean_ + kZ95 * se}, n_, seed};
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline EstimatorReport mean_report(std::span<const double> samples, std::uint64_t seed = 0) {
  RunningMoments acc;
  for (double x : samples) acc.add(x);
  return acc.report(seed);
}

/// Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Binomial proportion with normal-approximation interval; Wilson when fewer than 30
/// successes or failures were observed.
inline EstimatorReport proportion_report(std::uint64_t successes, std::uint64_t n, std::uint64_t seed = 0) {
  EstimatorReport r;
  r.n_samples = n;
  r.seed = seed;
  if (n == 0) return r;
  const double nn = static_cast<double>(n);
  r.mean = static_cast<double>(successes) / nn;
  r.std_error = std::sqrt(r.mean * (1.0 - r.mean) / nn);
  if (std::min(successes, n - successes) < 30) {
    r.ci95 = wilson_interval(successes, n);
    r.ci95.first = std::min(r.ci95.first, r.mean);
    r.ci95.second = std::max(r.ci95.second, r.mean);
  } else {
    r.ci95 = {std::max(0.0, r.mean - kZ95 * r.std_error), std::min(1.0, r.mean + kZ95 * r.std_error)};
  }
  return r;
}

/// Standard error of a difference of independent estimates.
inline double joint_std_error(const EstimatorReport& a, const EstimatorReport& b) noexcept {
  return std::hypot(a.std_error, b.std_error);
}

}  // namespace skipfree
