#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <skipfree/conditions.hpp>
#include <skipfree/scale_function.hpp>

using namespace skipfree;

namespace {

std::vector<double> delta_grid() {
  std::vector<double> d;
  for (double x = 0.5; x > 0.003; x /= 2) d.push_back(x);
  return d;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo * std::pow(hi / lo, i / double(points - 1)));
  return g;
}

struct PhasePoint {
  double alpha, p;
  Trend expected;
};

}  // namespace

TEST(PowerIncrement, StableAgainstLongDouble) {
  for (double p : {0.1, 0.5, 1.0, 2.5}) {
    for (double k : {2.0, 10.0, 1000.0}) {
      const long double ref = std::pow((long double)k, (long double)p) - std::pow((long double)k - 1, (long double)p);
      EXPECT_NEAR(power_increment(k, p), (double)ref, 1e-12 * (double)ref) << p << " " << k;
    }
    // large k: p k^{p-1} (1 - (p-1)/(2k)) to second order
    const double k = 1e9;
    const double approx = p * std::pow(k, p - 1) * (1 - (p - 1) / (2 * k));
    EXPECT_NEAR(power_increment(k, p), approx, 1e-9 * approx);
  }
  EXPECT_EQ(power_increment(1.0, 3.0), 1.0);
}

// The phase diagram of the Peskir condition for the M/M/1 queue: for alpha < 1 it holds
// iff p < 1, for alpha = 1 iff p < 2, and for alpha > 1 for every p.
TEST(Peskir, Mm1PhaseDiagram) {
  const std::vector<PhasePoint> grid{
      {0.5, 0.25, Trend::Bounded}, {0.5, 0.5, Trend::Bounded},  {0.5, 0.75, Trend::Bounded},
      {0.5, 0.9, Trend::Bounded},  {0.5, 1.1, Trend::Growing},  {0.5, 1.5, Trend::Growing},
      {0.5, 2.0, Trend::Growing},  {1.0, 0.5, Trend::Bounded},  {1.0, 1.0, Trend::Bounded},
      {1.0, 1.5, Trend::Bounded},  {1.0, 1.9, Trend::Bounded},  {1.0, 2.1, Trend::Growing},
      {1.0, 3.0, Trend::Growing},  {2.0, 0.5, Trend::Bounded},  {2.0, 1.0, Trend::Bounded},
      {2.0, 2.0, Trend::Bounded},  {2.0, 5.0, Trend::Bounded}};
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto s = compute_scale(mm1(1, alpha), 2000);
    for (const auto& pt : grid) {
      if (pt.alpha != alpha) continue;
      const auto v = peskir_check(s, pt.p, 2000);
      EXPECT_EQ(v.trend, pt.expected) << "alpha=" << alpha << " p=" << pt.p << " got " << to_string(v.trend);
    }
  }
}

TEST(Peskir, SubcriticalHalfPowerBoundedByTwo) {
  const auto v = peskir_check(compute_scale(mm1(1, 0.5), 2000), 0.5, 2000);
  EXPECT_EQ(v.trend, Trend::Bounded);
  EXPECT_LE(v.sup_value, 2.0);
}

TEST(Peskir, CatastropheBoundedForAnyP) {
  const auto s = compute_scale(catastrophe(1, 1), 2000);
  for (double p : {0.5, 3.0, 10.0}) EXPECT_EQ(peskir_check(s, p, 2000).trend, Trend::Bounded) << p;
}

TEST(Peskir, TraceInvariants) {
  const auto v = peskir_check(compute_scale(mm1(1, 1), 400), 1.5, 400);
  ASSERT_EQ(v.per_n_trace.size(), 200u);
  double sup = 0;
  for (const auto& [n, s] : v.per_n_trace) {
    ASSERT_GE(s, 0.0);
    sup = std::max(sup, s);
  }
  EXPECT_EQ(v.sup_value, sup);
  EXPECT_EQ(v.truncation, 400);
}

TEST(Peskir, TraceMatchesDirectSum) {
  const auto s = compute_scale(mm1(1, 0.8), 100);
  const double p = 1.3;
  const auto v = peskir_check(s, p, 100);
  for (state_t n : {1, 7, 50}) {
    double sum = 0;
    for (state_t k = n + 1; k <= 100; ++k) sum += (std::pow(k, p) - std::pow(k - 1, p)) / s.f_at(k);
    EXPECT_NEAR(v.per_n_trace[n - 1].second, s.f_at(n) / std::pow(n, p) * sum, 1e-10);
  }
}

TEST(Peskir, RejectsBadArguments) {
  const auto s = compute_scale(mm1(1, 1), 100);
  EXPECT_THROW(peskir_check(s, 0.0, 100), InvalidParameter);
  EXPECT_THROW(peskir_check(s, 1.0, 4), InvalidParameter);
  EXPECT_THROW(peskir_check(s, 1.0, 101), OutOfRange);
}

TEST(Dilation, Mm1PassesWithBetaTwo) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto v = dilation_check(compute_scale(mm1(1, alpha), 4000), 2.0, 10, delta_grid(), 2000, 0.05);
    EXPECT_TRUE(v.passes) << alpha;
    for (double c : v.sup_curve) EXPECT_GE(c, 0.0);
  }
}

TEST(Dilation, CatastrophePassesForAnyBeta) {
  const auto s = compute_scale(catastrophe(1, 1), 6000);
  for (double beta : {1.5, 3.0}) EXPECT_TRUE(dilation_check(s, beta, 10, delta_grid(), 2000, 0.05).passes) << beta;
}

TEST(Dilation, LinearScaleGivesDeltaOverBetaMinusOne) {
  const auto s = compute_scale(pure_birth(1), 5000);
  for (double beta : {1.5, 2.0, 3.0}) {
    const auto v = dilation_check(s, beta, 100, delta_grid(), 1000, 0.05);
    EXPECT_TRUE(v.passes);
    for (std::size_t i = 0; i < v.delta_grid.size(); ++i) {
      const double target = v.delta_grid[i] / (beta - 1.0);
      EXPECT_LE(v.sup_curve[i], target * 1.05);
      EXPECT_GE(v.sup_curve[i], target * 0.9);
    }
  }
}

// For alpha > 1 the ratio behaves like (y^delta - 1)/(y^2 - y) with y = alpha^k, which is
// controlled by y^{delta - 1}.
TEST(Dilation, SupercriticalCurveBelowEnvelope) {
  const double alpha = 2.0;
  const auto s = compute_scale(mm1(1, alpha), 4000);
  const state_t M = 10;
  const auto v = dilation_check(s, 2.0, M, delta_grid(), 2000, 0.05);
  for (std::size_t i = 0; i < v.delta_grid.size(); ++i) {
    const double y = std::pow(alpha, static_cast<double>(v.argmax_k[i]));
    const double envelope = std::max(std::pow(y, v.delta_grid[i] - 1.0), std::pow(y, v.delta_grid[i]) - 1.0);
    EXPECT_LE(v.sup_curve[i], envelope) << v.delta_grid[i];
  }
}

TEST(Dilation, RejectsShortTable) {
  const auto s = compute_scale(mm1(1, 1), 100);
  EXPECT_THROW(dilation_check(s, 2.0, 10, {0.5}, 80, 0.05), OutOfRange);
  EXPECT_THROW(dilation_check(s, 1.0, 10, {0.5}, 40, 0.05), InvalidParameter);
}

TEST(Moderate, PowerRatios) {
  const auto grid = log_grid(1e-3, 1e6, 200);
  const auto e = moderate_check(ModerateFunction::power(2), 3.0, grid);
  EXPECT_NEAR(e.sup_ratio, 9.0, 1e-12);
  EXPECT_TRUE(e.is_moderate_evidence);
  EXPECT_LT(e.bound_gap, 1e-12);
  for (double p : {0.1, 0.5, 1.0, 4.0}) {
    EXPECT_TRUE(moderate_check(ModerateFunction::power(p), 2.0, grid).is_moderate_evidence) << p;
    EXPECT_DOUBLE_EQ(*ModerateFunction::power(p).beta_ratio_bound(2.0), std::pow(2.0, p));
  }
  EXPECT_TRUE(moderate_check(ModerateFunction::power_log(1, 2), 2.0, grid).is_moderate_evidence);
}

TEST(Moderate, ExponentialIsNotModerate) {
  const auto F = ModerateFunction::user([](double x) { return std::expm1(x); }, "exp");
  const auto e = moderate_check(F, 2.0, log_grid(1e-3, 1e3, 200));
  EXPECT_FALSE(e.is_moderate_evidence);
  EXPECT_GT(e.sup_ratio, 1e100);
}

TEST(Moderate, RejectsInvalidCandidates) {
  const auto zero = ModerateFunction::user([](double x) { return x < 1 ? 0.0 : x; });
  EXPECT_THROW(moderate_check(zero, 2.0, log_grid(1e-3, 1e6, 50)), InvalidParameter);
  EXPECT_THROW(moderate_check(ModerateFunction::power(1), 2.0, log_grid(1, 10, 5)), InvalidParameter);
  EXPECT_THROW(ModerateFunction::power(0), InvalidParameter);
}

TEST(Mm1Asymptotics, HValues) {
  EXPECT_DOUBLE_EQ(h_mm1(1.0, 1.0)(4.0), 8.0);
  EXPECT_DOUBLE_EQ(h_mm1(0.5, 1.0)(3.0), 6.0);
  for (double a : {0.5, 1.0, 3.0}) EXPECT_EQ(h_mm1(a, 2.0)(0.0), 0.0);
}

TEST(Mm1Asymptotics, GPredictions) {
  EXPECT_DOUBLE_EQ(g_asymptote_mm1(0.5, 2.0)(7.0), 7.0);
  EXPECT_DOUBLE_EQ(g_asymptote_mm1(1.0, 2.0)(9.0), 6.0);
  EXPECT_NEAR(g_asymptote_mm1(4.0, 1.0)(64.0), 3.0, 1e-12);
}

TEST(Mm1Asymptotics, GMatchesPredictionFarOut) {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto s = compute_scale(mm1(1, alpha), 1000);
    const double log_t = s.log_f()[1000];
    const double g = s.g_eval_log(log_t);
    const double predicted =
        alpha > 1 ? log_t / std::log(alpha) : g_asymptote_mm1(alpha, 1.0)(std::exp(log_t));
    EXPECT_LE(std::abs(g / predicted - 1.0), 0.1) << alpha;
  }
}
