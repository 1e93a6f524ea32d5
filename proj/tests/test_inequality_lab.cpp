#include <gtest/gtest.h>

#include <cmath>

#include <skipfree/inequality_lab.hpp>

#include "oracles.hpp"

using namespace skipfree;

namespace {
const LabOptions serial{1, {}};
}

TEST(EstimatePair, FixedTimeZeroGivesRatioOne) {
  for (const auto& g : {mm1(1, 1), catastrophe(2, 1), pure_birth(3)}) {
    const auto s = compute_scale(g, 20);
    for (const auto& F : {ModerateFunction::power(0.5), ModerateFunction::power(3), ModerateFunction::power_log(1, 1)}) {
      const auto e = estimate_pair(g, s, F, StoppingRule::fixed(0), 100, 1, serial);
      EXPECT_EQ(e.ratio, 1.0);
      EXPECT_EQ(e.max_side.mean, F(1.0));
      EXPECT_EQ(e.max_side.std_error, 0.0);
    }
  }
}

TEST(EstimatePair, TableTooSmallNamesRequiredSize) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 10);  // f_10 = 55
  try {
    estimate_pair(g, s, ModerateFunction::power(1), StoppingRule::fixed(100), 10, 1, serial);
    FAIL() << "expected TableTooSmall";
  } catch (const TableTooSmall& e) {
    EXPECT_EQ(e.required_n_max(), 14);  // f_13 = 91 < 100 <= f_14 = 105
  }
  EXPECT_THROW(estimate_pair(g, s, ModerateFunction::power(1), StoppingRule::hit(3), 10, 1, serial), InvalidParameter);
}

TEST(EstimatePair, SanityBandForQuadraticF) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 200);
  const auto e = estimate_pair(g, s, ModerateFunction::power(2), StoppingRule::fixed(10), 100000, 2);
  EXPECT_TRUE(std::isfinite(e.max_side.mean));
  EXPECT_TRUE(std::isfinite(e.g_side.mean));
  EXPECT_GE(e.ratio, 0.1);
  EXPECT_LE(e.ratio, 10.0);
  EXPECT_DOUBLE_EQ(e.ratio, e.max_side.mean / e.g_side.mean);
  // floor <= g <= ceil on every path, so the secondary columns are ordered
  EXPECT_LE(e.g_floor.mean, e.g_plain.mean);
  EXPECT_LE(e.g_plain.mean, e.g_ceil.mean);
}

TEST(EstimatePair, PureBirthSmallTimeClosedForms) {
  const auto g = pure_birth(1);
  const auto s = compute_scale(g, 50);
  for (double t : {0.1, 1.0}) {
    for (double p : {0.5, 2.0}) {
      const auto e = estimate_pair(g, s, ModerateFunction::power(p), StoppingRule::min_of(t, 1), 100000, 3);
      EXPECT_LE(std::abs(e.max_plain.mean - (1 - std::exp(-t))), 3 * e.max_plain.std_error) << t << " " << p;
      EXPECT_LE(std::abs(e.g_plain.mean - oracle::pure_birth_g_moment(1, t, p)), 3 * e.g_plain.std_error) << t << " " << p;
    }
  }
}

// Without the +1 the ratio degenerates as t -> 0 (to 0 for p < 1, to infinity for p > 1);
// with the +1 it stays near 1.
TEST(EstimatePair, PlusOneIsNeededForSmallTimes) {
  const auto g = pure_birth(1);
  const auto s = compute_scale(g, 50);
  const double t = 1e-3;
  const auto low = estimate_pair(g, s, ModerateFunction::power(0.5), StoppingRule::min_of(t, 1), 100000, 4);
  const auto high = estimate_pair(g, s, ModerateFunction::power(2), StoppingRule::min_of(t, 1), 100000, 4);
  EXPECT_LT(low.max_plain.mean / low.g_plain.mean, 0.1);
  EXPECT_GT(high.max_plain.mean / high.g_plain.mean, 10.0);
  EXPECT_NEAR(low.ratio, 1.0, 0.01);
  EXPECT_NEAR(high.ratio, 1.0, 0.01);
}

TEST(RatioSweep, SingleRuleIsDegenerate) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 200);
  const auto r = ratio_sweep(g, s, ModerateFunction::power(1), {StoppingRule::fixed(5)}, 2000, 5, serial);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.min_ratio, r.max_ratio);
  EXPECT_EQ(r.band, 1.0);
}

TEST(RatioSweep, GridOrderAndBands) {
  const auto rules = rule_grid({0.1, 1, 10}, {2, 0});
  ASSERT_EQ(rules.size(), 6u);
  EXPECT_EQ(rules[0].describe(), "min:0.1,2");
  EXPECT_EQ(rules[1].describe(), "fixed:0.1");
  EXPECT_EQ(rules[5].describe(), "fixed:10");

  const auto g = catastrophe(1, 1);
  const auto s = compute_scale(g, 200);
  const std::vector<ModerateFunction> Fs{ModerateFunction::power(1), ModerateFunction::power(3)};
  const auto res = ratio_sweeps(g, s, Fs, rules, 4000, 6, serial);
  ASSERT_EQ(res.size(), 2u);
  for (const auto& r : res) {
    ASSERT_EQ(r.rows.size(), 6u);
    double lo = INFINITY, hi = 0;
    for (const auto& row : r.rows) {
      EXPECT_GE(row.E_F_max.mean, 0.0);
      EXPECT_GE(row.E_F_g.mean, 0.0);
      EXPECT_DOUBLE_EQ(row.ratio, row.E_F_max.mean / row.E_F_g.mean);
      lo = std::min(lo, row.ratio);
      hi = std::max(hi, row.ratio);
    }
    EXPECT_EQ(r.min_ratio, lo);
    EXPECT_EQ(r.max_ratio, hi);
    EXPECT_DOUBLE_EQ(r.band, hi / lo);
    EXPECT_LE(r.band, 50.0);
  }
}

TEST(Martingale, ZeroTimeIsTrivial) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 20);
  const auto r = martingale_identity_check(g, s, {StoppingRule::min_of(0, 3)}, 100, 1, serial);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.rows[0].f_of_x.mean, 0.0);
  EXPECT_EQ(r.rows[0].tau.mean, 0.0);
}

TEST(Martingale, Mm1HittingTime) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 20);
  const auto r = martingale_identity_check(g, s, {StoppingRule::min_of(1e4, 3)}, 100000, 2);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.rows[0].f_of_x.mean, 6.0);  // every path reaches 3
  EXPECT_LE(std::abs(r.rows[0].tau.mean - 6.0), 3 * r.rows[0].tau.std_error);
}

TEST(Martingale, CatastropheAgainstLargerRun) {
  const auto g = catastrophe(1, 1);
  const auto s = compute_scale(g, 20);
  const auto rule = StoppingRule::min_of(5, 4);
  const auto r = martingale_identity_check(g, s, {rule}, 100000, 3);
  EXPECT_TRUE(r.pass);
  const auto big = martingale_identity_check(g, s, {rule}, 1000000, 4);
  EXPECT_TRUE(big.pass);
  const auto& a = r.rows[0];
  const auto& b = big.rows[0];
  EXPECT_LE(std::abs(a.tau.mean - b.tau.mean), 4 * joint_std_error(a.tau, b.tau));
  EXPECT_LE(std::abs(a.f_of_x.mean - b.f_of_x.mean), 4 * joint_std_error(a.f_of_x, b.f_of_x));
}

TEST(Martingale, RequiresLevel) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 20);
  EXPECT_THROW(martingale_identity_check(g, s, {StoppingRule::fixed(3)}, 10, 1, serial), InvalidParameter);
  EXPECT_THROW(martingale_identity_check(g, s, {StoppingRule::min_of(3, 30)}, 10, 1, serial), OutOfRange);
}

TEST(GoodLambda, RatioShrinksWithDelta) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 400);
  std::vector<state_t> ks;
  for (state_t k = 4; k <= 12; ++k) ks.push_back(k);
  for (const auto& rule : {StoppingRule::fixed(50), StoppingRule::min_of(50, 12)}) {
    const auto rows = good_lambda_probe(g, s, 2.0, {0.4, 0.2, 0.1}, ks, rule, 20000, 7, serial);
    ASSERT_EQ(rows.size(), 27u);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto& r04 = rows[i];
      const auto& r01 = rows[2 * ks.size() + i];
      ASSERT_EQ(r04.k, r01.k);
      if (r04.denominator_count < 30) continue;
      EXPECT_LE(r01.ratio, r04.ratio) << "k=" << r04.k;
      if (r04.ratio > 0) {
        EXPECT_LT(r01.ratio, r04.ratio) << "k=" << r04.k;
      }
    }
  }
}

TEST(GoodLambda, EdgeCells) {
  const auto g = mm1(1, 1);
  const auto s = compute_scale(g, 400);
  const auto rows = good_lambda_probe(g, s, 2.0, {100.0, 0.05}, {5}, StoppingRule::fixed(20), 5000, 8, serial);
  // delta k beyond any reachable g: the joint event reduces to X* >= 2k
  EXPECT_LE(rows[0].ratio, 1.0);
  EXPECT_GT(rows[0].ratio, 0.0);
  // floor(0.05 * 5) = 0: g(tau) < 0 is impossible
  EXPECT_EQ(rows[1].joint.mean, 0.0);
  EXPECT_EQ(rows[1].ratio, 0.0);

  const auto none = good_lambda_probe(g, s, 2.0, {0.5}, {1000}, StoppingRule::fixed(1), 100, 8, serial);
  EXPECT_TRUE(none[0].zero_denominator);
  EXPECT_THROW(good_lambda_probe(g, s, 1.0, {0.5}, {4}, StoppingRule::fixed(1), 10, 1, serial), InvalidParameter);
}

TEST(TailIdentity, WorkedExamples) {
  const std::vector<double> point{1.0};
  const auto F2 = ModerateFunction::power(2);
  auto r = tail_identity_check(point, F2, 1.0);
  EXPECT_EQ(r.lhs, 1.0);
  EXPECT_EQ(r.rhs, 1.0);

  const std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
  r = tail_identity_check(uniform, F2, 2.0);
  EXPECT_NEAR(r.lhs, 7.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.rhs, 7.0 / 6.0, 1e-15);

  std::vector<double> geometric(11);
  double z = 0;
  for (int k = 0; k <= 10; ++k) z += geometric[k] = std::pow(0.5, k);
  double direct = 0;
  for (int k = 0; k <= 10; ++k) {
    geometric[k] /= z;
    direct += geometric[k] * (k + 1) / 3.0;
  }
  r = tail_identity_check(geometric, ModerateFunction::power(1), 3.0);
  EXPECT_NEAR(r.rhs, direct, 1e-14);
  EXPECT_LE(r.abs_diff, 1e-12);
}

TEST(TailIdentity, RandomInstances) {
  const auto rows = tail_identity_suite(100, 7);
  ASSERT_EQ(rows.size(), 100u);
  for (const auto& row : rows) EXPECT_LE(row.rel_diff, 1e-12) << row.function_name << " K=" << row.support;
}

TEST(TailIdentity, RejectsInvalidDistributions) {
  const auto F = ModerateFunction::power(1);
  EXPECT_THROW(tail_identity_check(std::vector<double>{}, F, 2), InvalidParameter);
  EXPECT_THROW(tail_identity_check(std::vector<double>{0.5, 0.4}, F, 2), InvalidParameter);
  EXPECT_THROW(tail_identity_check(std::vector<double>{1.5, -0.5}, F, 2), InvalidParameter);
  EXPECT_THROW(tail_identity_check(std::vector<double>{1.0}, F, 0), InvalidParameter);
}

TEST(GrowthFit, RecoversSyntheticLaws) {
  std::vector<double> t;
  for (int i = 0; i <= 20; ++i) t.push_back(std::pow(10.0, 3.0 * i / 20));
  auto check = [&](auto law, GrowthLaw expected, double coefficient) {
    std::vector<double> y;
    for (double x : t) y.push_back(1.5 + coefficient * law(x));
    const auto fits = fit_growth_laws(t, y);
    const auto best = std::min_element(fits.begin(), fits.end(), [](auto& a, auto& b) { return a.sse < b.sse; });
    EXPECT_EQ(best->law, expected);
    EXPECT_NEAR(best->coefficient, coefficient, 1e-9);
    EXPECT_NEAR(best->intercept, 1.5, 1e-7);
  };
  check([](double x) { return x; }, GrowthLaw::Linear, 0.5);
  check([](double x) { return std::sqrt(x); }, GrowthLaw::SquareRoot, 1.4);
  check([](double x) { return std::log(x); }, GrowthLaw::Logarithmic, 2.0);
}

TEST(PhaseTransition, RefusesShortGrid) {
  EXPECT_THROW(phase_transition_experiment({0.5}, 1.0, {1, 5, 50}, 10, 1, serial), InvalidParameter);
  EXPECT_THROW(phase_transition_experiment({0.5}, 1.0, {1, 50, 10}, 10, 1, serial), InvalidParameter);
}

TEST(PhaseTransition, SubcriticalQueueGrowsLinearly) {
  std::vector<double> t;
  for (int i = 0; i <= 10; ++i) t.push_back(std::pow(10.0, 0.3 * i));
  const auto r = phase_transition_experiment({0.5}, 1.0, t, 2000, 9, serial);
  ASSERT_EQ(r.entries.size(), 2u);
  EXPECT_EQ(r.entries[0].family, "mm1");
  EXPECT_EQ(r.entries[0].best_law, GrowthLaw::Linear);
  EXPECT_LE(r.entries[0].coefficient_rel_error, 0.15);
  EXPECT_EQ(r.entries[1].family, "catastrophe");
  EXPECT_EQ(r.entries[1].best_law, GrowthLaw::Logarithmic);
  EXPECT_NEAR(r.entries[1].expected_coefficient, 1 / std::log(1.5), 1e-12);
}
