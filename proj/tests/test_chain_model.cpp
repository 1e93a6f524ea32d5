#include <gtest/gtest.h>

#include <random>

#include <skipfree/chain_model.hpp>

#include "oracles.hpp"

using namespace skipfree;

namespace {
bool mentions(const ValidationReport& r, state_t state, const std::string& text) {
  for (const auto& v : r.violations)
    if (v.state == state && v.description.find(text) != std::string::npos) return true;
  return false;
}
}  // namespace

TEST(Mm1, RatesOutOfEachState) {
  const auto g = mm1(1, 2);
  EXPECT_EQ(g.birth_rate(7), 1.0);
  const auto row = g.down_rates(7);
  ASSERT_EQ(row.size(), 1u);
  EXPECT_EQ(row[0].target, 6);
  EXPECT_EQ(row[0].rate, 2.0);
  EXPECT_TRUE(g.down_rates(0).empty());
  EXPECT_EQ(mm1(3, 3).constant_rates()->alpha(), 1.0);
}

TEST(Catastrophe, JumpsOnlyToZero) {
  const auto g = catastrophe(1, 2);
  auto row = g.down_rates(5);
  ASSERT_EQ(row.size(), 1u);
  EXPECT_EQ(row[0].target, 0);
  EXPECT_EQ(row[0].rate, 2.0);
  row = g.down_rates(1);
  ASSERT_EQ(row.size(), 1u);
  EXPECT_EQ(row[0].target, 0);
}

TEST(Catastrophe, SameTotalRatesAsMm1) {
  const auto c = catastrophe(2, 1);
  const auto q = mm1(2, 1);
  for (state_t n = 0; n < 50; ++n) {
    EXPECT_EQ(c.birth_rate(n), q.birth_rate(n));
    EXPECT_EQ(c.death_rate(n), q.death_rate(n));
  }
}

TEST(Mm1AndCatastrophe, AgreeOutOfStatesZeroAndOne) {
  const auto c = catastrophe(1.5, 0.7);
  const auto q = mm1(1.5, 0.7);
  for (state_t n : {0, 1}) {
    EXPECT_EQ(c.birth_rate(n), q.birth_rate(n));
    const auto a = c.down_rates(n), b = q.down_rates(n);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].target, b[i].target);
      EXPECT_EQ(a[i].rate, b[i].rate);
    }
  }
}

TEST(Factories, RejectNonpositiveRates) {
  EXPECT_THROW(mm1(0, 1), InvalidParameter);
  EXPECT_THROW(mm1(1, -1), InvalidParameter);
  EXPECT_THROW(catastrophe(1, 0), InvalidParameter);
  EXPECT_THROW(pure_birth(0), InvalidParameter);
  EXPECT_THROW(birth_death(std::vector<double>{1, 0}, std::vector<double>{0, 1}), InvalidParameter);
  EXPECT_THROW(birth_death(constant_rate(0), constant_rate(1)), InvalidParameter);
}

TEST(BirthDeath, PureBirthAndMm1Equivalent) {
  const auto pb = birth_death(constant_rate(2), constant_rate(0));
  EXPECT_TRUE(pb.down_rates(4).empty());
  EXPECT_EQ(pb.birth_rate(4), 2.0);

  const auto bd = birth_death(constant_rate(1), constant_rate(2));
  const auto q = mm1(1, 2);
  for (state_t n = 0; n < 30; ++n) {
    EXPECT_EQ(bd.birth_rate(n), q.birth_rate(n));
    EXPECT_EQ(bd.death_rate(n), q.death_rate(n));
  }
}

TEST(BirthDeath, MonotoneRateChainIsValid) {
  const auto g = birth_death([](state_t n) { return 1.0 / static_cast<double>(n + 1); },
                             [](state_t n) { return static_cast<double>(n); });
  EXPECT_TRUE(validate(g, 200).ok);
  EXPECT_DOUBLE_EQ(g.birth_rate(3), 0.25);
  EXPECT_DOUBLE_EQ(g.death_rate(3), 3.0);
}

TEST(BirthDeath, TablesHoldLastValue) {
  const auto g = birth_death(std::vector<double>{1, 2, 3}, std::vector<double>{0, 5, 6});
  EXPECT_EQ(g.birth_rate(2), 3.0);
  EXPECT_EQ(g.birth_rate(100), 3.0);
  EXPECT_EQ(g.death_rate(1), 5.0);
  EXPECT_EQ(g.death_rate(100), 6.0);
  EXPECT_EQ(g.death_rate(0), 0.0);
}

TEST(CumulativeDown, WorkedValues) {
  const auto q = mm1(1, 2);
  EXPECT_EQ(cumulative_down(q, 7, 6), 2.0);
  EXPECT_EQ(cumulative_down(q, 7, 5), 0.0);
  const auto c = catastrophe(1, 2);
  for (state_t k = 0; k <= 6; ++k) EXPECT_EQ(cumulative_down(c, 7, k), 2.0);
  EXPECT_THROW(cumulative_down(q, 7, 7), DomainError);
  EXPECT_THROW(cumulative_down(q, 7, -1), DomainError);
}

TEST(CumulativeDown, NondecreasingAndEndsAtTotalDeathRate) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto table = oracle::random_chain(rng, 25);
    const auto g = explicit_generator(table.triples());
    for (state_t n = 1; n <= 25; ++n) {
      double previous = 0.0;
      for (state_t k = 0; k < n; ++k) {
        const double G = cumulative_down(g, n, k);
        ASSERT_GE(G, previous);
        previous = G;
      }
      EXPECT_NEAR(previous, g.death_rate(n), 1e-12 * (1 + previous));
    }
  }
}

TEST(Validate, BuiltInsAreValid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rate(0.01, 10);
  for (int i = 0; i < 20; ++i) {
    const double l = rate(rng), m = rate(rng);
    EXPECT_TRUE(validate(mm1(l, m), 100).ok);
    EXPECT_TRUE(validate(catastrophe(l, m), 100).ok);
  }
  EXPECT_TRUE(validate(mm1(1, 2), 100).ok);
  EXPECT_THROW(validate(mm1(1, 2), 0), InvalidParameter);
}

TEST(Validate, UpwardJumpOfTwoIsNotSkipFree) {
  const auto g = explicit_generator({{0, 1, 1.0}, {0, 2, 0.5}, {1, 2, 1.0}, {1, 0, 1.0}, {2, 0, 1.0}, {2, 3, 1.0}});
  const auto r = validate(g, 2);
  EXPECT_FALSE(r.ok);
  EXPECT_TRUE(mentions(r, 0, "not skip-free"));
}

TEST(Validate, ZeroBirthRateFlaggedAtItsState) {
  const auto g = birth_death([](state_t n) { return n == 5 ? 0.0 : 1.0; }, constant_rate(1));
  const auto r = validate(g, 10);
  EXPECT_FALSE(r.ok);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].state, 5);
}

TEST(Validate, NegativeAndInfiniteRatesFlagged) {
  const auto g = explicit_generator({{0, 1, 1.0}, {1, 2, 1.0}, {1, 0, -0.5}, {2, 3, 1.0}, {2, 1, INFINITY}, {3, 2, 1}});
  const auto r = validate(g, 3);
  EXPECT_TRUE(mentions(r, 1, "negative downward rate"));
  EXPECT_TRUE(mentions(r, 2, "not finite"));
}

TEST(Validate, TruncatedGeneratorMayStopAtItsCap) {
  const auto g = explicit_generator({{0, 1, 1.0}, {1, 2, 1.0}, {2, 1, 3.0}});
  EXPECT_EQ(g.state_cap(), 2);
  EXPECT_EQ(g.birth_rate(2), 0.0);
  EXPECT_TRUE(validate(g, 100).ok);
}

TEST(Validate, CallbackRowsChecked) {
  const auto g = callback_generator(constant_rate(1), [](state_t n) {
    DownRates row;
    if (n >= 2) row.push_back({n, 1.0});  // self-target is not downward
    return row;
  });
  const auto r = validate(g, 3);
  EXPECT_TRUE(mentions(r, 2, "target"));
}
