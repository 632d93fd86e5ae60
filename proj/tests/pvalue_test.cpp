#include "confsel/pvalue.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "confsel/random.hpp"
#include "confsel/score.hpp"
#include "oracles.hpp"

namespace confsel {
namespace {

TEST(RandomizedPValue, Examples) {
  const CalibrationScores calib({1, 2, 3});
  EXPECT_DOUBLE_EQ(randomized_pvalue(calib, 2.5, 0.5), 0.625);
  EXPECT_DOUBLE_EQ(randomized_pvalue(calib, 0.0, 1.0), 0.25);
  const CalibrationScores tied({1, 1, 2});
  EXPECT_DOUBLE_EQ(randomized_pvalue(tied, 1.0, 0.5), 0.375);
}

TEST(RandomizedPValue, RejectsUOutsideUnitInterval) {
  const CalibrationScores calib({1, 2, 3});
  EXPECT_THROW(randomized_pvalue(calib, 1.0, -0.1), ContractError);
  EXPECT_THROW(randomized_pvalue(calib, 1.0, 1.5), ContractError);
}

TEST(CalibrationScores, Validation) {
  EXPECT_THROW(CalibrationScores(std::vector<double>{}), ContractError);
  EXPECT_THROW(CalibrationScores({1.0, std::nan("")}), IngestionError);
}

TEST(DeterministicPValue, Examples) {
  const CalibrationScores calib({1, 2, 3});
  EXPECT_DOUBLE_EQ(deterministic_pvalue(calib, 2.5), 0.75);
  EXPECT_DOUBLE_EQ(deterministic_pvalue(calib, 0.0), 0.25);
  EXPECT_DOUBLE_EQ(deterministic_pvalue(calib, 9.0), 1.0);
}

TEST(DeterministicPValue, CountsTies) {
  const CalibrationScores calib({1, 2, 2, 3});
  const std::vector<double> v{2.0, 2.5, 1.0};
  const auto pv = deterministic_pvalues(calib, v);
  EXPECT_EQ(pv.ties, 3u);
  EXPECT_DOUBLE_EQ(pv.p[0], 2.0 / 5.0);  // strict inequality: only the 1 counts
  EXPECT_EQ(pv.method, PValueMethod::deterministic);
}

TEST(OraclePValue, Examples) {
  const CalibrationScores calib({1, 2, 3});
  EXPECT_DOUBLE_EQ(oracle_pvalue(calib, 2.5, 0.5), 0.625);
  EXPECT_DOUBLE_EQ(oracle_pvalue(calib, 1.5, 0.0), 0.25);
}

TEST(SameClassPValues, Examples) {
  const std::vector<double> class0{-0.9, -0.2};
  EXPECT_DOUBLE_EQ(same_class_pvalues(class0, std::vector<double>{-0.5}, TieBreaker::fixed({0.5})).p[0], 0.5);
  EXPECT_DOUBLE_EQ(same_class_pvalues(class0, std::vector<double>{-1.0}, TieBreaker::fixed({0.0})).p[0], 0.0);
  EXPECT_DOUBLE_EQ(same_class_pvalues(class0, std::vector<double>{-1.0}, TieBreaker::fixed({1.0})).p[0], 1.0 / 3.0);
}

TEST(SameClassPValues, EmptyClassIsAnError) {
  EXPECT_THROW(same_class_pvalues({}, std::vector<double>{0.0}, TieBreaker::seeded(1)), ContractError);
}

TEST(PValueCounting, AgreesWithLinearScan) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores(1 + rng.below(30));
    // coarse grid so that ties occur often
    for (auto& s : scores) s = static_cast<double>(rng.below(7)) - 3.0;
    const CalibrationScores calib(scores);
    const double v = static_cast<double>(rng.below(9)) - 4.0;
    const double u = rng.uniform();
    EXPECT_DOUBLE_EQ(randomized_pvalue(calib, v, u), oracle::conformal_pvalue(scores, v, u));
  }
}

// Null unit (y <= c): V(x, c) >= V(x, y) by monotonicity, and the counting
// formula is non-decreasing in the score, so the observable p-value
// dominates the oracle one under a shared u.
TEST(PValueProperty, DominatesOracleOnNullUnits) {
  Rng rng(17);
  const auto rule = ScoreRule::residual();
  std::size_t nulls = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    std::vector<double> scores(20);
    for (auto& s : scores) s = rule(rng.normal(), rng.normal(), 0.0);
    const CalibrationScores calib(scores);
    const double mu = rng.normal(), y = rng.normal(), c = rng.normal(0.0, 0.5);
    if (y > c) continue;
    ++nulls;
    const double u = rng.uniform();
    EXPECT_GE(randomized_pvalue(calib, rule(mu, c, c), u), oracle_pvalue(calib, rule(mu, y, c), u));
  }
  EXPECT_GT(nulls, 5000u);
}

TEST(PValueProperty, OracleIsUniformUnderExchangeability) {
  Rng rng(23);
  constexpr std::size_t kReps = 100000;
  std::vector<double> p(kReps);
  for (std::size_t r = 0; r < kReps; ++r) {
    std::vector<double> scores(9);
    for (auto& s : scores) s = rng.normal();
    p[r] = oracle_pvalue(CalibrationScores(scores), rng.normal(), rng.uniform());
  }
  EXPECT_LT(oracle::ks_uniform(p), oracle::ks_critical(1e-3, kReps));
}

TEST(PValueProperty, RandomizedBelowDeterministicWithoutTies) {
  Rng rng(29);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> scores(15);
    for (auto& s : scores) s = rng.normal();
    const CalibrationScores calib(scores);
    const double v = rng.normal();
    EXPECT_LT(randomized_pvalue(calib, v, rng.uniform() * 0.999), deterministic_pvalue(calib, v));
    EXPECT_DOUBLE_EQ(randomized_pvalue(calib, v, 1.0), deterministic_pvalue(calib, v));
  }
}

TEST(PValueProperty, NonDecreasingInScore) {
  Rng rng(31);
  std::vector<double> scores(40);
  for (auto& s : scores) s = std::round(rng.normal() * 4.0) / 4.0;
  const CalibrationScores calib(scores);
  for (int trial = 0; trial < 5000; ++trial) {
    const double a = std::round(rng.normal() * 8.0) / 8.0, b = std::round(rng.normal() * 8.0) / 8.0;
    const double u = rng.uniform();
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_LE(randomized_pvalue(calib, lo, u), randomized_pvalue(calib, hi, u));
    EXPECT_LE(deterministic_pvalue(calib, lo), deterministic_pvalue(calib, hi));
  }
}

TEST(PValueProperty, ValuesLieInUnitIntervalForPositiveU) {
  Rng rng(37);
  std::vector<double> scores(25);
  for (auto& s : scores) s = rng.normal();
  const CalibrationScores calib(scores);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.normal(0, 3);
  for (double p : randomized_pvalues(calib, v, TieBreaker::seeded(4)).p) {
    EXPECT_GT(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
}

// Under the clipped score with M > 2 sup|mu|, every positive calibration unit
// scores above every test score, so the full-calibration p-value is the
// same-class p-value rescaled by (n0 + 1) / (n + 1).
TEST(PValueProperty, ClippedScoreScalesSameClassPValues) {
  Rng rng(41);
  const auto rule = ScoreRule::clipped(100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + rng.below(60), m = 1 + rng.below(20);
    std::vector<double> all, class0, test(m);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = rng.uniform(-1, 1);
      const double y = rng.uniform() < 0.4 ? 1.0 : 0.0;
      all.push_back(rule(mu, y, 0.0));
      if (y <= 0.0) class0.push_back(rule(mu, 0.0, 0.0));
    }
    if (class0.empty()) continue;
    for (auto& t : test) t = rule(rng.uniform(-1, 1), 0.0, 0.0);
    const auto u = TieBreaker::seeded(static_cast<std::uint64_t>(trial));
    const auto full = randomized_pvalues(CalibrationScores(all), test, u);
    const auto same = same_class_pvalues(class0, test, u);
    const double scale = static_cast<double>(class0.size() + 1) / static_cast<double>(n + 1);
    for (std::size_t j = 0; j < m; ++j) {
      EXPECT_NEAR(full.p[j], scale * same.p[j], 1e-12 * full.p[j]);
      EXPECT_LE(full.p[j], same.p[j]);
    }
  }
}

TEST(TieBreaker, SeededStreamIsCounterBased) {
  const auto a = TieBreaker::seeded(99);
  const auto b = TieBreaker::seeded(99);
  EXPECT_EQ(a(12345), b(12345));
  EXPECT_NE(a(0), a(1));
  EXPECT_NE(a(0), TieBreaker::seeded(100)(0));
  for (std::size_t j = 0; j < 1000; ++j) {
    EXPECT_GT(a(j), 0.0);
    EXPECT_LT(a(j), 1.0);
  }
  EXPECT_THROW(TieBreaker::fixed({0.2, 1.2}), ContractError);
}

}  // namespace
}  // namespace confsel
