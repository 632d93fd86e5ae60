#include "confsel/asymptotics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "confsel/random.hpp"
#include "confsel/sim.hpp"
#include "oracles.hpp"

namespace confsel {
namespace {

TEST(EmpiricalF, Examples) {
  const EmpiricalF f({1, 2, 3});
  EXPECT_DOUBLE_EQ(f(2.0, 0.5), 0.5);
  EXPECT_EQ(f(0.0, 0.0), 0.0);
  EXPECT_EQ(f(0.0, 0.7), 0.0);
  EXPECT_EQ(f(10.0, 1.0), 1.0);
  EXPECT_THROW(EmpiricalF(std::vector<double>{}), ContractError);
  EXPECT_THROW(f(1.0, 1.5), ContractError);
}

TEST(EmpiricalF, MonotoneAndExactWithoutAtoms) {
  Rng rng(301);
  std::vector<double> sample(500);
  for (auto& v : sample) v = rng.normal();
  const EmpiricalF f(sample);
  for (int trial = 0; trial < 2000; ++trial) {
    const double a = rng.normal(0, 2), b = rng.normal(0, 2);
    const double u1 = rng.uniform(), u2 = rng.uniform();
    EXPECT_LE(f(std::min(a, b), u1), f(std::max(a, b), u1));
    EXPECT_LE(f(a, std::min(u1, u2)), f(a, std::max(u1, u2)));
    // off the sample points u plays no role and F is the empirical CDF
    std::size_t below = 0;
    for (double v : sample) below += v < a ? 1 : 0;
    EXPECT_DOUBLE_EQ(f(a, u1), static_cast<double>(below) / 500.0);
  }
}

TEST(SolveTStar, MixtureMatchesClosedForm) {
  constexpr std::size_t kN = 200000;
  Rng rng(303);
  std::vector<double> f(kN);
  for (auto& v : f) v = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
  const auto r = solve_tstar(f, 0.1);
  const double expected = oracle::mixture_t_star(0.1, 0.5);
  EXPECT_NEAR(expected, 0.05263, 1e-5);
  EXPECT_NEAR(r.t_star, expected, 0.005);
  EXPECT_TRUE(r.condition_flag);
}

TEST(SolveTStar, PureNullGridGivesZero) {
  constexpr std::size_t kN = 10000;
  std::vector<double> f(kN);
  for (std::size_t i = 0; i < kN; ++i) f[i] = static_cast<double>(i + 1) / static_cast<double>(kN);
  const auto r = solve_tstar(f, 0.1);
  EXPECT_EQ(r.t_star, 0.0);
  EXPECT_FALSE(r.condition_flag);
}

TEST(SolveTStar, PureNullUniformIsNearZero) {
  constexpr std::size_t kN = 200000;
  Rng rng(307);
  std::vector<double> f(kN);
  for (auto& v : f) v = rng.uniform();
  // a random sample can cross the line q t at a few of its smallest points
  EXPECT_LT(solve_tstar(f, 0.1).t_star, 1e-3);
}

TEST(SolveTStar, AllZeroGivesQ) {
  const std::vector<double> f(1000, 0.0);
  const auto r = solve_tstar(f, 0.1);
  EXPECT_DOUBLE_EQ(r.t_star, 0.1);
  EXPECT_TRUE(r.condition_flag);
}

TEST(SolveTStar, AgreesWithBreakpointScan) {
  Rng rng(311);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> f(1 + rng.below(40));
    for (auto& v : f) v = rng.below(3) == 0 ? 0.0 : std::pow(rng.uniform(), 2.0);
    const double q = 0.05 + 0.5 * rng.uniform();
    // sup of admissible t: on each piece [a, b) where the count is k, the
    // admissible t are those with t <= q k / N
    double sup = 0.0;
    for (double a : f) {
      std::size_t k = 0;
      double b = 1.0;
      for (double v : f) {
        if (v <= a) ++k;
        if (v > a) b = std::min(b, v);
      }
      const double edge = q * static_cast<double>(k) / static_cast<double>(f.size());
      if (edge >= a) sup = std::max(sup, std::min(edge, b));
    }
    EXPECT_DOUBLE_EQ(solve_tstar(f, q).t_star, sup);
  }
  EXPECT_THROW(solve_tstar(std::vector<double>{}, 0.1), ContractError);
}

PopulationSample mixture(const ScoreRule& rule, std::size_t n, double alt, std::uint64_t seed) {
  const auto rows = mixture_population(n, seed, alt);
  return make_population(rows.prediction, rows.outcome, 0.0, rule);
}

TEST(AsymptoticFdrPower, MixtureResidualScore) {
  const auto pop = mixture(ScoreRule::residual(), 200000, 0.5, 1);
  const auto r = asymptotic_fdr_power(pop, 0.1, 2);
  EXPECT_NEAR(r.t_star, oracle::mixture_t_star(0.1, 0.5), 0.005);
  // every alternative is selected and nulls enter at rate t / 2
  const double t = oracle::mixture_t_star(0.1, 0.5);
  EXPECT_NEAR(r.fdr_limit, 0.5 * t / (0.5 + 0.5 * t), 0.01);
  EXPECT_NEAR(r.power_limit, 1.0, 1e-12);
  EXPECT_TRUE(r.condition_flag);
  EXPECT_EQ(r.n_pop, 200000u);
}

TEST(AsymptoticFdrPower, ClippedScoreNearlyExhaustsLevel) {
  const auto pop = mixture(ScoreRule::clipped(100.0), 200000, 0.5, 3);
  const auto r = asymptotic_fdr_power(pop, 0.1, 4);
  EXPECT_NEAR(r.fdr_limit, 0.1, 0.01);
  EXPECT_LE(r.fdr_limit, 0.1 + 2.0 / std::sqrt(200000.0));
  EXPECT_NEAR(r.power_limit, 1.0, 1e-12);
  // null F-values are Unif(0, 1/2): t = q (1/2 + t)
  EXPECT_NEAR(r.t_star, 0.05 / 0.9, 0.005);
}

TEST(AsymptoticFdrPower, PureNullReportsEmptySelection) {
  // null F-values are uniform, so BH on them crosses q t only at a handful
  // of the smallest points, if at all
  std::size_t empty = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pop = mixture(ScoreRule::residual(), 20000, 0.0, seed);
    const auto r = asymptotic_fdr_power(pop, 0.1, seed + 100);
    EXPECT_LT(r.t_star, 1e-2);
    EXPECT_EQ(r.power_limit, 0.0);
    if (r.t_star == 0.0) {
      ++empty;
      EXPECT_EQ(r.fdr_limit, 0.0);
    } else {
      EXPECT_EQ(r.fdr_limit, 1.0);
    }
  }
  EXPECT_GE(empty, 10u);
}

TEST(AsymptoticFdrPower, NoNullsGiveZeroFdr) {
  const auto pop = mixture(ScoreRule::residual(), 5000, 1.0, 7);
  const auto r = asymptotic_fdr_power(pop, 0.1, 8);
  EXPECT_DOUBLE_EQ(r.t_star, 0.1);
  EXPECT_EQ(r.fdr_limit, 0.0);
  EXPECT_EQ(r.power_limit, 1.0);
}

TEST(AsymptoticFdrPower, DeterministicInSeed) {
  const auto pop = mixture(ScoreRule::clipped(), 20000, 0.3, 9);
  EXPECT_EQ(asymptotic_fdr_power(pop, 0.2, 10), asymptotic_fdr_power(pop, 0.2, 10));
}

TEST(AsymptoticFdrPower, ValidatesPopulation) {
  PopulationSample pop;
  EXPECT_THROW(asymptotic_fdr_power(pop, 0.1, 1), ContractError);
  pop.v_full = {1, 2};
  pop.v_null = {1};
  pop.y_exceeds = {true, false};
  EXPECT_THROW(asymptotic_fdr_power(pop, 0.1, 1), ContractError);
}

TEST(AsymptoticProperty, FdrLimitBelowLevelOnSimulatedPopulations) {
  constexpr std::size_t kN = 40000;
  const double band = 2.0 / std::sqrt(static_cast<double>(kN));
  for (int setting = 1; setting <= 8; ++setting) {
    const auto dgp = sim::Dgp::table(setting, 1.0);
    const auto rows = sim::generate(dgp, kN, static_cast<std::uint64_t>(400 + setting));
    std::vector<double> mu, y;
    for (const auto& r : rows) {
      mu.push_back(r.mu);
      y.push_back(r.y);
    }
    for (const auto& rule : {ScoreRule::residual(), ScoreRule::clipped(100.0)}) {
      for (double q : {0.1, 0.2, 0.5}) {
        const auto rep = asymptotic_fdr_power(make_population(mu, y, 0.0, rule), q, 11);
        if (rep.condition_flag) {
          EXPECT_LE(rep.fdr_limit, q + band) << "setting " << setting << " score " << rule.name() << " q " << q;
        }
        EXPECT_GE(rep.power_limit, 0.0);
        EXPECT_LE(rep.power_limit, 1.0);
      }
    }
  }
}

}  // namespace
}  // namespace confsel
