#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "adsas/spectral.hpp"
#include "test_util.hpp"

using namespace adsas;
using adsas::testing::independent_adf_statistic;
using adsas::testing::normal_draws;
using adsas::testing::random_walk;
using adsas::testing::read_column;
using adsas::testing::sinusoid;

TEST(Periodogram, ParsevalIdentity) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (std::size_t n : {17u, 64u, 480u, 1001u}) {
      auto x = normal_draws(n, seed * 31 + n);
      for (std::size_t i = 0; i < n; ++i) x[i] += 3.0 * std::sin(0.1 * static_cast<double>(i)) + 5.0;
      const auto p = periodogram(x);
      const double total = std::accumulate(p.begin(), p.end(), 0.0);
      const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double v : x) ss += (v - mean) * (v - mean);
      EXPECT_LE(std::abs(total - ss), 1e-9 * ss) << "n=" << n;
    }
  }
}

TEST(DominantPeriod, SingleSinusoid) {
  auto peak = dominant_period(std::span<const double>(sinusoid(480, 24.0)));
  ASSERT_TRUE(peak.has_value());
  EXPECT_EQ(peak->period, 24.0);
  EXPECT_GT(peak->power_ratio, 10.0);
}

TEST(DominantPeriod, DominantAmplitudeWins) {
  auto x = sinusoid(672, 24.0);
  auto y = sinusoid(672, 7.0, 0.2);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  auto peak = dominant_period(std::span<const double>(x));
  ASSERT_TRUE(peak.has_value());
  EXPECT_EQ(peak->period, 24.0);
}

TEST(DominantPeriod, NonIntegerCycleCountStillRecoversPeriod) {
  // 1209 samples of a 288-sample cycle: the peak falls between bins 4 and 5.
  auto x = sinusoid(1209, 288.0, 10.0);
  auto e = normal_draws(1209, 5);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += e[i];
  auto peak = dominant_period(std::span<const double>(x));
  ASSERT_TRUE(peak.has_value());
  EXPECT_NEAR(peak->period, 288.0, 3.0);
}

TEST(DominantPeriod, PeriodLongerThanQuarterRecordRejected) {
  // About two cycles: leakage from the true peak must not pass as a period.
  auto x = sinusoid(604, 288.0, 10.0);
  auto e = normal_draws(604, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += e[i];
  EXPECT_FALSE(dominant_period(std::span<const double>(x)).has_value());
}

TEST(DominantPeriod, WhiteNoiseRejectedInAllSeeds) {
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto x = normal_draws(480, 1000 + seed);
    if (!dominant_period(std::span<const double>(x))) ++rejected;
  }
  EXPECT_EQ(rejected, 100);
}

TEST(DominantPeriod, InvariantUnderAffineMaps) {
  auto x = sinusoid(500, 20.0, 2.0);
  auto e = normal_draws(500, 9);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += e[i];
  auto base = dominant_period(std::span<const double>(x));
  ASSERT_TRUE(base.has_value());
  for (double a : {0.001, 1.0, 37.5}) {
    for (double b : {-1e4, 0.0, 3.0}) {
      std::vector<double> y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
      auto p = dominant_period(std::span<const double>(y));
      ASSERT_TRUE(p.has_value());
      EXPECT_EQ(p->period, base->period);
      EXPECT_NEAR(p->power_ratio, base->power_ratio, 1e-6 * base->power_ratio);
    }
  }
}

TEST(DominantPeriod, TooShort) { EXPECT_THROW(dominant_period(std::span<const double>(sinusoid(5, 2.5))), Error); }

TEST(MacKinnon, MatchesReferenceSurface) {
  // Frozen from statsmodels.tsa.adfvalues.mackinnonp(stat, "c", 1).
  EXPECT_NEAR(mackinnon_p_value(-2.02961413393945, AdfRegression::constant), 0.2737411495816451, 1e-12);
  EXPECT_NEAR(mackinnon_p_value(-0.019977961362374775, AdfRegression::constant), 0.9568484076022351, 1e-12);
  EXPECT_EQ(mackinnon_p_value(-21.1, AdfRegression::constant), 0.0);
  EXPECT_EQ(mackinnon_p_value(3.0, AdfRegression::constant), 1.0);
  // Close to the 5% critical value -2.86.
  EXPECT_NEAR(mackinnon_p_value(-2.86, AdfRegression::constant), 0.05, 0.002);
}

struct AdfCase {
  const char* file;
  double statistic;
  double p_value;
  std::size_t lags;
  std::size_t nobs;
};

class AdfReference : public ::testing::TestWithParam<AdfCase> {};

TEST_P(AdfReference, MatchesStatsmodels) {
  const auto& c = GetParam();
  auto x = read_column(c.file);
  ASSERT_EQ(x.size(), 500u);
  AdfConfig cfg;
  cfg.max_lag = 17;
  auto r = adf_test(std::span<const double>(x), cfg);
  EXPECT_EQ(r.lags_used, c.lags);
  EXPECT_EQ(r.nobs, c.nobs);
  EXPECT_NEAR(r.statistic, c.statistic, 1e-9 * std::abs(c.statistic));
  EXPECT_NEAR(r.p_value, c.p_value, 1e-9);
  // Independent normal-equations OLS on the same regressors.
  const double t_ind = independent_adf_statistic(x, r.lags_used);
  EXPECT_LE(std::abs(r.statistic - t_ind), 1e-9 * std::abs(t_ind));
}

// Frozen from statsmodels adfuller(x, maxlag=17, regression="c", autolag="AIC").
INSTANTIATE_TEST_SUITE_P(Seeded, AdfReference,
                         ::testing::Values(AdfCase{"adf_white_noise.txt", -21.142411697775554, 0.0, 0, 499},
                                           AdfCase{"adf_random_walk.txt", -2.02961413393945, 0.2737411495816451, 0, 499},
                                           AdfCase{"adf_ar_increments.txt", -0.019977961362374775, 0.9568484076022351,
                                                   2, 497}));

TEST(Adf, RandomWalkIsNonStationary) {
  auto x = read_column("adf_random_walk.txt");
  auto r = adf_test(std::span<const double>(x));
  EXPECT_GT(r.p_value, 0.05);
  EXPECT_FALSE(r.is_stationary);
}

TEST(Adf, WhiteNoiseIsStationary) {
  auto x = read_column("adf_white_noise.txt");
  auto r = adf_test(std::span<const double>(x));
  EXPECT_LT(r.p_value, 0.01);
  EXPECT_TRUE(r.is_stationary);
  EXPECT_GE(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
}

TEST(Adf, ConstantSeriesIsDegenerate) {
  std::vector<double> x(100, 4.2);
  try {
    adf_test(std::span<const double>(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_series);
  }
}

TEST(Adf, TooShort) {
  std::vector<double> x(19, 0.0);
  x[3] = 1.0;
  try {
    adf_test(std::span<const double>(x));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_short);
  }
}

TEST(Adf, StatisticMatchesIndependentOlsAcrossSeeds) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto x = seed % 2 ? random_walk(300, seed) : normal_draws(300, seed);
    auto r = adf_test(std::span<const double>(x));
    const double t_ind = independent_adf_statistic(x, r.lags_used);
    EXPECT_LE(std::abs(r.statistic - t_ind), 1e-9 * std::abs(t_ind)) << "seed " << seed;
  }
}

TEST(Analyze, DailySinusoidAtFiveMinutes) {
  auto v = sinusoid(288 * 7, 288.0, 10.0);
  auto e = normal_draws(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += e[i];
  auto prof = analyze(Series(0, 300, v), 288);
  EXPECT_EQ(prof.seasonal_period, 288u);
  EXPECT_TRUE(prof.period_detected);
  EXPECT_TRUE(prof.is_stationary);
}

TEST(Analyze, WhiteNoiseFallsBackToOneDay) {
  auto prof = analyze(Series(0, 300, normal_draws(288 * 3, 2)), 288);
  EXPECT_EQ(prof.seasonal_period, 288u);
  EXPECT_FALSE(prof.period_detected);
  EXPECT_TRUE(prof.is_stationary);
}

TEST(Analyze, ShortPeriodReportedWithStationarity) {
  auto v = sinusoid(600, 24.0, 3.0);
  auto e = normal_draws(v.size(), 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += e[i];
  auto prof = analyze(Series(0, 3600, v), 24);
  EXPECT_TRUE(prof.is_stationary);
  EXPECT_EQ(prof.seasonal_period, 24u);
}
