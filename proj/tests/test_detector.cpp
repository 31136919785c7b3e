#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "adsas/dataset.hpp"
#include "adsas/detector.hpp"

using namespace adsas;

namespace {

// Standard normal CDF at z, 20 significant digits (mpmath ncdf, 40-digit precision).
struct CdfCase {
  double z;
  double phi;
};
constexpr CdfCase kPhi[] = {
    {-8.0, 6.2209605742717841235e-16}, {-5.0, 2.8665157187919391167e-7}, {-1.96, 0.024997895148220436213},
    {-1.0, 0.15865525393145705141},    {-0.3, 0.38208857781104736693},   {0.0, 0.5},
    {0.3, 0.61791142218895263307},     {1.0, 0.84134474606854294859},    {1.96, 0.97500210485177956379},
    {3.2905, 0.99949995249096121838},  {5.0, 0.99999971334842812081},    {8.0, 0.9999999999999993779},
};

SyntheticSpec daily_spec(std::size_t days, std::uint64_t seed) {
  SyntheticSpec s;
  s.length = days * 288;
  s.seed = seed;
  return s;
}

struct Stream {
  Series history;
  Series rest;
};

Stream split(const Series& s, std::size_t ntrain) { return {s.slice(0, ntrain), s.slice(ntrain, s.size() - ntrain)}; }

Series affine(const Series& s, double a, double b) {
  std::vector<double> v(s.values().begin(), s.values().end());
  for (double& x : v) x = a * x + b;
  return Series(s.start_time(), s.interval(), std::move(v));
}

/// Three days of history and one day of stream, trained once per process.
const Stream& base_stream() {
  static const Stream st = split(generate_synthetic(daily_spec(4, 7)).series, 864);
  return st;
}

const Detector& base_detector() {
  static const Detector d = Detector::train(base_stream().history);
  return d;
}

}  // namespace

TEST(ResidualCdf, MatchesHighPrecisionOracle) {
  for (const auto& c : kPhi) EXPECT_NEAR(residual_cdf(c.z, 0.0, 1.0), c.phi, 1e-12) << "z=" << c.z;
}

TEST(ResidualCdf, LocationScale) {
  for (const auto& c : kPhi) EXPECT_NEAR(residual_cdf(3.0 + 2.5 * c.z, 3.0, 2.5), c.phi, 1e-12);
}

TEST(ResidualCdf, CenterAndSymmetry) {
  EXPECT_EQ(residual_cdf(4.2, 4.2, 0.7), 0.5);
  EXPECT_NEAR(residual_cdf(1.96, 0.0, 1.0), 0.9750, 1e-4);
  EXPECT_NEAR(residual_cdf(-1.96, 0.0, 1.0), 0.0250, 1e-4);
  for (double z : {0.1, 0.9, 2.7, 6.0})
    EXPECT_NEAR(residual_cdf(z, 0.0, 1.0) + residual_cdf(-z, 0.0, 1.0), 1.0, 1e-15);
}

TEST(ResidualCdf, FiveSigmaIsFlagged) {
  const double eps = DetectorConfig{}.epsilon;
  const double c = residual_cdf(5.0, 0.0, 1.0);
  EXPECT_GT(c, 1.0 - eps);
  EXPECT_NEAR(c, 0.9999997, 1e-7);
}

TEST(ResidualCdf, RejectsNonPositiveSigma) {
  EXPECT_THROW(residual_cdf(0.0, 0.0, 0.0), Error);
  EXPECT_THROW(residual_cdf(0.0, 0.0, -1.0), Error);
}

TEST(DetectorConfig, Validation) {
  DetectorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epsilon = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.forecast_batch = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.residual_window = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(AutoUndersample, HourlyBlocksForFiveMinuteDays) {
  EXPECT_EQ(auto_undersample_factor(288, 300), 12u);
  EXPECT_EQ(288 / auto_undersample_factor(288, 300), 24u);
}

TEST(AutoUndersample, ShortPeriodsStayNative) {
  EXPECT_EQ(auto_undersample_factor(24, 3600), 1u);
  EXPECT_EQ(auto_undersample_factor(60, 60), 1u);
}

TEST(AutoUndersample, CoarsePeriodAtMostSixty) {
  for (std::size_t period : {61u, 100u, 144u, 1440u, 2016u, 997u}) {
    const auto f = auto_undersample_factor(period, 60);
    EXPECT_LE((period + f - 1) / f, 60u) << period;
  }
}

TEST(Verdict, JsonLine) {
  Verdict v{1420070400, 1.5, 2.0, 0.5, -0.25, 0.5, false, false};
  EXPECT_EQ(to_json_line(v), R"({"t":1420070400,"x":1.5,"p":2,"e":0.5,"r":-0.25,"cdf":0.5,"anomaly":false})");
  v.is_anomaly = true;
  EXPECT_NE(to_json_line(v).find(R"("anomaly":true)"), std::string::npos);
}

TEST(DetectorTrain, TooShort) {
  const auto s = generate_synthetic(daily_spec(2, 1)).series;
  try {
    Detector::train(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::too_short);
  }
}

TEST(DetectorTrain, ConstantHistoryIsDegenerate) {
  const Series s(1420070400, 300, std::vector<double>(4 * 288, 3.0));
  DetectorConfig cfg;
  cfg.seasonal_period = 288;
  try {
    Detector::train(s, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_after_differencing);
  }
}

TEST(DetectorTrain, ResolvesFactorAndBatch) {
  const auto& d = base_detector();
  EXPECT_EQ(d.seasonal_period(), 288u);
  EXPECT_EQ(d.undersample_factor(), 12u);
  EXPECT_EQ(d.coarse_period(), 24u);
  EXPECT_EQ(d.forecast_batch(), 288u);
  EXPECT_EQ(d.residual_window(), 288u);
  EXPECT_EQ(d.pending_forecast().size(), 288u);
  EXPECT_EQ(d.next_time(), base_stream().history.end_time());
  EXPECT_EQ(d.model().orders.D, 1);
  EXPECT_EQ(d.model().orders.s, 24);
}

TEST(DetectorStream, VerdictInvariants) {
  auto d = base_detector();
  const double eps = d.config().epsilon;
  for (const auto& v : d.process(base_stream().rest)) {
    EXPECT_EQ(v.e, v.p - v.x);
    EXPECT_GE(v.cdf, 0.0);
    EXPECT_LE(v.cdf, 1.0);
    EXPECT_EQ(v.is_anomaly, v.cdf < eps || v.cdf > 1.0 - eps);
  }
}

TEST(DetectorStream, Deterministic) {
  auto a = Detector::train(base_stream().history);
  auto b = Detector::train(base_stream().history);
  const auto rest = base_stream().rest.slice(0, 100);
  const auto va = a.process(rest), vb = b.process(rest);
  ASSERT_EQ(va.size(), vb.size());
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_EQ(to_json_line(va[i]), to_json_line(vb[i]));
}

TEST(DetectorStream, RollingStatsMatchBruteForce) {
  auto d = base_detector();
  std::vector<double> all(d.residuals().begin(), d.residuals().end());
  const std::size_t w = d.residual_window();
  const auto& rest = base_stream().rest;
  for (std::size_t i = 0; i < rest.size(); ++i) {
    const auto v = d.process_point(rest.time_at(i), rest[i]);
    all.push_back(v.r);
    const std::size_t lo = all.size() > w ? all.size() - w : 0;
    long double m = 0.0L;
    for (std::size_t k = lo; k < all.size(); ++k) m += all[k];
    m /= static_cast<long double>(all.size() - lo);
    long double var = 0.0L;
    for (std::size_t k = lo; k < all.size(); ++k) var += (all[k] - m) * (all[k] - m);
    var /= static_cast<long double>(all.size() - lo);
    const double scale = std::sqrt(static_cast<double>(var));
    EXPECT_NEAR(d.rolling_mean(), static_cast<double>(m), 1e-9 * scale) << i;
    EXPECT_NEAR(d.rolling_variance(), static_cast<double>(var), 1e-9 * static_cast<double>(var)) << i;
  }
}

TEST(DetectorStream, AnomalyFeedsPredictionToBuffer) {
  auto d = base_detector();
  const auto& rest = base_stream().rest;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto v = d.process_point(rest.time_at(i), rest[i]);
    EXPECT_EQ(d.train_buffer().back(), v.is_anomaly ? v.p : v.x);
  }
  const auto v = d.process_point(rest.time_at(50), rest[50] + 40.0);
  ASSERT_TRUE(v.is_anomaly);
  EXPECT_EQ(d.train_buffer().back(), v.p);
  EXPECT_NE(d.train_buffer().back(), v.x);
}

TEST(DetectorStream, BufferCappedAtTrainingLength) {
  auto d = base_detector();
  const auto n = base_stream().history.size();
  EXPECT_EQ(d.train_buffer().size(), n);
  d.process(base_stream().rest.slice(0, 20));
  EXPECT_EQ(d.train_buffer().size(), n);
}

TEST(DetectorStream, RejectsBadInput) {
  auto d = base_detector();
  const auto t = d.next_time();
  auto code = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invalid_argument;
  };
  EXPECT_EQ(code([&] { d.process_point(t, std::numeric_limits<double>::quiet_NaN()); }), Errc::non_finite_value);
  EXPECT_EQ(code([&] { d.process_point(t - 300, 1.0); }), Errc::out_of_order_timestamp);
  EXPECT_EQ(code([&] { d.process_point(t + 7, 1.0); }), Errc::irregular_sampling);
  EXPECT_EQ(d.next_time(), t);
}

TEST(DetectorStream, GapIsImputedWithForecast) {
  auto d = base_detector();
  const auto& rest = base_stream().rest;
  const double p0 = d.pending_forecast().front();
  const auto v = d.process_point(rest.time_at(1), rest[1]);
  EXPECT_EQ(v.time, rest.time_at(1));
  EXPECT_EQ(d.diagnostics().imputed_points, 1u);
  const auto& buf = d.train_buffer();
  EXPECT_EQ(buf[buf.size() - 2], p0);
  EXPECT_EQ(d.next_time(), rest.time_at(2));
}

TEST(DetectorStream, AffineRescalingPreservesFlags) {
  const auto& st = base_stream();
  auto a = base_detector();
  auto b = Detector::train(affine(st.history, 3.0, 100.0));
  const auto va = a.process(st.rest);
  const auto vb = b.process(affine(st.rest, 3.0, 100.0));
  std::size_t agree = 0;
  for (std::size_t i = 0; i < va.size(); ++i) agree += va[i].is_anomaly == vb[i].is_anomaly;
  EXPECT_GE(static_cast<double>(agree), 0.99 * static_cast<double>(va.size()));
}

TEST(DetectorStream, ForecastRefreshedAfterBatch) {
  auto d = base_detector();
  d.process(base_stream().rest);
  EXPECT_TRUE(d.pending_forecast().empty());
  EXPECT_EQ(d.diagnostics().refits, 0u);
  // The next point triggers a refit before it is scored.
  const auto v = d.process_point(d.next_time(), 0.0);
  EXPECT_TRUE(std::isfinite(v.p));
  EXPECT_EQ(d.diagnostics().refits, 1u);
  EXPECT_EQ(d.pending_forecast().size(), d.forecast_batch() - 1);
}
