#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "adsas/error.hpp"
#include "adsas/linalg.hpp"
#include "adsas/series.hpp"

namespace adsas {

// ---------------------------------------------------------------------------
// Periodogram
// ---------------------------------------------------------------------------

/// One-sided periodogram of the demeaned input. Entry k is the power at
/// frequency k/n cycles per sample, k = 0..n/2, scaled so that the entries
/// sum to n * (population variance).
inline std::vector<double> periodogram(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) fail(Errc::too_short, "periodogram needs at least two samples");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> in(n);
  for (std::size_t i = 0; i < n; ++i) in[i] = x[i] - mean;
  const std::size_t bins = n / 2 + 1;
  std::vector<fftw_complex> out(bins);
  {
    // The FFTW planner is not reentrant.
    static std::mutex planner_mutex;
    fftw_plan plan;
    {
      std::lock_guard lock(planner_mutex);
      plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex);
    fftw_destroy_plan(plan);
  }

  std::vector<double> power(bins);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < bins; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const bool unpaired = (k == 0) || (n % 2 == 0 && k == n / 2);
    power[k] = (unpaired ? 1.0 : 2.0) * mag2 / dn;
  }
  return power;
}

struct SpectrumPeak {
  double period = 0.0;  // samples per cycle, rounded to an integer
  double power = 0.0;
  double power_ratio = 0.0;  // peak power / median ordinate
};

struct PeriodogramConfig {
  /// Floor on peak / median. The effective threshold also grows with the
  /// number of candidate bins so that a white-noise series produces a false
  /// peak with probability at most false_peak_rate.
  double min_power_ratio = 10.0;
  double false_peak_rate = 1e-3;
  /// Refine the peak frequency between Fourier bins before converting it to
  /// a period. Matters when the record is not a whole number of cycles.
  bool refine = true;
};

namespace detail {

inline double dtft_power(std::span<const double> centered, double cycles) {
  const double n = static_cast<double>(centered.size());
  const double w = 2.0 * std::numbers::pi * cycles / n;
  double re = 0.0, im = 0.0;
  // Rotation recurrence; exact enough for the few-thousand-term sums used here.
  double c = 1.0, s = 0.0;
  const double cw = std::cos(w), sw = std::sin(w);
  for (std::size_t t = 0; t < centered.size(); ++t) {
    re += centered[t] * c;
    im -= centered[t] * s;
    const double c2 = c * cw - s * sw;
    s = s * cw + c * sw;
    c = c2;
  }
  return re * re + im * im;
}

inline double refine_peak(std::span<const double> x, std::size_t bin) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  std::vector<double> centered(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - mean;

  double lo = static_cast<double>(bin) - 1.0, hi = static_cast<double>(bin) + 1.0;
  double best = static_cast<double>(bin), best_p = dtft_power(centered, best);
  constexpr int grid = 40;
  for (int g = 0; g <= grid; ++g) {
    const double f = lo + (hi - lo) * g / grid;
    if (f <= 0.0) continue;
    const double p = dtft_power(centered, f);
    if (p > best_p) best_p = p, best = f;
  }
  // Golden-section polish around the best grid point.
  const double step = (hi - lo) / grid;
  double a = std::max(best - step, 1e-6), b = best + step;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double pc = dtft_power(centered, c), pd = dtft_power(centered, d);
  for (int it = 0; it < 40; ++it) {
    if (pc > pd) {
      b = d, d = c, pd = pc;
      c = b - phi * (b - a), pc = dtft_power(centered, c);
    } else {
      a = c, c = d, pc = pd;
      d = a + phi * (b - a), pd = dtft_power(centered, d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Dominant period from the periodogram, or nullopt when no ordinate stands
/// out from the noise floor or the strongest period exceeds n/4.
inline std::optional<SpectrumPeak> dominant_period(std::span<const double> x,
                                                   const PeriodogramConfig& cfg = {}) {
  const std::size_t n = x.size();
  if (n < 8) fail(Errc::too_short, "dominant_period needs at least 8 samples");
  const auto power = periodogram(x);

  std::vector<double> ordinates(power.begin() + 1, power.end());
  std::vector<double> sorted = ordinates;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];

  // The strongest ordinate must itself lie at a period in [2, n/4], i.e.
  // k in [4, n/2]; a longer dominant period means no acceptable peak.
  std::size_t best_k = 0;
  for (std::size_t k = 1; k < power.size(); ++k)
    if (best_k == 0 || power[k] > power[best_k]) best_k = k;
  if (best_k < 4) return std::nullopt;
  if (best_k == 0 || median <= 0.0) return std::nullopt;

  const double candidates = static_cast<double>(power.size() - 4);
  const double threshold =
      std::max(cfg.min_power_ratio, std::log(candidates / cfg.false_peak_rate) / std::numbers::ln2);
  const double ratio = power[best_k] / median;
  if (!(ratio >= threshold)) return std::nullopt;

  const double cycles = cfg.refine ? detail::refine_peak(x, best_k) : static_cast<double>(best_k);
  const double period = std::round(static_cast<double>(n) / cycles);
  if (period < 2.0 || period > static_cast<double>(n) / 4.0) return std::nullopt;
  return SpectrumPeak{period, power[best_k], ratio};
}

inline std::optional<SpectrumPeak> dominant_period(const Series& s, const PeriodogramConfig& cfg = {}) {
  return dominant_period(s.values(), cfg);
}

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller
// ---------------------------------------------------------------------------

enum class AdfRegression { constant, constant_trend };

struct AdfResult {
  double gamma_hat = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t lags_used = 0;
  std::size_t nobs = 0;
  bool is_stationary = false;
};

struct AdfConfig {
  std::optional<std::size_t> max_lag;  // default: floor(12 * (n/100)^(1/4))
  AdfRegression regression = AdfRegression::constant;
  double stationarity_threshold = 0.05;
};

/// MacKinnon (1994) approximate p-value for a single-series unit-root
/// t-statistic.
inline double mackinnon_p_value(double stat, AdfRegression regression) {
  struct Surface {
    double tau_max, tau_min, tau_star;
    std::array<double, 3> small;
    std::array<double, 4> large;
  };
  static constexpr Surface c{2.74, -18.83, -1.61, {2.1659, 1.4412, 3.8269e-2}, {1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2}};
  static constexpr Surface ct{0.7, -16.18, -2.89, {3.2512, 1.6047, 4.9588e-2}, {2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2}};
  const Surface& s = regression == AdfRegression::constant ? c : ct;
  if (stat > s.tau_max) return 1.0;
  if (stat < s.tau_min) return 0.0;
  double z;
  if (stat <= s.tau_star)
    z = s.small[0] + stat * (s.small[1] + stat * s.small[2]);
  else
    z = s.large[0] + stat * (s.large[1] + stat * (s.large[2] + stat * s.large[3]));
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace detail {

/// ADF design: rows t = first_row..n-2 of the differenced series; columns
/// [deterministics..., x_{t}, dx_{t-1}, ..., dx_{t-lags}], target dx_t.
inline void adf_design(std::span<const double> x, std::size_t lags, std::size_t skip, AdfRegression reg,
                       Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  const std::size_t n = x.size();
  const std::size_t nd = n - 1;
  const std::size_t rows = nd - skip;
  const std::size_t det = reg == AdfRegression::constant ? 1 : 2;
  X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(det + 1 + lags));
  y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = skip + r;  // index into dx; dx[t] = x[t+1] - x[t]
    const auto ri = static_cast<Eigen::Index>(r);
    y(ri) = x[t + 1] - x[t];
    X(ri, 0) = 1.0;
    if (det == 2) X(ri, 1) = static_cast<double>(t + 1);
    X(ri, static_cast<Eigen::Index>(det)) = x[t];
    for (std::size_t i = 1; i <= lags; ++i)
      X(ri, static_cast<Eigen::Index>(det + i)) = x[t + 1 - i] - x[t - i];
  }
}

}  // namespace detail

/// Augmented Dickey-Fuller test. The lag order minimizes AIC over
/// 0..max_lag on a common estimation sample, then the chosen regression is
/// re-estimated on all available rows.
inline AdfResult adf_test(std::span<const double> x, const AdfConfig& cfg = {}) {
  const std::size_t n = x.size();
  if (n < 20) fail(Errc::too_short, "adf_test needs at least 20 samples");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (*mn == *mx) fail(Errc::degenerate_series, "constant series");

  const std::size_t det = cfg.regression == AdfRegression::constant ? 1 : 2;
  std::size_t max_lag = cfg.max_lag.value_or(
      static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25))));
  // Keep at least as many rows as a handful of parameters needs.
  const std::size_t cap = (n - 1) / 2 > det + 1 ? (n - 1) / 2 - det - 1 : 0;
  max_lag = std::min(max_lag, cap);

  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::size_t best_lag = 0;
  double best_aic = 0.0;
  for (std::size_t k = 0; k <= max_lag; ++k) {
    detail::adf_design(x, k, max_lag, cfg.regression, X, y);
    const auto fit = detail::ols(X, y, false);
    if (fit.rank < static_cast<std::size_t>(X.cols())) continue;
    const double aic = fit.aic();
    if (k == 0 || aic < best_aic) best_aic = aic, best_lag = k;
  }

  detail::adf_design(x, best_lag, best_lag, cfg.regression, X, y);
  const auto fit = detail::ols(X, y, true);
  if (fit.rank < static_cast<std::size_t>(X.cols()) || fit.ssr <= 0.0)
    fail(Errc::degenerate_series, "singular ADF regression");

  AdfResult r;
  const auto gi = static_cast<Eigen::Index>(det);
  r.gamma_hat = fit.coef(gi);
  r.statistic = fit.coef(gi) / fit.std_err(gi);
  r.p_value = mackinnon_p_value(r.statistic, cfg.regression);
  r.lags_used = best_lag;
  r.nobs = fit.nobs;
  r.is_stationary = r.p_value < cfg.stationarity_threshold;
  return r;
}

inline AdfResult adf_test(const Series& s, const AdfConfig& cfg = {}) { return adf_test(s.values(), cfg); }

// ---------------------------------------------------------------------------
// Dataset analysis
// ---------------------------------------------------------------------------

struct SeriesProfile {
  bool is_stationary = false;
  std::size_t seasonal_period = 0;  // samples at native resolution
  bool period_detected = false;
  AdfResult adf;
  std::optional<SpectrumPeak> peak;
};

struct AnalyzeConfig {
  AdfConfig adf;
  PeriodogramConfig spectrum;
  /// A detected period within this relative distance of one day snaps to
  /// exactly one day.
  double day_snap_tolerance = 0.03;
};

/// Stationarity from the ADF test; seasonal period from the periodogram,
/// falling back to one day when no peak is found.
inline SeriesProfile analyze(const Series& s, std::size_t native_points_per_day, const AnalyzeConfig& cfg = {}) {
  if (native_points_per_day < 1) fail(Errc::invalid_argument, "native_points_per_day must be positive");
  SeriesProfile out;
  out.adf = adf_test(s, cfg.adf);
  out.is_stationary = out.adf.is_stationary;
  out.peak = dominant_period(s, cfg.spectrum);
  if (out.peak) {
    auto period = static_cast<std::size_t>(out.peak->period);
    const double day = static_cast<double>(native_points_per_day);
    if (std::abs(static_cast<double>(period) - day) <= cfg.day_snap_tolerance * day) period = native_points_per_day;
    out.seasonal_period = period;
    out.period_detected = true;
  } else {
    out.seasonal_period = std::max<std::size_t>(native_points_per_day, 2);
  }
  return out;
}

}  // namespace adsas
