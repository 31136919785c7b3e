#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsas/error.hpp"
#include "adsas/sarima.hpp"
#include "adsas/series.hpp"
#include "adsas/spectral.hpp"
#include "adsas/stl.hpp"

namespace adsas {

/// Standard normal CDF of (r - mu) / sigma. erfc keeps full relative
/// accuracy in both tails.
inline double residual_cdf(double r, double mu, double sigma) {
  if (!(sigma > 0.0)) fail(Errc::invalid_argument, "sigma must be positive");
  return 0.5 * std::erfc(-(r - mu) / (sigma * std::numbers::sqrt2));
}

struct DetectorConfig {
  double epsilon = 0.0005;
  /// nullopt selects the factor automatically from the seasonal period.
  std::optional<std::size_t> undersample_factor;
  /// Native points forecast per fit; nullopt = one seasonal period.
  std::optional<std::size_t> forecast_batch;
  std::size_t train_min_periods = 3;
  /// Rolling residual window; nullopt = max(one seasonal period, 100).
  std::optional<std::size_t> residual_window;
  /// Points between refits; nullopt = forecast_batch.
  std::optional<std::size_t> refit_every;
  /// nullopt = 1e-9 * range of the training history.
  std::optional<double> sigma_floor;
  bool include_anomalies_in_stats = true;
  /// Sliding STL window over the error stream, in seasonal periods.
  std::size_t stl_window_periods = 4;
  /// Robust passes leave heavy-tailed remainders, so the error STL is plain.
  std::size_t stl_robust_iterations = 0;
  std::size_t stl_inner_iterations = 2;
  /// Forces the seasonal period (native samples) instead of detecting it.
  std::optional<std::size_t> seasonal_period;
  /// Caps the training buffer; nullopt = length of the training history.
  std::optional<std::size_t> max_train_points;
  OrderSearch search{};
  AnalyzeConfig analysis{};

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) fail(Errc::invalid_argument, "epsilon must lie in (0, 0.5)");
    auto positive = [](const std::optional<std::size_t>& v, const char* name) {
      if (v && *v < 1) fail(Errc::invalid_argument, std::string(name) + " must be >= 1");
    };
    positive(undersample_factor, "undersample_factor");
    positive(forecast_batch, "forecast_batch");
    positive(residual_window, "residual_window");
    positive(refit_every, "refit_every");
    positive(seasonal_period, "seasonal_period");
    positive(max_train_points, "max_train_points");
    if (train_min_periods < 1) fail(Errc::invalid_argument, "train_min_periods must be >= 1");
    if (stl_window_periods < 2) fail(Errc::invalid_argument, "stl_window_periods must be >= 2");
    if (stl_inner_iterations < 1) fail(Errc::invalid_argument, "stl_inner_iterations must be >= 1");
    if (sigma_floor && !(*sigma_floor > 0.0)) fail(Errc::invalid_argument, "sigma_floor must be positive");
  }
};

struct Verdict {
  Timestamp time = 0;
  double x = 0.0;  // observed
  double p = 0.0;  // predicted
  double e = 0.0;  // p - x
  double r = 0.0;  // STL remainder of the error stream
  double cdf = 0.5;
  bool is_anomaly = false;
  bool sigma_clamped = false;
};

/// {"t","x","p","e","r","cdf","anomaly"} on one line.
inline std::string to_json_line(const Verdict& v) {
  auto num = [](double d) {
    if (!std::isfinite(d)) return std::string("null");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return std::string(buf);
  };
  return "{\"t\":" + std::to_string(v.time) + ",\"x\":" + num(v.x) + ",\"p\":" + num(v.p) + ",\"e\":" + num(v.e) +
         ",\"r\":" + num(v.r) + ",\"cdf\":" + num(v.cdf) + ",\"anomaly\":" + (v.is_anomaly ? "true" : "false") + "}";
}

/// Undersampling factor for a native seasonal period: 1 when the period is
/// already short, else an hourly block when it divides the period into a
/// short coarse season, else the smallest divisor that does.
inline std::size_t auto_undersample_factor(std::size_t period, Duration interval, std::size_t max_coarse_period = 60) {
  if (period <= max_coarse_period) return 1;
  if (interval > 0 && interval < 3600 && 3600 % interval == 0) {
    const auto hourly = static_cast<std::size_t>(3600 / interval);
    if (period % hourly == 0 && period / hourly >= 2 && period / hourly <= max_coarse_period) return hourly;
  }
  for (std::size_t f = 2; f <= period / 2; ++f)
    if (period % f == 0 && period / f <= max_coarse_period) return f;
  return (period + max_coarse_period - 1) / max_coarse_period;
}

struct DetectorDiagnostics {
  std::size_t refits = 0;
  std::size_t refit_failures = 0;
  std::size_t persistence_fallbacks = 0;
  std::size_t imputed_points = 0;
  std::string last_error;
};

/// Streaming detector: SARIMA forecasts on an undersampled buffer,
/// spline-interpolated to native resolution; anomalies are residuals of an
/// STL of the prediction error that fall in either Gaussian tail.
class Detector {
 public:
  static Detector train(const Series& history, const DetectorConfig& cfg = {}) {
    cfg.validate();
    Detector d;
    d.cfg_ = cfg;
    d.interval_ = history.interval();
    const std::size_t per_day =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(86400.0 / static_cast<double>(history.interval()))));

    if (history.size() < 20) fail(Errc::too_short, "history too short to analyze");
    SeriesProfile prof;
    try {
      prof = analyze(history, per_day, cfg.analysis);
    } catch (const Error& e) {
      if (e.code() != Errc::degenerate_series) throw;
      // Constant history: let the model fit report the degenerate case.
      prof.is_stationary = true;
      prof.seasonal_period = std::max<std::size_t>(per_day, 2);
    }
    d.profile_ = prof;
    d.period_ = cfg.seasonal_period.value_or(prof.seasonal_period);
    if (d.period_ < 2) d.period_ = 2;
    if (history.size() < cfg.train_min_periods * d.period_)
      fail(Errc::too_short, "history has " + std::to_string(history.size()) + " points, need " +
                                std::to_string(cfg.train_min_periods * d.period_) + " (" +
                                std::to_string(cfg.train_min_periods) + " seasonal periods)");

    d.factor_ = cfg.undersample_factor.value_or(auto_undersample_factor(d.period_, history.interval()));
    d.coarse_period_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
                                                    static_cast<double>(d.period_) / static_cast<double>(d.factor_))));
    if (d.coarse_period_ < 2) d.coarse_period_ = 1;
    d.batch_ = cfg.forecast_batch.value_or(d.period_);
    d.refit_every_ = cfg.refit_every.value_or(d.batch_);
    d.residual_window_ = cfg.residual_window.value_or(std::max<std::size_t>(d.period_, 100));
    d.buffer_cap_ = std::max(cfg.max_train_points.value_or(history.size()), d.factor_ * 8);

    const auto vals = history.values();
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    d.sigma_floor_ = cfg.sigma_floor.value_or(std::max(1e-9 * (*mx - *mn), std::numeric_limits<double>::min()));

    const std::size_t keep = std::min(d.buffer_cap_, history.size());
    d.buffer_.assign(vals.end() - static_cast<std::ptrdiff_t>(keep), vals.end());
    d.next_time_ = history.end_time();

    const auto coarse = d.coarse_buffer();
    {
      // Every candidate shares the minimal differencing, so a flat result
      // there is the real cause of an all-failed search.
      const int s = d.coarse_period_ > 1 ? static_cast<int>(d.coarse_period_) : 1;
      const int dd = prof.is_stationary ? 0 : 1, D = s > 1 ? 1 : 0;
      const std::size_t lost = static_cast<std::size_t>(dd + D * s);
      if (coarse.size() > lost + 1) {
        const auto ws = difference(Series(0, 1, coarse), dd, D, s);
        const auto w = ws.values();
        if (std::all_of(w.begin(), w.end(), [&](double v) { return v == w.front(); }))
          fail(Errc::degenerate_after_differencing, "training history is constant after differencing");
      }
    }
    auto sel = select_orders_with_model(coarse, static_cast<int>(d.coarse_period_), prof.is_stationary, cfg.search);
    d.model_ = std::move(sel.model);
    d.candidates_failed_ = sel.candidates_failed;

    d.init_error_history(history);
    d.forecast_next_batch();
    return d;
  }

  /// Scores the point due at `t`. Earlier timestamps are rejected; skipped
  /// grid points are imputed with their forecasts and produce no verdict.
  Verdict process_point(Timestamp t, double x) {
    if (!std::isfinite(x)) fail(Errc::non_finite_value, "observation at t=" + std::to_string(t) + " is not finite");
    if (t < next_time_)
      fail(Errc::out_of_order_timestamp,
           "timestamp " + std::to_string(t) + " precedes expected " + std::to_string(next_time_));
    if ((t - next_time_) % interval_ != 0)
      fail(Errc::irregular_sampling, "timestamp " + std::to_string(t) + " is off the sampling grid");
    while (next_time_ < t) impute_next();

    ensure_forecast();
    Verdict v;
    v.time = t;
    v.x = x;
    v.p = pending_.front();
    v.e = v.p - v.x;
    push_error(v.e);
    v.r = last_remainder();
    residuals_.push_back(v.r);
    update_stats();
    const double sd = std::sqrt(var_);
    v.sigma_clamped = !(sd >= sigma_floor_);
    v.cdf = residual_cdf(v.r, mu_, v.sigma_clamped ? sigma_floor_ : sd);
    v.is_anomaly = v.cdf < cfg_.epsilon || v.cdf > 1.0 - cfg_.epsilon;
    if (v.is_anomaly && !cfg_.include_anomalies_in_stats) {
      residuals_.pop_back();
      update_stats();
    }
    advance(v.is_anomaly ? v.p : v.x);
    return v;
  }

  std::vector<Verdict> process(const Series& s) {
    std::vector<Verdict> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(process_point(s.time_at(i), s[i]));
    return out;
  }

  const DetectorConfig& config() const noexcept { return cfg_; }
  const SeriesProfile& profile() const noexcept { return profile_; }
  const SarimaModel& model() const noexcept { return model_; }
  std::size_t seasonal_period() const noexcept { return period_; }
  std::size_t undersample_factor() const noexcept { return factor_; }
  std::size_t coarse_period() const noexcept { return coarse_period_; }
  std::size_t forecast_batch() const noexcept { return batch_; }
  std::size_t residual_window() const noexcept { return residual_window_; }
  double sigma_floor() const noexcept { return sigma_floor_; }
  Timestamp next_time() const noexcept { return next_time_; }
  Duration interval() const noexcept { return interval_; }
  const std::deque<double>& train_buffer() const noexcept { return buffer_; }
  const std::deque<double>& error_history() const noexcept { return errors_; }
  const std::deque<double>& residuals() const noexcept { return residuals_; }
  const std::deque<double>& pending_forecast() const noexcept { return pending_; }
  double rolling_mean() const noexcept { return mu_; }
  double rolling_variance() const noexcept { return var_; }
  const DetectorDiagnostics& diagnostics() const noexcept { return diag_; }
  std::size_t candidates_failed() const noexcept { return candidates_failed_; }

 private:
  friend struct DetectorCodec;

  std::size_t stl_window() const noexcept { return cfg_.stl_window_periods * period_; }

  /// Block means of the buffer with blocks aligned to end at its last point.
  std::vector<double> coarse_buffer() const {
    const std::size_t n = buffer_.size();
    const std::size_t blocks = n / factor_;
    const std::size_t skip = n - blocks * factor_;
    std::vector<double> out(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < factor_; ++j) s += buffer_[skip + b * factor_ + j];
      out[b] = s / static_cast<double>(factor_);
    }
    return out;
  }

  /// Native-resolution predictions for `count` points following a series
  /// whose coarse block means are `coarse` (blocks end where prediction
  /// starts), given a model already conditioned on `coarse`.
  std::vector<double> interpolate_batch(const SarimaModel& m, std::span<const double> coarse, std::size_t count) const {
    const std::size_t f = factor_;
    const std::size_t h = (count + f - 1) / f + 1;
    const auto fc = forecast(m, h);
    // Times in native steps relative to the first predicted point; the
    // block ending just before it is centered at -(f + 1) / 2.
    const double half = (static_cast<double>(f) - 1.0) / 2.0;
    const std::size_t back = std::min<std::size_t>(3, coarse.size());
    std::vector<double> kt, kv;
    for (std::size_t i = back; i >= 1; --i) {
      kt.push_back(-static_cast<double>(i * f) + half);
      kv.push_back(coarse[coarse.size() - i]);
    }
    for (std::size_t j = 0; j < h; ++j) {
      kt.push_back(static_cast<double>(j * f) + half);
      kv.push_back(fc[j]);
    }
    std::vector<double> q(count);
    for (std::size_t i = 0; i < count; ++i) q[i] = static_cast<double>(i);
    if (f == 1 && back == 0) {
      // Knots already sit on the query grid.
      return {fc.begin(), fc.begin() + static_cast<std::ptrdiff_t>(count)};
    }
    if (kt.size() < 2) return std::vector<double>(count, kv.front());
    return cubic_spline_interpolate(kt, kv, q);
  }

  void forecast_next_batch() {
    const auto coarse = coarse_buffer();
    std::vector<double> next;
    try {
      next = interpolate_batch(model_, coarse, batch_);
    } catch (const Error& e) {
      // Persistence on the coarse scale.
      ++diag_.persistence_fallbacks;
      diag_.last_error = e.what();
      next.assign(batch_, coarse.empty() ? buffer_.back() : coarse.back());
    }
    pending_.assign(next.begin(), next.end());
    since_refit_ = 0;
  }

  void refit() {
    const auto coarse = coarse_buffer();
    ++diag_.refits;
    try {
      model_ = fit(std::span<const double>(coarse), model_.orders, cfg_.search.fit);
    } catch (const Error& e) {
      ++diag_.refit_failures;
      diag_.last_error = e.what();
      try {
        model_ = condition_on(model_, coarse);
      } catch (const Error&) {
        // forecast_next_batch falls back to persistence if the stale tail
        // cannot produce a forecast either.
      }
    }
    forecast_next_batch();
  }

  void ensure_forecast() {
    if (pending_.empty() || since_refit_ >= refit_every_) refit();
  }

  void advance(double fed) {
    buffer_.push_back(fed);
    while (buffer_.size() > buffer_cap_) buffer_.pop_front();
    pending_.pop_front();
    ++since_refit_;
    next_time_ += interval_;
  }

  void impute_next() {
    ensure_forecast();
    const double p = pending_.front();
    push_error(0.0);
    ++diag_.imputed_points;
    advance(p);
  }

  void push_error(double e) {
    errors_.push_back(e);
    while (errors_.size() > stl_window()) errors_.pop_front();
  }

  StlConfig error_stl_config() const {
    StlConfig c;
    c.period = period_;
    c.robust_iterations = cfg_.stl_robust_iterations;
    c.inner_iterations = cfg_.stl_inner_iterations;
    return c;
  }

  double last_remainder() const {
    if (errors_.size() < 2 * period_) {
      // Not enough history for STL yet: deviation from the running mean.
      const double m = std::accumulate(errors_.begin(), errors_.end(), 0.0) / static_cast<double>(errors_.size());
      return errors_.back() - m;
    }
    std::vector<double> e(errors_.begin(), errors_.end());
    return stl(e, error_stl_config()).remainder.back();
  }

  void update_stats() {
    while (residuals_.size() > residual_window_) residuals_.pop_front();
    if (residuals_.empty()) {
      mu_ = 0.0, var_ = 0.0;
      return;
    }
    const double n = static_cast<double>(residuals_.size());
    double m = 0.0;
    for (double r : residuals_) m += r;
    m /= n;
    double v = 0.0;
    for (double r : residuals_) v += (r - m) * (r - m);
    mu_ = m;
    var_ = v / n;
  }

  /// Seeds the error stream by replaying batch forecasts over the tail of
  /// the training history with the fitted coefficients. Early points that
  /// cannot be replayed use in-sample one-step errors.
  void init_error_history(const Series& history) {
    const auto vals = history.values();
    const std::size_t n = vals.size();
    const std::size_t f = factor_;
    const std::size_t want = std::min(n, stl_window() + residual_window_);
    std::vector<double> err(n, std::numeric_limits<double>::quiet_NaN());

    const auto& o = model_.orders;
    const std::size_t min_coarse = static_cast<std::size_t>(o.diff_degree() + o.ar_degree()) + 2;
    // Replay batches ending at the history end, walking backwards.
    std::size_t end = n;
    while (end > n - want) {
      const std::size_t len = std::min(batch_, end);
      const std::size_t start = end - len;
      const std::size_t blocks = start / f;
      if (blocks < min_coarse) break;
      std::vector<double> coarse(blocks);
      const std::size_t skip = start - blocks * f;
      for (std::size_t b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < f; ++j) s += vals[skip + b * f + j];
        coarse[b] = s / static_cast<double>(f);
      }
      try {
        const auto m = condition_on(model_, coarse);
        const auto p = interpolate_batch(m, coarse, len);
        for (std::size_t i = 0; i < len; ++i) err[start + i] = p[i] - vals[start + i];
      } catch (const Error&) {
        break;
      }
      end = start;
    }

    if (end > n - want) {
      // One-step in-sample errors for the rest, interpolated like forecasts.
      const std::size_t blocks = n / f;
      const std::size_t skip = n - blocks * f;
      std::vector<double> coarse(blocks);
      for (std::size_t b = 0; b < blocks; ++b) {
        double s = 0.0;
        for (std::size_t j = 0; j < f; ++j) s += vals[skip + b * f + j];
        coarse[b] = s / static_cast<double>(f);
      }
      const auto pred = one_step_predictions(model_, coarse);
      std::vector<double> kt(blocks), q;
      for (std::size_t b = 0; b < blocks; ++b) kt[b] = static_cast<double>(skip + b * f) + (static_cast<double>(f) - 1.0) / 2.0;
      std::vector<std::size_t> idx;
      for (std::size_t i = n - want; i < end; ++i) {
        if (blocks >= 2 && static_cast<double>(i) >= kt.front() && static_cast<double>(i) <= kt.back()) {
          q.push_back(static_cast<double>(i));
          idx.push_back(i);
        } else {
          err[i] = 0.0;
        }
      }
      if (!q.empty()) {
        const auto p = cubic_spline_interpolate(kt, pred, q);
        for (std::size_t k = 0; k < q.size(); ++k) err[idx[k]] = p[k] - vals[idx[k]];
      }
    }

    // Stream the seeded errors through the same end-point STL used online.
    errors_.clear();
    residuals_.clear();
    for (std::size_t i = n - want; i < n; ++i) {
      push_error(err[i]);
      if (i + residual_window_ >= n) residuals_.push_back(last_remainder());
    }
    update_stats();
  }

  DetectorConfig cfg_;
  SeriesProfile profile_;
  SarimaModel model_;
  Duration interval_ = 1;
  std::size_t period_ = 2, factor_ = 1, coarse_period_ = 1, batch_ = 1, refit_every_ = 1, residual_window_ = 100;
  std::size_t buffer_cap_ = 0, since_refit_ = 0, candidates_failed_ = 0;
  double sigma_floor_ = 0.0, mu_ = 0.0, var_ = 0.0;
  Timestamp next_time_ = 0;
  std::deque<double> buffer_, errors_, residuals_, pending_;
  DetectorDiagnostics diag_;
};

}  // namespace adsas
