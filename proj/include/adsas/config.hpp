#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include <json.hpp>

#include "adsas/detector.hpp"
#include "adsas/error.hpp"

namespace adsas {

/// Scoring options for the benchmark.
struct EvalConfig {
  /// nullopt = max(3 intervals, 0.5% of the dataset span).
  std::optional<Duration> half_width;
  /// Outside alerts at most this far apart count as one false positive;
  /// nullopt = one sampling interval.
  std::optional<Duration> fp_collapse_gap;
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto"))
    out.reset();
  else
    out = v.get<T>();
}

template <class T>
void read_val(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json("auto");
}

}  // namespace detail

/// Overlays keys present in `j` onto `cfg`. Unknown keys are rejected so
/// typos do not silently fall back to defaults.
inline void apply_json(const nlohmann::json& j, DetectorConfig& cfg) {
  static const char* known[] = {"epsilon",          "undersample_factor",    "forecast_batch",
                                "train_min_periods", "residual_window",       "refit_every",
                                "sigma_floor",       "include_anomalies_in_stats", "stl_window_periods",
                                "stl_robust_iterations", "stl_inner_iterations", "seasonal_period",
                                "max_train_points",  "max_p",                 "max_q",
                                "max_P",             "max_Q",                 "parallel_search",
                                "max_iterations",    "adf_threshold"};
  if (!j.is_object()) fail(Errc::parse_error, "detector config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known))
      fail(Errc::parse_error, "unknown detector config key '" + it.key() + "'");
  try {
    using detail::read_opt;
    using detail::read_val;
    read_val(j, "epsilon", cfg.epsilon);
    read_opt(j, "undersample_factor", cfg.undersample_factor);
    read_opt(j, "forecast_batch", cfg.forecast_batch);
    read_val(j, "train_min_periods", cfg.train_min_periods);
    read_opt(j, "residual_window", cfg.residual_window);
    read_opt(j, "refit_every", cfg.refit_every);
    read_opt(j, "sigma_floor", cfg.sigma_floor);
    read_val(j, "include_anomalies_in_stats", cfg.include_anomalies_in_stats);
    read_val(j, "stl_window_periods", cfg.stl_window_periods);
    read_val(j, "stl_robust_iterations", cfg.stl_robust_iterations);
    read_val(j, "stl_inner_iterations", cfg.stl_inner_iterations);
    read_opt(j, "seasonal_period", cfg.seasonal_period);
    read_opt(j, "max_train_points", cfg.max_train_points);
    read_val(j, "max_p", cfg.search.max_p);
    read_val(j, "max_q", cfg.search.max_q);
    read_val(j, "max_P", cfg.search.max_P);
    read_val(j, "max_Q", cfg.search.max_Q);
    read_val(j, "parallel_search", cfg.search.parallel);
    read_val(j, "max_iterations", cfg.search.fit.optimizer.max_iterations);
    read_val(j, "adf_threshold", cfg.analysis.adf.stationarity_threshold);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("detector config: ") + e.what());
  }
  cfg.validate();
}

inline nlohmann::json to_json(const DetectorConfig& c) {
  using detail::opt_json;
  return {{"epsilon", c.epsilon},
          {"undersample_factor", opt_json(c.undersample_factor)},
          {"forecast_batch", opt_json(c.forecast_batch)},
          {"train_min_periods", c.train_min_periods},
          {"residual_window", opt_json(c.residual_window)},
          {"refit_every", opt_json(c.refit_every)},
          {"sigma_floor", opt_json(c.sigma_floor)},
          {"include_anomalies_in_stats", c.include_anomalies_in_stats},
          {"stl_window_periods", c.stl_window_periods},
          {"stl_robust_iterations", c.stl_robust_iterations},
          {"stl_inner_iterations", c.stl_inner_iterations},
          {"seasonal_period", opt_json(c.seasonal_period)},
          {"max_train_points", opt_json(c.max_train_points)},
          {"max_p", c.search.max_p},
          {"max_q", c.search.max_q},
          {"max_P", c.search.max_P},
          {"max_Q", c.search.max_Q},
          {"parallel_search", c.search.parallel},
          {"max_iterations", c.search.fit.optimizer.max_iterations},
          {"adf_threshold", c.analysis.adf.stationarity_threshold}};
}

inline void apply_json(const nlohmann::json& j, EvalConfig& cfg) {
  if (!j.is_object()) fail(Errc::parse_error, "eval config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "half_width" && it.key() != "fp_collapse_gap")
      fail(Errc::parse_error, "unknown eval config key '" + it.key() + "'");
  try {
    detail::read_opt(j, "half_width", cfg.half_width);
    detail::read_opt(j, "fp_collapse_gap", cfg.fp_collapse_gap);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("eval config: ") + e.what());
  }
  if (cfg.half_width && *cfg.half_width <= 0) fail(Errc::invalid_argument, "half_width must be positive");
  if (cfg.fp_collapse_gap && *cfg.fp_collapse_gap < 0) fail(Errc::invalid_argument, "fp_collapse_gap must be >= 0");
}

inline nlohmann::json to_json(const EvalConfig& c) {
  return {{"half_width", detail::opt_json(c.half_width)}, {"fp_collapse_gap", detail::opt_json(c.fp_collapse_gap)}};
}

}  // namespace adsas
