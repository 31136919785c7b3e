#pragma once

#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "adsas/config.hpp"
#include "adsas/detector.hpp"
#include "adsas/sarima.hpp"

namespace adsas {

inline constexpr int kSnapshotFormatVersion = 1;

/// Full detector state as JSON. Doubles travel as hexadecimal float
/// strings, so a restored detector continues bit-identically.
struct DetectorCodec {
  static nlohmann::json encode(const Detector& d) {
    auto hx = [](double v) { return detail::hex_double(v); };
    auto arr = [&](const std::deque<double>& q) {
      auto a = nlohmann::json::array();
      for (double v : q) a.push_back(hx(v));
      return a;
    };
    std::ostringstream model;
    write_model(model, d.model_);
    const auto& p = d.profile_;
    return {
        {"format", "adsas-detector"},
        {"version", kSnapshotFormatVersion},
        {"config", to_json(d.cfg_)},
        {"profile",
         {{"is_stationary", p.is_stationary},
          {"seasonal_period", p.seasonal_period},
          {"period_detected", p.period_detected},
          {"adf_statistic", hx(p.adf.statistic)},
          {"adf_p_value", hx(p.adf.p_value)},
          {"adf_lags", p.adf.lags_used}}},
        {"model", model.str()},
        {"interval", d.interval_},
        {"period", d.period_},
        {"factor", d.factor_},
        {"coarse_period", d.coarse_period_},
        {"batch", d.batch_},
        {"refit_every", d.refit_every_},
        {"residual_window", d.residual_window_},
        {"buffer_cap", d.buffer_cap_},
        {"since_refit", d.since_refit_},
        {"candidates_failed", d.candidates_failed_},
        {"sigma_floor", hx(d.sigma_floor_)},
        {"mu", hx(d.mu_)},
        {"var", hx(d.var_)},
        {"next_time", d.next_time_},
        {"buffer", arr(d.buffer_)},
        {"errors", arr(d.errors_)},
        {"residuals", arr(d.residuals_)},
        {"pending", arr(d.pending_)},
        {"diagnostics",
         {{"refits", d.diag_.refits},
          {"refit_failures", d.diag_.refit_failures},
          {"persistence_fallbacks", d.diag_.persistence_fallbacks},
          {"imputed_points", d.diag_.imputed_points},
          {"last_error", d.diag_.last_error}}},
    };
  }

  static Detector decode(const nlohmann::json& j) {
    try {
      if (j.value("format", "") != "adsas-detector") fail(Errc::format_error, "not a detector snapshot");
      if (j.at("version").get<int>() != kSnapshotFormatVersion) fail(Errc::format_error, "unsupported snapshot version");
      auto num = [](const nlohmann::json& v) { return detail::parse_double(v.get<std::string>()); };
      auto deq = [&](const nlohmann::json& a) {
        std::deque<double> q;
        for (const auto& v : a) q.push_back(num(v));
        return q;
      };
      Detector d;
      apply_json(j.at("config"), d.cfg_);
      const auto& p = j.at("profile");
      d.profile_.is_stationary = p.at("is_stationary").get<bool>();
      d.profile_.seasonal_period = p.at("seasonal_period").get<std::size_t>();
      d.profile_.period_detected = p.at("period_detected").get<bool>();
      d.profile_.adf.statistic = num(p.at("adf_statistic"));
      d.profile_.adf.p_value = num(p.at("adf_p_value"));
      d.profile_.adf.lags_used = p.at("adf_lags").get<std::size_t>();
      d.profile_.adf.is_stationary = d.profile_.is_stationary;
      std::istringstream ms(j.at("model").get<std::string>());
      d.model_ = read_model(ms);
      d.interval_ = j.at("interval").get<Duration>();
      d.period_ = j.at("period").get<std::size_t>();
      d.factor_ = j.at("factor").get<std::size_t>();
      d.coarse_period_ = j.at("coarse_period").get<std::size_t>();
      d.batch_ = j.at("batch").get<std::size_t>();
      d.refit_every_ = j.at("refit_every").get<std::size_t>();
      d.residual_window_ = j.at("residual_window").get<std::size_t>();
      d.buffer_cap_ = j.at("buffer_cap").get<std::size_t>();
      d.since_refit_ = j.at("since_refit").get<std::size_t>();
      d.candidates_failed_ = j.at("candidates_failed").get<std::size_t>();
      d.sigma_floor_ = num(j.at("sigma_floor"));
      d.mu_ = num(j.at("mu"));
      d.var_ = num(j.at("var"));
      d.next_time_ = j.at("next_time").get<Timestamp>();
      d.buffer_ = deq(j.at("buffer"));
      d.errors_ = deq(j.at("errors"));
      d.residuals_ = deq(j.at("residuals"));
      d.pending_ = deq(j.at("pending"));
      const auto& g = j.at("diagnostics");
      d.diag_.refits = g.at("refits").get<std::size_t>();
      d.diag_.refit_failures = g.at("refit_failures").get<std::size_t>();
      d.diag_.persistence_fallbacks = g.at("persistence_fallbacks").get<std::size_t>();
      d.diag_.imputed_points = g.at("imputed_points").get<std::size_t>();
      d.diag_.last_error = g.at("last_error").get<std::string>();
      if (d.interval_ <= 0 || d.factor_ < 1 || d.period_ < 2 || d.buffer_.empty())
        fail(Errc::format_error, "snapshot fields out of range");
      return d;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::format_error, std::string("detector snapshot: ") + e.what());
    }
  }
};

inline void save_detector(std::ostream& os, const Detector& d) { os << DetectorCodec::encode(d).dump() << '\n'; }

inline Detector load_detector(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format_error, std::string("detector snapshot: ") + e.what());
  }
  return DetectorCodec::decode(j);
}

}  // namespace adsas
