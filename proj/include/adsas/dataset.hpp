#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "adsas/error.hpp"
#include "adsas/series.hpp"

namespace adsas {

// ---------------------------------------------------------------------------
// Timestamps: "YYYY-MM-DD HH:MM:SS" in UTC, optional ".ffffff" ignored.
// ---------------------------------------------------------------------------

inline std::optional<Timestamp> try_parse_timestamp(std::string_view s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' || s[16] != ':')
    return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  const auto Y = num(0, 4), M = num(5, 2), D = num(8, 2), h = num(11, 2), m = num(14, 2), sec = num(17, 2);
  if (!Y || !M || !D || !h || !m || !sec) return std::nullopt;
  if (s.size() > 19) {
    if (s[19] != '.') return std::nullopt;
    for (std::size_t i = 20; i < s.size(); ++i)
      if (s[i] < '0' || s[i] > '9') return std::nullopt;
  }
  using namespace std::chrono;
  const year_month_day ymd{year{*Y}, month{static_cast<unsigned>(*M)}, day{static_cast<unsigned>(*D)}};
  if (!ymd.ok() || *h > 23 || *m > 59 || *sec > 59) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{*h} + minutes{*m} + seconds{*sec};
  return static_cast<Timestamp>(tp.time_since_epoch().count());
}

inline Timestamp parse_timestamp(std::string_view s) {
  auto t = try_parse_timestamp(s);
  if (!t) fail(Errc::parse_error, "bad timestamp '" + std::string(s) + "'");
  return *t;
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const sys_seconds tp{seconds{t}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{tp - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct RawSeries {
  std::vector<Timestamp> times;
  std::vector<double> values;
};

/// Parses one "timestamp,value" row; returns false for a blank line.
inline bool parse_csv_row(const std::string& line, std::size_t line_no, Timestamp& t, double& v) {
  std::string_view sv(line);
  while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
  if (sv.empty()) return false;
  const auto comma = sv.find(',');
  auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
  if (comma == std::string_view::npos) fail(Errc::parse_error, where() + "expected 'timestamp,value'");
  auto ts = try_parse_timestamp(sv.substr(0, comma));
  if (!ts) fail(Errc::parse_error, where() + "bad timestamp '" + std::string(sv.substr(0, comma)) + "'");
  std::string val(sv.substr(comma + 1));
  char* end = nullptr;
  v = std::strtod(val.c_str(), &end);
  while (end && *end == ' ') ++end;
  if (val.empty() || end == val.c_str() || *end != '\0') fail(Errc::parse_error, where() + "bad value '" + val + "'");
  if (!std::isfinite(v)) fail(Errc::non_finite_value, where() + "value is not finite");
  t = *ts;
  return true;
}

inline RawSeries read_csv(std::istream& in) {
  RawSeries out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(Errc::parse_error, "line 1: missing header");
  ++line_no;
  {
    std::string h = line;
    h.erase(std::remove_if(h.begin(), h.end(), [](char c) { return c == '\r' || c == ' ' || c == '"'; }), h.end());
    if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
    if (h != "timestamp,value") fail(Errc::parse_error, "line 1: header must be 'timestamp,value'");
  }
  while (std::getline(in, line)) {
    ++line_no;
    Timestamp t;
    double v;
    if (!parse_csv_row(line, line_no, t, v)) continue;
    if (!out.times.empty() && t <= out.times.back())
      fail(Errc::unsorted_timestamps, "line " + std::to_string(line_no) + ": timestamp not after the previous row");
    out.times.push_back(t);
    out.values.push_back(v);
  }
  if (out.times.empty()) fail(Errc::empty_input, "CSV has no data rows");
  return out;
}

inline RawSeries read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::parse_error, "cannot open " + path.string());
  return read_csv(in);
}

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(std::ostream& os, const Series& s) {
  os << "timestamp,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) os << format_timestamp(s.time_at(i)) << ',' << format_value(s[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

/// A JSON array of timestamps, or an object mapping dataset names (matched
/// by file name, with or without directories and extension) to arrays.
inline std::vector<Timestamp> parse_labels(const nlohmann::json& j, const std::string& dataset_name) {
  const nlohmann::json* arr = nullptr;
  if (j.is_array()) {
    arr = &j;
  } else if (j.is_object()) {
    const auto want = std::filesystem::path(dataset_name);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto key = std::filesystem::path(it.key());
      if (it.key() == dataset_name || key.filename() == want.filename() || key.stem() == want.stem()) {
        arr = &it.value();
        break;
      }
    }
    if (!arr) return {};
  } else {
    fail(Errc::parse_error, "labels must be a JSON array or object");
  }
  if (!arr->is_array()) fail(Errc::parse_error, "labels entry for '" + dataset_name + "' is not an array");
  std::vector<Timestamp> out;
  for (const auto& v : *arr) {
    if (v.is_string())
      out.push_back(parse_timestamp(v.get<std::string>()));
    else if (v.is_number_integer())
      out.push_back(v.get<Timestamp>());
    else
      fail(Errc::parse_error, "label entries must be timestamp strings");
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Timestamp> read_labels_file(const std::filesystem::path& path, const std::string& dataset_name) {
  std::ifstream in(path);
  if (!in) fail(Errc::parse_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path.string() + ": " + e.what());
  }
  return parse_labels(j, dataset_name);
}

struct DatasetManifest {
  std::string name;
  std::string csv_path;
  std::vector<Timestamp> labels;
  double train_fraction = 0.3;
  std::size_t native_points_per_day = 0;
};

struct Dataset {
  DatasetManifest manifest;
  Series series;
};

inline std::size_t points_per_day(Duration interval) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(86400.0 / static_cast<double>(interval))));
}

/// Every label must fall on a grid point of the regularized series.
inline void check_labels(const Series& s, std::span<const Timestamp> labels) {
  for (Timestamp t : labels) {
    const bool on_grid = t >= s.start_time() && t < s.end_time() && (t - s.start_time()) % s.interval() == 0;
    if (!on_grid) fail(Errc::unknown_label_timestamp, "label " + format_timestamp(t) + " matches no series timestamp");
  }
}

inline Dataset make_dataset(std::string name, const RawSeries& raw, std::vector<Timestamp> labels,
                            double train_fraction = 0.3) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(Errc::invalid_argument, "train_fraction must lie in (0, 1)");
  Dataset d;
  d.series = regularize(raw.times, raw.values);
  std::sort(labels.begin(), labels.end());
  check_labels(d.series, labels);
  d.manifest.name = std::move(name);
  d.manifest.labels = std::move(labels);
  d.manifest.train_fraction = train_fraction;
  d.manifest.native_points_per_day = points_per_day(d.series.interval());
  return d;
}

inline Dataset load_dataset(const std::filesystem::path& csv_path, const std::filesystem::path& labels_path = {},
                            double train_fraction = 0.3) {
  const auto raw = read_csv_file(csv_path);
  std::vector<Timestamp> labels;
  const std::string name = csv_path.filename().string();
  if (!labels_path.empty()) labels = read_labels_file(labels_path, name);
  auto d = make_dataset(name, raw, std::move(labels), train_fraction);
  d.manifest.csv_path = csv_path.string();
  return d;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class AnomalyKind { peak, dip, concept_drift, contextual, collective };

inline const char* to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::peak: return "peak";
    case AnomalyKind::dip: return "dip";
    case AnomalyKind::concept_drift: return "concept_drift";
    case AnomalyKind::contextual: return "contextual";
    case AnomalyKind::collective: return "collective";
  }
  return "?";
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
  if (s == "peak") return AnomalyKind::peak;
  if (s == "dip") return AnomalyKind::dip;
  if (s == "concept_drift" || s == "drift") return AnomalyKind::concept_drift;
  if (s == "contextual") return AnomalyKind::contextual;
  if (s == "collective") return AnomalyKind::collective;
  fail(Errc::spec_out_of_range, "unknown anomaly kind '" + s + "'");
}

struct InjectedAnomaly {
  AnomalyKind kind = AnomalyKind::peak;
  std::size_t index = 0;       // sample index of the onset
  double magnitude = 0.0;      // additive size (peak, dip, drift)
  std::size_t duration = 1;    // samples (contextual, collective)
};

struct SyntheticSpec {
  Timestamp start_time = 1'420'070'400;  // 2015-01-01 00:00:00
  Duration interval = 300;
  std::size_t length = 4032;
  double level = 0.0;
  double period = 288.0;  // samples per cycle
  double amplitude = 10.0;
  double noise_sigma = 1.0;
  double trend = 0.0;  // per sample
  std::uint64_t seed = 1;
  std::vector<InjectedAnomaly> anomalies;
};

struct SyntheticData {
  Series series;
  std::vector<Timestamp> labels;
};

inline double synthetic_base(const SyntheticSpec& s, double i, double phase = 0.0) {
  return s.level + s.amplitude * std::sin(2.0 * std::numbers::pi * i / s.period + phase) + s.trend * i;
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.length < 2) fail(Errc::spec_out_of_range, "length must be >= 2");
  if (spec.interval <= 0) fail(Errc::spec_out_of_range, "interval must be positive");
  if (!(spec.period > 0.0)) fail(Errc::spec_out_of_range, "period must be positive");
  if (!(spec.noise_sigma >= 0.0)) fail(Errc::spec_out_of_range, "noise_sigma must be >= 0");
  for (const auto& a : spec.anomalies) {
    if (a.index >= spec.length) fail(Errc::spec_out_of_range, "anomaly index beyond series length");
    if (a.duration < 1 || a.index + a.duration > spec.length)
      fail(Errc::spec_out_of_range, "anomaly duration runs past the series end");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> eps(spec.length);
  for (double& e : eps) e = spec.noise_sigma * noise(rng);
  std::vector<double> v(spec.length);
  for (std::size_t i = 0; i < spec.length; ++i) v[i] = synthetic_base(spec, static_cast<double>(i)) + eps[i];

  SyntheticData out;
  for (const auto& a : spec.anomalies) {
    switch (a.kind) {
      case AnomalyKind::peak: v[a.index] += a.magnitude; break;
      case AnomalyKind::dip: v[a.index] -= a.magnitude; break;
      case AnomalyKind::concept_drift:
        for (std::size_t i = a.index; i < spec.length; ++i) v[i] += a.magnitude;
        break;
      case AnomalyKind::contextual:
        // Half-cycle phase shift: plausible values at the wrong time.
        for (std::size_t i = a.index; i < a.index + a.duration; ++i)
          v[i] += synthetic_base(spec, static_cast<double>(i), std::numbers::pi) - synthetic_base(spec, static_cast<double>(i));
        break;
      case AnomalyKind::collective: {
        std::vector<double> seg(v.begin() + static_cast<std::ptrdiff_t>(a.index),
                                v.begin() + static_cast<std::ptrdiff_t>(a.index + a.duration));
        std::shuffle(seg.begin(), seg.end(), rng);
        std::copy(seg.begin(), seg.end(), v.begin() + static_cast<std::ptrdiff_t>(a.index));
        break;
      }
    }
    out.labels.push_back(spec.start_time + static_cast<Timestamp>(a.index) * spec.interval);
  }
  std::sort(out.labels.begin(), out.labels.end());
  out.series = Series(spec.start_time, spec.interval, std::move(v));
  return out;
}

/// JSON form: {"start": "2015-01-01 00:00:00" | epoch, "interval": 300,
/// "length": n, "level", "period", "amplitude", "noise_sigma", "trend",
/// "seed", "anomalies": [{"kind", "index" | "time", "magnitude",
/// "duration"}]}.
inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    if (j.contains("start")) {
      const auto& st = j.at("start");
      s.start_time = st.is_string() ? parse_timestamp(st.get<std::string>()) : st.get<Timestamp>();
    }
    s.interval = j.value("interval", s.interval);
    s.length = j.value("length", s.length);
    s.level = j.value("level", s.level);
    s.period = j.value("period", s.period);
    s.amplitude = j.value("amplitude", s.amplitude);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.trend = j.value("trend", s.trend);
    s.seed = j.value("seed", s.seed);
    for (const auto& a : j.value("anomalies", nlohmann::json::array())) {
      InjectedAnomaly ia;
      ia.kind = anomaly_kind_from_string(a.at("kind").get<std::string>());
      if (a.contains("index")) {
        const auto idx = a.at("index").get<std::int64_t>();
        if (idx < 0) fail(Errc::spec_out_of_range, "anomaly index must be >= 0");
        ia.index = static_cast<std::size_t>(idx);
      } else {
        const auto& tv = a.at("time");
        const Timestamp t = tv.is_string() ? parse_timestamp(tv.get<std::string>()) : tv.get<Timestamp>();
        if (t < s.start_time || (t - s.start_time) % s.interval != 0)
          fail(Errc::spec_out_of_range, "anomaly time is not a sample time");
        ia.index = static_cast<std::size_t>((t - s.start_time) / s.interval);
      }
      ia.magnitude = a.value("magnitude", 0.0);
      ia.duration = a.value("duration", std::size_t{1});
      s.anomalies.push_back(ia);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("synthetic spec: ") + e.what());
  }
  return s;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
  nlohmann::json j{{"start", format_timestamp(s.start_time)}, {"interval", s.interval}, {"length", s.length},
                   {"level", s.level}, {"period", s.period}, {"amplitude", s.amplitude},
                   {"noise_sigma", s.noise_sigma}, {"trend", s.trend}, {"seed", s.seed}};
  auto arr = nlohmann::json::array();
  for (const auto& a : s.anomalies)
    arr.push_back({{"kind", to_string(a.kind)}, {"index", a.index}, {"magnitude", a.magnitude}, {"duration", a.duration}});
  j["anomalies"] = arr;
  return j;
}

}  // namespace adsas
