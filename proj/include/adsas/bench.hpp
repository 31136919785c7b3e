#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adsas/config.hpp"
#include "adsas/dataset.hpp"
#include "adsas/detector.hpp"
#include "adsas/window_eval.hpp"

namespace adsas {

struct DatasetResult {
  std::string name;
  bool ok = false;
  std::string error;
  std::size_t points = 0, train_points = 0, scored_points = 0;
  std::size_t labels_scored = 0, labels_in_train = 0;
  Duration half_width = 0;
  std::size_t total_windows = 0, anomaly_windows = 0;
  ScoreReport score;
  std::vector<Timestamp> alerts;
  double build_seconds = 0.0, classify_mean_seconds = 0.0, classify_p99_seconds = 0.0;
  std::string orders;
  std::size_t seasonal_period = 0, undersample_factor = 0;
  DetectorDiagnostics diagnostics;
  std::vector<Verdict> verdicts;  // filled only on request
};

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
  const auto idx = std::min(k, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

/// Trains on the leading train_fraction of the series, streams the rest,
/// and scores alerts against windows around the labels in the streamed
/// part. Labels inside the training prefix cannot be detected and are
/// left out of the score.
inline DatasetResult run_dataset(const Dataset& ds, const DetectorConfig& cfg = {}, const EvalConfig& eval = {},
                                 bool keep_verdicts = false) {
  using clock = std::chrono::steady_clock;
  DatasetResult r;
  r.name = ds.manifest.name;
  const Series& s = ds.series;
  r.points = s.size();
  r.train_points = static_cast<std::size_t>(std::floor(ds.manifest.train_fraction * static_cast<double>(s.size())));
  if (r.train_points < 2 || r.train_points >= s.size()) fail(Errc::too_short, "train split leaves nothing to stream");
  r.scored_points = s.size() - r.train_points;

  const auto t0 = clock::now();
  auto det = Detector::train(s.slice(0, r.train_points), cfg);
  r.build_seconds = std::chrono::duration<double>(clock::now() - t0).count();
  r.orders = to_string(det.model().orders);
  r.seasonal_period = det.seasonal_period();
  r.undersample_factor = det.undersample_factor();

  std::vector<double> lat;
  lat.reserve(r.scored_points);
  if (keep_verdicts) r.verdicts.reserve(r.scored_points);
  for (std::size_t i = r.train_points; i < s.size(); ++i) {
    const auto a = clock::now();
    const auto v = det.process_point(s.time_at(i), s[i]);
    lat.push_back(std::chrono::duration<double>(clock::now() - a).count());
    if (v.is_anomaly) r.alerts.push_back(v.time);
    if (keep_verdicts) r.verdicts.push_back(v);
  }
  double sum = 0.0;
  for (double x : lat) sum += x;
  r.classify_mean_seconds = lat.empty() ? 0.0 : sum / static_cast<double>(lat.size());
  r.classify_p99_seconds = percentile(lat, 0.99);
  r.diagnostics = det.diagnostics();

  const Timestamp start = s.time_at(r.train_points), end = s.time_at(s.size() - 1);
  r.half_width = eval.half_width.value_or(default_half_width(s.interval(), s.time_at(s.size() - 1) - s.start_time()));
  std::vector<Timestamp> labels;
  for (Timestamp t : ds.manifest.labels) {
    if (t >= start)
      labels.push_back(t);
    else
      ++r.labels_in_train;
  }
  r.labels_scored = labels.size();
  const auto windows = build_windows(labels, r.half_width, start, end);
  r.anomaly_windows = windows.size();
  r.total_windows = total_windows(end - start, r.half_width);
  r.score = score(r.alerts, windows, eval.fp_collapse_gap.value_or(s.interval()));
  r.ok = true;
  return r;
}

struct BenchEntry {
  std::string name;  // empty = CSV file name
  std::filesystem::path csv;
  std::filesystem::path labels;  // empty = no labels
  std::optional<double> train_fraction;
};

struct BenchReport {
  DetectorConfig detector;
  EvalConfig eval;
  std::vector<DatasetResult> rows;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.ok; }));
  }
};

inline DatasetResult run_entry(const BenchEntry& e, const DetectorConfig& cfg, const EvalConfig& eval,
                               bool keep_verdicts) {
  DatasetResult r;
  r.name = e.name.empty() ? e.csv.filename().string() : e.name;
  try {
    auto ds = load_dataset(e.csv, e.labels, e.train_fraction.value_or(0.3));
    ds.manifest.name = r.name;
    return run_dataset(ds, cfg, eval, keep_verdicts);
  } catch (const std::exception& ex) {
    r.ok = false;
    r.error = ex.what();
    return r;
  }
}

/// One detector per dataset on a small worker pool. Row order follows the
/// input order regardless of completion order.
inline BenchReport run_bench(const std::vector<BenchEntry>& entries, const DetectorConfig& cfg = {},
                             const EvalConfig& eval = {}, std::size_t workers = 0, bool keep_verdicts = false) {
  if (entries.empty()) fail(Errc::invalid_argument, "no datasets to benchmark");
  cfg.validate();
  BenchReport rep{cfg, eval, std::vector<DatasetResult>(entries.size())};
  if (workers == 0) workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 4u));
  workers = std::min(workers, entries.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < entries.size(); i = next++)
        rep.rows[i] = run_entry(entries[i], cfg, eval, keep_verdicts);
    }));
  for (auto& f : pool) f.get();
  return rep;
}

/// Manifest: {"datasets": [{"csv", "labels"?, "name"?, "train_fraction"?}],
/// "detector": {...}?, "eval": {...}?}. Relative paths resolve against the
/// manifest's directory.
struct BenchManifest {
  std::vector<BenchEntry> entries;
  nlohmann::json detector = nlohmann::json::object();
  nlohmann::json eval = nlohmann::json::object();
};

inline BenchManifest parse_bench_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  BenchManifest m;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    for (const auto& d : j.at("datasets")) {
      BenchEntry e;
      e.csv = resolve(d.at("csv").get<std::string>());
      if (d.contains("labels")) e.labels = resolve(d.at("labels").get<std::string>());
      e.name = d.value("name", std::string{});
      if (d.contains("train_fraction")) e.train_fraction = d.at("train_fraction").get<double>();
      m.entries.push_back(std::move(e));
    }
    if (j.contains("detector")) m.detector = j.at("detector");
    if (j.contains("eval")) m.eval = j.at("eval");
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, std::string("bench manifest: ") + e.what());
  }
  return m;
}

inline BenchManifest read_bench_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::parse_error, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path.string() + ": " + e.what());
  }
  return parse_bench_manifest(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ScoreReport& s) {
  return {{"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}, {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::json to_json(const DatasetResult& r, const DetectorConfig& cfg, const EvalConfig& eval) {
  nlohmann::json j{{"dataset", r.name}, {"ok", r.ok}};
  if (!r.ok) {
    j["error"] = r.error;
  } else {
    j.update({{"points", r.points},
              {"train_points", r.train_points},
              {"scored_points", r.scored_points},
              {"labels_scored", r.labels_scored},
              {"labels_in_train", r.labels_in_train},
              {"half_width_seconds", r.half_width},
              {"total_windows", r.total_windows},
              {"anomaly_windows", r.anomaly_windows},
              {"score", to_json(r.score)},
              {"alerts", r.alerts.size()},
              {"build_seconds", r.build_seconds},
              {"classify_mean_seconds", r.classify_mean_seconds},
              {"classify_p99_seconds", r.classify_p99_seconds},
              {"orders", r.orders},
              {"seasonal_period", r.seasonal_period},
              {"undersample_factor", r.undersample_factor},
              {"refits", r.diagnostics.refits},
              {"refit_failures", r.diagnostics.refit_failures},
              {"persistence_fallbacks", r.diagnostics.persistence_fallbacks},
              {"imputed_points", r.diagnostics.imputed_points}});
  }
  j["config"] = {{"detector", to_json(cfg)}, {"eval", to_json(eval)}};
  return j;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_table_csv(std::ostream& os, const BenchReport& rep) {
  os << "dataset,total_windows,anomaly_windows,precision,recall,f1,tp,fp,fn,build_s,classify_mean_s,classify_p99_s,"
        "status\n";
  for (const auto& r : rep.rows) {
    if (!r.ok) {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), '"', '\'');
      os << r.name << ",,,,,,,,,,,,\"error: " << msg << "\"\n";
      continue;
    }
    os << r.name << ',' << r.total_windows << ',' << r.anomaly_windows << ',' << fixed(r.score.precision, 3) << ','
       << fixed(r.score.recall, 3) << ',' << fixed(r.score.f1, 3) << ',' << r.score.tp << ',' << r.score.fp << ','
       << r.score.fn << ',' << fixed(r.build_seconds, 3) << ',' << fixed(r.classify_mean_seconds, 6) << ','
       << fixed(r.classify_p99_seconds, 6) << ",ok\n";
  }
}

/// Aligned plain-text table followed by the evaluation settings in use.
inline void write_table_text(std::ostream& os, const BenchReport& rep) {
  const std::vector<std::string> head{"dataset", "windows", "anomaly", "precision", "recall", "F1",
                                      "build s", "mean ms", "p99 ms"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.rows) {
    if (!r.ok) {
      rows.push_back({r.name, "error: " + r.error});
      continue;
    }
    rows.push_back({r.name, std::to_string(r.total_windows), std::to_string(r.anomaly_windows),
                    fixed(r.score.precision, 3), fixed(r.score.recall, 3), fixed(r.score.f1, 3),
                    fixed(r.build_seconds, 3), fixed(1e3 * r.classify_mean_seconds, 2),
                    fixed(1e3 * r.classify_p99_seconds, 2)});
  }
  std::vector<std::size_t> w(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) w[c] = head[c].size();
  for (const auto& row : rows)
    if (row.size() == head.size())
      for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) os << "  ";
      if (c == 0 || row.size() != head.size())
        os << row[c] << std::string(row.size() == head.size() ? w[c] - row[c].size() : 0, ' ');
      else
        os << std::string(w[c] - row[c].size(), ' ') << row[c];
    }
    os << '\n';
  };
  line(head);
  for (const auto& row : rows) line(row);
  os << "half_width: "
     << (rep.eval.half_width ? std::to_string(*rep.eval.half_width) + " s" : std::string("auto (max(3 intervals, 0.5% of span))"))
     << "; outside alerts within "
     << (rep.eval.fp_collapse_gap ? std::to_string(*rep.eval.fp_collapse_gap) + " s" : std::string("one interval"))
     << " collapse to one FP; epsilon " << rep.detector.epsilon << '\n';
}

/// Observed, predicted, error and residual per scored point.
inline void write_plot_csv(std::ostream& os, std::span<const Verdict> verdicts) {
  os << "timestamp,observed,predicted,error,residual,cdf,anomaly\n";
  for (const auto& v : verdicts)
    os << format_timestamp(v.time) << ',' << format_value(v.x) << ',' << format_value(v.p) << ',' << format_value(v.e)
       << ',' << format_value(v.r) << ',' << format_value(v.cdf) << ',' << (v.is_anomaly ? 1 : 0) << '\n';
}

}  // namespace adsas
