// Acceptance suite. Usage: adsas_acceptance <criterion 1..7>. Prints one
// PASS/FAIL/SKIP line; exit 0 pass, 1 fail, 77 skip.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "adsas/bench.hpp"
#include "adsas/dataset.hpp"
#include "adsas/detector.hpp"
#include "adsas/sarima.hpp"
#include "adsas/series.hpp"
#include "adsas/spectral.hpp"
#include "adsas/stl.hpp"
#include "adsas/window_eval.hpp"
#include "test_util.hpp"

using namespace adsas;
using namespace adsas::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum Kind { pass, fail, skip } kind;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1. numerics oracles ---------------------------------------------------

Outcome numerics() {
  // Spline on affine data.
  double spline_err = 0.0;
  {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-10, 10), gap(0.01, 5.0);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 40);
      const double a = u(rng), b = u(rng);
      std::vector<double> t(n), v(n);
      double x = u(rng);
      for (std::size_t i = 0; i < n; ++i) t[i] = x, v[i] = a + b * x, x += gap(rng);
      std::uniform_real_distribution<double> in(t.front(), t.back());
      std::vector<double> q(64);
      for (auto& y : q) y = in(rng);
      const auto r = cubic_spline_interpolate(t, v, q);
      for (std::size_t i = 0; i < q.size(); ++i)
        spline_err = std::max(spline_err, std::abs(r[i] - (a + b * q[i])) / std::max(1.0, std::abs(a) + std::abs(b * q[i])));
    }
  }
  // STL reconstruction.
  double stl_err = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t period = 2 + static_cast<std::size_t>(trial % 29);
    const std::size_t n = period * (2 + trial % 6) + static_cast<std::size_t>(trial % 5);
    auto y = normal_draws(n, 700 + static_cast<std::uint64_t>(trial), 2.0);
    StlConfig cfg;
    cfg.period = period;
    cfg.robust_iterations = static_cast<std::size_t>(trial % 3);
    const auto d = stl(y, cfg);
    for (std::size_t i = 0; i < n; ++i) stl_err = std::max(stl_err, std::abs(d.trend[i] + d.seasonal[i] + d.remainder[i] - y[i]));
  }
  // Normal CDF against 20-digit reference values (mpmath ncdf).
  constexpr double kPhi[][2] = {{-8.0, 6.2209605742717841235e-16}, {-5.0, 2.8665157187919391167e-7},
                                {-1.96, 0.024997895148220436213},   {-1.0, 0.15865525393145705141},
                                {0.0, 0.5},                         {0.3, 0.61791142218895263307},
                                {1.96, 0.97500210485177956379},     {3.2905, 0.99949995249096121838},
                                {5.0, 0.99999971334842812081},      {8.0, 0.9999999999999993779}};
  double cdf_err = 0.0;
  for (const auto& c : kPhi)
    for (double sigma : {0.25, 1.0, 40.0}) cdf_err = std::max(cdf_err, std::abs(residual_cdf(3.0 + sigma * c[0], 3.0, sigma) - c[1]));
  // ADF statistic against independent normal-equations OLS.
  double adf_err = 0.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto x = seed % 2 ? random_walk(400, 90 + seed) : normal_draws(400, 90 + seed);
    const auto r = adf_test(std::span<const double>(x));
    const double t = independent_adf_statistic(x, r.lags_used);
    adf_err = std::max(adf_err, std::abs(r.statistic - t) / std::abs(t));
  }
  // Periodogram Parseval.
  double parseval_err = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    for (std::size_t n : {15u, 128u, 999u, 4032u}) {
      auto x = normal_draws(n, 300 + seed);
      for (std::size_t i = 0; i < n; ++i) x[i] += 7.0 * std::sin(0.03 * static_cast<double>(i)) - 2.0;
      const auto p = periodogram(x);
      const double total = std::accumulate(p.begin(), p.end(), 0.0);
      const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double v : x) ss += (v - m) * (v - m);
      parseval_err = std::max(parseval_err, std::abs(total - ss) / ss);
    }
  const bool ok = spline_err <= 1e-12 && stl_err <= 1e-9 && cdf_err <= 1e-12 && adf_err <= 1e-9 && parseval_err <= 1e-9;
  return verdict(ok, fmt("spline %.1e (<=1e-12), stl %.1e (<=1e-9), cdf %.1e (<=1e-12), adf rel %.1e (<=1e-9), "
                         "parseval rel %.1e (<=1e-9)",
                         spline_err, stl_err, cdf_err, adf_err, parseval_err));
}

// --- 2. statistical recovery ----------------------------------------------

Outcome recovery() {
  const std::size_t n = 2000;
  int ar_hits = 0;
  for (std::uint64_t seed = 1000; seed < 1100; ++seed) {
    const auto x = simulate_ar({0.8}, n, seed);
    double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n), g0 = 0.0, g1 = 0.0;
    for (std::size_t t = 0; t < n; ++t) g0 += (x[t] - m) * (x[t] - m);
    for (std::size_t t = 1; t < n; ++t) g1 += (x[t] - m) * (x[t - 1] - m);
    const double yw = g1 / g0, se = std::sqrt((1.0 - yw * yw) / static_cast<double>(n));
    const auto fit_m = fit(std::span<const double>(x), SarimaOrders{1, 0, 0, 0, 0, 0, 1});
    if (std::abs(fit_m.ar[0] - yw) <= 2.0 * se) ++ar_hits;
  }
  int rw_ok = 0, wn_ok = 0;
  for (std::uint64_t seed = 5000; seed < 5100; ++seed)
    rw_ok += !adf_test(std::span<const double>(random_walk(500, seed))).is_stationary;
  for (std::uint64_t seed = 6000; seed < 6100; ++seed)
    wn_ok += adf_test(std::span<const double>(normal_draws(500, seed))).is_stationary;
  return verdict(ar_hits >= 95 && rw_ok >= 95 && wn_ok >= 95,
                 fmt("AR(1) in Yule-Walker +-2SE %d/100, random walk non-stationary %d/100, white noise stationary "
                     "%d/100 (each >= 95)",
                     ar_hits, rw_ok, wn_ok));
}

// --- 3. synthetic detection -------------------------------------------------

Outcome synthetic_detection() {
  SyntheticSpec spec;  // 14 days of 5-minute samples, daily sine, amplitude 10, sigma 1
  spec.length = 14 * 288;
  spec.seed = 1;
  const std::size_t drift_at = 3100;
  spec.anomalies = {{AnomalyKind::peak, 1500, 10.0, 1}, {AnomalyKind::dip, 1900, 10.0, 1},
                    {AnomalyKind::peak, 2300, 10.0, 1}, {AnomalyKind::dip, 2700, 10.0, 1},
                    {AnomalyKind::concept_drift, drift_at, 10.0, 1}, {AnomalyKind::peak, 3500, 10.0, 1}};
  const auto data = generate_synthetic(spec);
  Dataset ds;
  ds.series = data.series;
  ds.manifest.name = "synthetic";
  ds.manifest.labels = data.labels;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_dataset(ds);
  const double elapsed = seconds_since(t0);

  // Settled: one seasonal period after the onset. Alerts inside a labeled
  // window (the later peak) are detections, not drift alerts.
  const Timestamp settled = data.series.time_at(drift_at + r.seasonal_period);
  const auto windows = build_windows(ds.manifest.labels, r.half_width, data.series.time_at(r.train_points),
                                     data.series.time_at(data.series.size() - 1));
  std::size_t after = 0;
  std::string outside;  // sample indices of alerts outside every window
  for (Timestamp t : r.alerts)
    if (!window_containing(windows, t)) {
      after += t >= settled;
      outside += (outside.empty() ? "" : " ") + std::to_string((t - spec.start_time) / spec.interval);
    }
  const bool ok = r.score.recall >= 0.8 && r.score.fp <= 2 && after == 0 && elapsed < 120.0;
  return verdict(ok, fmt("recall %.3f (>=0.8), FP windows %zu (<=2), alerts after drift settled %zu (==0), "
                         "tp %zu fn %zu alerts %zu, outside-window alert indices [%s], half-width %lld s, orders %s, "
                         "%.1f s (<120)",
                         r.score.recall, r.score.fp, after, r.score.tp, r.score.fn, r.alerts.size(), outside.c_str(),
                         static_cast<long long>(r.half_width), r.orders.c_str(), elapsed));
}

// --- 4. NAB artificial jumps -------------------------------------------------

Outcome nab_jumps() {
  const char* root = std::getenv("ADSAS_NAB_DIR");
  const std::vector<std::string> files{"art_daily_jumpsup.csv", "art_daily_jumpsdown.csv", "art_daily_flatmiddle.csv",
                                       "art_daily_nojump.csv"};
  if (!root) return {Outcome::skip, "set ADSAS_NAB_DIR to a NAB checkout (data/ and labels/combined_labels.json)"};
  const fs::path base(root);
  const auto labels = base / "labels" / "combined_labels.json";
  std::vector<BenchEntry> entries;
  for (const auto& f : files) {
    const auto csv = base / "data" / "artificialWithAnomaly" / f;
    if (!fs::exists(csv) || !fs::exists(labels)) return {Outcome::skip, "missing " + csv.string()};
    entries.push_back({f, csv, labels, std::nullopt});
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = run_bench(entries);
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 300.0;
  std::string detail;
  for (const auto& r : rep.rows) {
    ok = ok && r.ok && r.score.f1 >= 0.9;
    detail += r.ok ? fmt("%s F1 %.3f; ", r.name.c_str(), r.score.f1) : r.name + " error: " + r.error + "; ";
  }
  return verdict(ok, detail + fmt("each F1 >= 0.9, %.1f s (<300)", elapsed));
}

// --- 5. latency ----------------------------------------------------------------

Outcome latency() {
  SyntheticSpec spec;
  spec.length = 35 * 288 + 288;  // 10080 training points plus one day streamed
  spec.seed = 5;
  const auto s = generate_synthetic(spec).series;
  const std::size_t ntrain = 35 * 288;
  const auto t0 = std::chrono::steady_clock::now();
  auto det = Detector::train(s.slice(0, ntrain));
  const double build = seconds_since(t0);
  std::vector<double> lat;
  for (std::size_t i = ntrain; i < s.size(); ++i) {
    const auto a = std::chrono::steady_clock::now();
    det.process_point(s.time_at(i), s[i]);
    lat.push_back(seconds_since(a));
  }
  const double mean = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
  const double p99 = percentile(lat, 0.99);
  return verdict(build <= 10.0 && mean <= 0.25 && p99 <= 0.5,
                 fmt("train %zu points (factor %zu): build %.2f s (<=10), classify mean %.4f s (<=0.25), p99 %.4f s "
                     "(<=0.5)",
                     ntrain, det.undersample_factor(), build, mean, p99));
}

// --- 6. regular-error absorption -----------------------------------------------

Outcome absorption() {
  // Two-harmonic daily shape; a factor of 48 leaves a 6-sample coarse
  // season, so interpolation error is large and strictly periodic.
  const std::size_t period = 288, train_days = 4, stream_days = 14;
  const std::size_t n = (train_days + stream_days) * period;
  auto noise = normal_draws(n, 17, 0.2);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(period);
    v[i] = 10.0 * std::sin(ph) + 4.0 * std::sin(3.0 * ph + 0.5) + noise[i];
  }
  const Series s(1420070400, 300, std::move(v));
  DetectorConfig cfg;
  cfg.undersample_factor = 48;
  const std::size_t ntrain = train_days * period;
  auto det = Detector::train(s.slice(0, ntrain), cfg);
  std::size_t flagged = 0, counted = 0;
  double max_abs_e = 0.0;
  for (std::size_t i = ntrain; i < n; ++i) {
    const auto vd = det.process_point(s.time_at(i), s[i]);
    max_abs_e = std::max(max_abs_e, std::abs(vd.e));
    if (i < ntrain + period) continue;
    ++counted;
    flagged += vd.is_anomaly;
  }
  const double rate = static_cast<double>(flagged) / static_cast<double>(counted);
  const double limit = 0.0015;
  return verdict(rate <= limit, fmt("flagged %zu of %zu = %.4f%% (<= %.4f%%), factor 48, max |e| %.2f", flagged, counted,
                                    100.0 * rate, 100.0 * limit, max_abs_e));
}

// --- 7. arithmetic spot check --------------------------------------------------------

Outcome arithmetic() {
  const double v = f1(1.000, 0.993);
  const double rounded = std::round(v * 1000.0) / 1000.0;
  return verdict(rounded == 0.996, fmt("f1(1.000, 0.993) = %.6f -> %.3f (== 0.996)", v, rounded));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"numerics oracles", numerics},          {"statistical recovery", recovery},
      {"synthetic detection", synthetic_detection}, {"NAB artificial jumps", nab_jumps},
      {"latency", latency},                    {"regular-error absorption", absorption},
      {"F1 arithmetic", arithmetic}};
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <1..%zu>\n", argv[0], criteria.size());
    return 2;
  }
  const int k = std::atoi(argv[1]);
  if (k < 1 || k > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
    return 2;
  }
  const auto& [name, run] = criteria[static_cast<std::size_t>(k - 1)];
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {Outcome::fail, std::string("exception: ") + e.what()};
  }
  static const char* tag[] = {"PASS", "FAIL", "SKIP"};
  std::printf("criterion %d %s: %s: %s\n", k, tag[o.kind], name, o.detail.c_str());
  return o.kind == Outcome::pass ? 0 : o.kind == Outcome::skip ? 77 : 1;
}
