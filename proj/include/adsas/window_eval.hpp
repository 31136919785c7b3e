#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adsas/error.hpp"
#include "adsas/series.hpp"

namespace adsas {

struct AnomalyWindow {
  Timestamp start_time = 0;
  Timestamp end_time = 0;
  std::size_t section_id = 0;
};

struct ScoreReport {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline double f1(double precision, double recall) {
  if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0)
    fail(Errc::invalid_argument, "precision and recall must lie in [0, 1]");
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

inline ScoreReport make_report(std::size_t tp, std::size_t fp, std::size_t fn) {
  ScoreReport r{tp, fp, fn};
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = f1(r.precision, r.recall);
  return r;
}

/// max(3 intervals, 0.5% of the span).
inline Duration default_half_width(Duration interval, Duration span) {
  return std::max<Duration>(3 * interval, static_cast<Duration>(std::llround(0.005 * static_cast<double>(span))));
}

/// Labels become [t - hw, t + hw] clipped to [extent_start, extent_end].
/// Overlapping or touching intervals merge into a section, which is cut
/// into consecutive windows of width 2 * hw (the last one may be shorter).
inline std::vector<AnomalyWindow> build_windows(std::span<const Timestamp> label_times, Duration half_width,
                                                Timestamp extent_start, Timestamp extent_end) {
  if (half_width <= 0) fail(Errc::invalid_argument, "half_width must be positive");
  if (extent_end < extent_start) fail(Errc::invalid_argument, "empty series extent");
  std::vector<Timestamp> labels(label_times.begin(), label_times.end());
  std::sort(labels.begin(), labels.end());
  for (Timestamp t : labels)
    if (t < extent_start || t > extent_end)
      fail(Errc::label_out_of_range, "label " + std::to_string(t) + " outside [" + std::to_string(extent_start) + ", " +
                                         std::to_string(extent_end) + "]");

  std::vector<std::pair<Timestamp, Timestamp>> sections;
  for (Timestamp t : labels) {
    const Timestamp a = std::max(extent_start, t - half_width), b = std::min(extent_end, t + half_width);
    if (!sections.empty() && a <= sections.back().second)
      sections.back().second = std::max(sections.back().second, b);
    else
      sections.emplace_back(a, b);
  }
  std::vector<AnomalyWindow> out;
  const Duration width = 2 * half_width;
  for (std::size_t s = 0; s < sections.size(); ++s) {
    auto [a, b] = sections[s];
    Timestamp cur = a;
    do {
      const Timestamp end = std::min(b, cur + width);
      out.push_back({cur, end, s});
      cur = end;
    } while (cur < b);
  }
  return out;
}

/// Index of the window holding `t`; shared boundaries go to the earlier
/// window.
inline std::optional<std::size_t> window_containing(std::span<const AnomalyWindow> windows, Timestamp t) {
  auto it = std::lower_bound(windows.begin(), windows.end(), t,
                             [](const AnomalyWindow& w, Timestamp v) { return w.end_time < v; });
  if (it == windows.end() || t < it->start_time) return std::nullopt;
  return static_cast<std::size_t>(it - windows.begin());
}

/// Window-level precision / recall. Outside alerts no more than
/// `fp_collapse_gap` apart count as one false positive.
inline ScoreReport score(std::span<const Timestamp> alert_times, std::span<const AnomalyWindow> windows,
                         Duration fp_collapse_gap = 0) {
  std::vector<Timestamp> alerts(alert_times.begin(), alert_times.end());
  std::sort(alerts.begin(), alerts.end());
  std::vector<char> hit(windows.size(), 0);
  std::size_t fp = 0;
  std::optional<Timestamp> last_outside;
  for (Timestamp t : alerts) {
    if (auto w = window_containing(windows, t)) {
      hit[*w] = 1;
      continue;
    }
    if (!last_outside || t - *last_outside > fp_collapse_gap) ++fp;
    last_outside = t;
  }
  std::size_t tp = 0, fn = 0;
  for (std::size_t i = 0; i < windows.size();) {
    std::size_t j = i;
    while (j < windows.size() && windows[j].section_id == windows[i].section_id) ++j;
    std::size_t first = j;
    for (std::size_t k = i; k < j; ++k)
      if (hit[k]) {
        first = k;
        break;
      }
    tp += j - first;
    fn += first - i;
    i = j;
  }
  return make_report(tp, fp, fn);
}

/// Number of 2 * hw windows needed to tile a span.
inline std::size_t total_windows(Duration span, Duration half_width) {
  if (half_width <= 0) fail(Errc::invalid_argument, "half_width must be positive");
  const Duration w = 2 * half_width;
  return static_cast<std::size_t>(std::max<Duration>(1, (span + w - 1) / w));
}

}  // namespace adsas
