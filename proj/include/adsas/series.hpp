#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adsas/error.hpp"

namespace adsas {

using Timestamp = std::int64_t;  // epoch seconds
using Duration = std::int64_t;   // seconds

/// Regularly sampled, finite-valued series. Timestamp of index i is
/// start_time + i * interval, computed in integer arithmetic.
class Series {
 public:
  Series() = default;

  Series(Timestamp start_time, Duration interval, std::vector<double> values)
      : start_time_(start_time), interval_(interval), values_(std::move(values)) {
    if (interval_ <= 0) fail(Errc::invalid_argument, "interval must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        fail(Errc::non_finite_value, "value at index " + std::to_string(i) + " is not finite");
    }
  }

  Timestamp start_time() const noexcept { return start_time_; }
  Duration interval() const noexcept { return interval_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  Timestamp time_at(std::size_t i) const noexcept {
    return start_time_ + static_cast<Timestamp>(i) * interval_;
  }
  /// One past the last timestamp; the time the next sample is due.
  Timestamp end_time() const noexcept { return time_at(values_.size()); }

  /// Sub-series [first, first + count).
  Series slice(std::size_t first, std::size_t count) const {
    if (first > size() || count > size() - first) fail(Errc::invalid_argument, "slice out of range");
    return Series(time_at(first), interval_,
                  std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                      values_.begin() + static_cast<std::ptrdiff_t>(first + count)));
  }
  Series tail(std::size_t count) const {
    count = std::min(count, size());
    return slice(size() - count, count);
  }

 private:
  Timestamp start_time_ = 0;
  Duration interval_ = 1;
  std::vector<double> values_;
};

/// Block-mean undersampling. A trailing partial block is dropped.
inline Series resample_mean(const Series& s, std::size_t factor) {
  if (factor < 1) fail(Errc::invalid_factor, "factor must be >= 1");
  if (s.size() < factor) fail(Errc::empty_input, "series shorter than the resampling factor");
  if (factor == 1) return s;
  const std::size_t blocks = s.size() / factor;
  std::vector<double> out(blocks);
  auto v = s.values();
  for (std::size_t j = 0; j < blocks; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < factor; ++k) sum += v[j * factor + k];
    out[j] = sum / static_cast<double>(factor);
  }
  return Series(s.start_time(), s.interval() * static_cast<Duration>(factor), std::move(out));
}

/// Applies (1 - L)^d then (1 - L^period)^D.
inline Series difference(const Series& s, int d, int D, int period) {
  if (d < 0 || D < 0 || period < 1) fail(Errc::invalid_argument, "difference orders must be nonnegative");
  const std::size_t lost = static_cast<std::size_t>(d) + static_cast<std::size_t>(D) * period;
  if (s.size() <= lost) fail(Errc::too_short, "series too short for the requested differencing");
  std::vector<double> v(s.values().begin(), s.values().end());
  for (int i = 0; i < d; ++i) {
    for (std::size_t t = v.size() - 1; t >= 1; --t) v[t] -= v[t - 1];
    v.erase(v.begin());
  }
  for (int i = 0; i < D; ++i) {
    for (std::size_t t = v.size() - 1; t >= static_cast<std::size_t>(period); --t) v[t] -= v[t - period];
    v.erase(v.begin(), v.begin() + period);
  }
  return Series(s.time_at(lost), s.interval(), std::move(v));
}

/// Natural cubic spline through (knot_times, knot_values), evaluated at
/// query_times. Queries at a knot return that knot's value exactly.
inline std::vector<double> cubic_spline_interpolate(std::span<const double> knot_times,
                                                    std::span<const double> knot_values,
                                                    std::span<const double> query_times) {
  const std::size_t n = knot_times.size();
  if (knot_values.size() != n) fail(Errc::invalid_argument, "knot times and values differ in length");
  if (n < 2) fail(Errc::insufficient_knots, "need at least two knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(knot_times[i] > knot_times[i - 1])) fail(Errc::non_monotonic_knots, "knot times must increase strictly");

  // Second derivatives at the knots; zero at both ends.
  std::vector<double> m(n, 0.0);
  if (n > 2) {
    const std::size_t k = n - 2;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = knot_times[i] - knot_times[i - 1];
      const double h1 = knot_times[i + 1] - knot_times[i];
      diag[i - 1] = 2.0 * (h0 + h1);
      upper[i - 1] = h1;
      rhs[i - 1] = 6.0 * ((knot_values[i + 1] - knot_values[i]) / h1 - (knot_values[i] - knot_values[i - 1]) / h0);
    }
    // Thomas algorithm; the sub-diagonal entry of row r is h_{r} = upper[r-1].
    for (std::size_t r = 1; r < k; ++r) {
      const double w = upper[r - 1] / diag[r - 1];
      diag[r] -= w * upper[r - 1];
      rhs[r] -= w * rhs[r - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t r = k - 1; r-- > 0;) m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
  }

  std::vector<double> out;
  out.reserve(query_times.size());
  for (double q : query_times) {
    if (q < knot_times[0] || q > knot_times[n - 1] || std::isnan(q))
      fail(Errc::query_out_of_range, "query time outside the knot range");
    auto it = std::upper_bound(knot_times.begin(), knot_times.end(), q);
    std::size_t i = static_cast<std::size_t>(it - knot_times.begin());
    if (i > 0 && knot_times[i - 1] == q) {
      out.push_back(knot_values[i - 1]);
      continue;
    }
    i = std::min(i, n - 1);
    const std::size_t lo = i - 1;
    const double h = knot_times[i] - knot_times[lo];
    const double a = (knot_times[i] - q) / h;
    const double b = (q - knot_times[lo]) / h;
    out.push_back(a * knot_values[lo] + b * knot_values[i] +
                  ((a * a * a - a) * m[lo] + (b * b * b - b) * m[i]) * h * h / 6.0);
  }
  return out;
}

/// Builds a regular Series from timestamped samples. Gaps of up to
/// max_gap_intervals missing steps are linearly filled; longer gaps, or
/// spacing that is not a multiple of the base interval, are rejected.
/// The base interval is the median spacing.
inline Series regularize(std::span<const Timestamp> times, std::span<const double> values,
                         int max_gap_intervals = 3) {
  if (times.size() != values.size()) fail(Errc::invalid_argument, "times and values differ in length");
  if (times.empty()) fail(Errc::empty_input, "no samples");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1]) fail(Errc::unsorted_timestamps, "timestamps must increase strictly");
  if (times.size() == 1) return Series(times[0], 1, {values[0]});

  std::vector<Duration> gaps(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) gaps[i - 1] = times[i] - times[i - 1];
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  const Duration interval = gaps[gaps.size() / 2];

  std::vector<double> out;
  out.reserve(times.size());
  out.push_back(values[0]);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const Duration gap = times[i] - times[i - 1];
    if (gap % interval != 0)
      fail(Errc::irregular_sampling, "spacing at sample " + std::to_string(i) + " is not a multiple of the interval");
    const Duration steps = gap / interval;
    if (steps - 1 > max_gap_intervals)
      fail(Errc::irregular_sampling, "gap of " + std::to_string(steps - 1) + " missing samples before sample " +
                                         std::to_string(i));
    for (Duration k = 1; k < steps; ++k) {
      const double w = static_cast<double>(k) / static_cast<double>(steps);
      out.push_back((1.0 - w) * values[i - 1] + w * values[i]);
    }
    out.push_back(values[i]);
  }
  return Series(times[0], interval, std::move(out));
}

}  // namespace adsas
