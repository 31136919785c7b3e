#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "adsas/error.hpp"

namespace adsas {

// ---------------------------------------------------------------------------
// Loess
// ---------------------------------------------------------------------------

namespace detail {

inline double tricube(double r, double h) {
  if (r <= 0.001 * h) return 1.0;
  if (r > 0.999 * h) return 0.0;
  const double u = r / h;
  const double a = 1.0 - u * u * u;
  return a * a * a;
}

/// Local polynomial fit at x0 using points [lo, hi) of (x, y). h is the
/// neighborhood radius. Returns nullopt when the weighted design is
/// singular for the requested degree.
inline std::optional<double> local_fit(std::span<const double> x, std::span<const double> y,
                                       std::span<const double> rob, std::size_t lo, std::size_t hi, double x0,
                                       double h, int degree) {
  // Weighted moments of u = (x - x0) / scale, up to order 2 * degree.
  const double scale = h > 0.0 ? h : 1.0;
  double s[5] = {0, 0, 0, 0, 0};
  double t[3] = {0, 0, 0};
  std::size_t support = 0;
  double u_min = 0.0, u_max = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    double w = tricube(std::abs(x[i] - x0), h);
    if (!rob.empty()) w *= rob[i];
    if (w <= 0.0) continue;
    const double u = (x[i] - x0) / scale;
    if (support == 0 || u < u_min) u_min = support == 0 ? u : std::min(u_min, u);
    if (support == 0 || u > u_max) u_max = support == 0 ? u : std::max(u_max, u);
    ++support;
    double up = 1.0;
    for (int k = 0; k <= 2 * degree; ++k) {
      s[k] += w * up;
      if (k <= degree) t[k] += w * up * y[i];
      up *= u;
    }
  }
  if (support == 0 || s[0] <= 0.0) return std::nullopt;
  if (degree == 0) return t[0] / s[0];
  if (degree == 1) {
    const double mean_u = s[1] / s[0];
    const double var_u = s[2] / s[0] - mean_u * mean_u;
    if (!(var_u > 1e-12 * std::max(1.0, mean_u * mean_u)) || u_max - u_min <= 0.0) return std::nullopt;
    const double mean_y = t[0] / s[0];
    const double cov = t[1] / s[0] - mean_u * mean_y;
    return mean_y - (cov / var_u) * mean_u;
  }
  // degree 2: 3x3 normal equations, Cramer's rule on the centered moments.
  const double a00 = s[0], a01 = s[1], a02 = s[2], a11 = s[2], a12 = s[3], a22 = s[4];
  const double det = a00 * (a11 * a22 - a12 * a12) - a01 * (a01 * a22 - a12 * a02) + a02 * (a01 * a12 - a11 * a02);
  if (!(std::abs(det) > 1e-12 * a00 * a11 * a22) || support < 3) return std::nullopt;
  const double det0 = t[0] * (a11 * a22 - a12 * a12) - a01 * (t[1] * a22 - a12 * t[2]) + a02 * (t[1] * a12 - a11 * t[2]);
  return det0 / det;
}

/// Evaluates loess at x0 with a `window` nearest-neighbor neighborhood.
/// x must be sorted. When window exceeds the data length the radius is
/// enlarged by (window - n) / 2 spacing units, following Cleveland et al.
inline std::optional<double> loess_at(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> rob, double x0, std::size_t window, int degree,
                                      std::size_t& lo_hint) {
  const std::size_t n = x.size();
  std::size_t lo, hi;
  double h;
  if (window >= n) {
    lo = 0, hi = n;
    h = std::max(x0 - x[0], x[n - 1] - x0);
    if (window > n) {
      const double spacing = n > 1 ? (x[n - 1] - x[0]) / static_cast<double>(n - 1) : 1.0;
      h += static_cast<double>(window - n) / 2.0 * spacing;
    }
  } else {
    lo = std::min(lo_hint, n - window);
    while (lo > 0 && x0 - x[lo - 1] < x[lo + window - 1] - x0) --lo;
    while (lo + window < n && x[lo + window] - x0 < x0 - x[lo]) ++lo;
    lo_hint = lo;
    hi = lo + window;
    h = std::max(x0 - x[lo], x[hi - 1] - x0);
  }
  auto v = local_fit(x, y, rob, lo, hi, x0, h, degree);
  // The farthest neighbor sits at the tricube cutoff, so tiny windows can
  // leave too few weighted points. Retry once with a doubled bandwidth.
  if (!v && window < n) v = local_fit(x, y, rob, lo, hi, x0, 2.0 * h, degree);
  return v;
}

}  // namespace detail

/// Locally weighted polynomial regression evaluated at every input point.
/// Each fit uses the `window` nearest neighbors with tricube distance
/// weights, optionally multiplied by robustness weights.
inline std::vector<double> loess_smooth(std::span<const double> x, std::span<const double> y, std::size_t window,
                                        int degree, std::span<const double> robustness_weights = {}) {
  if (degree < 0 || degree > 2) fail(Errc::invalid_argument, "loess degree must be 0, 1 or 2");
  if (window < static_cast<std::size_t>(degree) + 1) fail(Errc::window_too_small, "window smaller than degree + 1");
  if (x.size() != y.size()) fail(Errc::invalid_argument, "x and y differ in length");
  if (!robustness_weights.empty() && robustness_weights.size() != x.size())
    fail(Errc::invalid_argument, "robustness weights differ in length");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) fail(Errc::invalid_argument, "loess x must increase strictly");
  std::vector<double> out(x.size());
  std::size_t hint = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto v = detail::loess_at(x, y, robustness_weights, x[i], window, degree, hint);
    if (!v) fail(Errc::singular_local_fit, "local fit singular at index " + std::to_string(i));
    out[i] = *v;
  }
  return out;
}

// ---------------------------------------------------------------------------
// STL
// ---------------------------------------------------------------------------

struct StlConfig {
  std::size_t period = 2;
  /// Odd window for cycle-subseries smoothing; nullopt means periodic (each
  /// subseries replaced by its weighted mean).
  std::optional<std::size_t> seasonal_window;
  /// Odd trend window; nullopt selects the smallest odd integer
  /// >= 1.5 * period / (1 - 1.5 / seasonal_window).
  std::optional<std::size_t> trend_window;
  std::size_t inner_iterations = 2;
  std::size_t robust_iterations = 1;
  int seasonal_degree = 1;
  int trend_degree = 1;
  int lowpass_degree = 1;
};

struct StlDecomposition {
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> remainder;
  std::vector<double> weights;  // final robustness weights
};

namespace detail {

inline std::size_t next_odd(double v) {
  auto k = static_cast<std::size_t>(std::ceil(v));
  if (k % 2 == 0) ++k;
  return std::max<std::size_t>(k, 3);
}

/// Median by partial sort; reorders `v`.
inline double median(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

inline void moving_average(std::span<const double> in, std::size_t len, std::vector<double>& out) {
  out.assign(in.size() - len + 1, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += in[i];
  const double inv = 1.0 / static_cast<double>(len);
  out[0] = sum * inv;
  for (std::size_t i = 1; i < out.size(); ++i) {
    sum += in[i + len - 1] - in[i - 1];
    out[i] = sum * inv;
  }
}

/// Loess over the equally spaced positions 0..n-1, evaluated at positions
/// `at` (may lie outside the data, for subseries extrapolation).
inline double loess_index(std::span<const double> y, std::span<const double> rob, double at, std::size_t window,
                          int degree, std::vector<double>& xbuf, std::size_t& hint) {
  if (xbuf.size() < y.size()) {
    const std::size_t old = xbuf.size();
    xbuf.resize(y.size());
    for (std::size_t i = old; i < xbuf.size(); ++i) xbuf[i] = static_cast<double>(i);
  }
  std::span<const double> xs(xbuf.data(), y.size());
  auto v = loess_at(xs, y, rob, at, window, degree, hint);
  if (v) return *v;
  // Degenerate neighborhoods (all robustness weight lost) fall back to a
  // local constant, then to the neighborhood median.
  if (degree > 0) {
    v = loess_at(xs, y, rob, at, window, 0, hint);
    if (v) return *v;
  }
  const std::size_t n = y.size(), w = std::min(window, n);
  const double c = std::clamp(std::round(at), 0.0, static_cast<double>(n - 1));
  std::size_t lo = static_cast<std::size_t>(std::max(0.0, c - static_cast<double>(w / 2)));
  lo = std::min(lo, n - w);
  std::vector<double> nb(y.begin() + static_cast<std::ptrdiff_t>(lo), y.begin() + static_cast<std::ptrdiff_t>(lo + w));
  return median(nb);
}

}  // namespace detail

/// Cleveland et al. STL: additive trend + seasonal + remainder split.
inline StlDecomposition stl(std::span<const double> y, const StlConfig& cfg) {
  const std::size_t n = y.size();
  const std::size_t np = cfg.period;
  if (np < 2) fail(Errc::invalid_argument, "STL period must be >= 2");
  if (n < 2 * np) fail(Errc::too_short, "STL needs at least two full periods");
  if (cfg.inner_iterations < 1) fail(Errc::invalid_argument, "inner_iterations must be >= 1");
  auto check_window = [](std::size_t w, const char* what) {
    if (w < 3 || w % 2 == 0) fail(Errc::invalid_argument, std::string(what) + " window must be odd and >= 3");
  };
  if (cfg.seasonal_window) check_window(*cfg.seasonal_window, "seasonal");
  if (cfg.trend_window) check_window(*cfg.trend_window, "trend");

  const bool periodic = !cfg.seasonal_window.has_value();
  const std::size_t ns = periodic ? 0 : *cfg.seasonal_window;
  std::size_t nt = cfg.trend_window.value_or(
      periodic ? detail::next_odd(1.5 * static_cast<double>(np))
               : detail::next_odd(1.5 * static_cast<double>(np) / (1.0 - 1.5 / static_cast<double>(ns))));
  if (!cfg.trend_window && nt > n) nt = (n % 2 == 1) ? n : n - 1;
  const std::size_t nl = detail::next_odd(static_cast<double>(np));

  StlDecomposition out;
  out.trend.assign(n, 0.0);
  out.seasonal.assign(n, 0.0);
  out.weights.assign(n, 1.0);
  std::vector<double> rob;  // empty on the first pass

  std::vector<double> detrended(n), cycle(n + 2 * np), ma1, ma2, ma3, deseason(n);
  std::vector<double> sub_y, sub_w, xbuf;

  for (std::size_t outer = 0; outer <= cfg.robust_iterations; ++outer) {
    for (std::size_t inner = 0; inner < cfg.inner_iterations; ++inner) {
      for (std::size_t i = 0; i < n; ++i) detrended[i] = y[i] - out.trend[i];

      // Cycle-subseries smoothing, extended one cycle on each side.
      for (std::size_t j = 0; j < np; ++j) {
        sub_y.clear();
        sub_w.clear();
        for (std::size_t i = j; i < n; i += np) {
          sub_y.push_back(detrended[i]);
          sub_w.push_back(rob.empty() ? 1.0 : rob[i]);
        }
        const std::size_t m = sub_y.size();
        if (periodic) {
          double sw = 0.0, swy = 0.0;
          for (std::size_t k = 0; k < m; ++k) sw += sub_w[k], swy += sub_w[k] * sub_y[k];
          double mean;
          if (sw > 0.0) {
            mean = swy / sw;
          } else {
            std::vector<double> tmp = sub_y;
            mean = detail::median(tmp);
          }
          for (std::size_t k = 0; k <= m + 1; ++k) cycle[k * np + j] = mean;
        } else {
          std::span<const double> w = rob.empty() ? std::span<const double>{} : std::span<const double>(sub_w);
          std::size_t hint = 0;
          for (std::size_t k = 0; k <= m + 1; ++k) {
            const double at = static_cast<double>(k) - 1.0;
            cycle[k * np + j] = detail::loess_index(sub_y, w, at, ns, cfg.seasonal_degree, xbuf, hint);
          }
        }
      }
      // Low-pass filter of the extended cycle series.
      detail::moving_average(std::span<const double>(cycle.data(), n + 2 * np), np, ma1);
      detail::moving_average(ma1, np, ma2);
      detail::moving_average(ma2, 3, ma3);
      {
        std::size_t hint = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const double low = detail::loess_index(ma3, {}, static_cast<double>(i), nl, cfg.lowpass_degree, xbuf, hint);
          out.seasonal[i] = cycle[np + i] - low;
        }
      }

      for (std::size_t i = 0; i < n; ++i) deseason[i] = y[i] - out.seasonal[i];
      {
        std::size_t hint = 0;
        for (std::size_t i = 0; i < n; ++i)
          out.trend[i] = detail::loess_index(deseason, rob, static_cast<double>(i), nt, cfg.trend_degree, xbuf, hint);
      }
    }

    if (outer == cfg.robust_iterations) break;
    // Bisquare robustness weights from the current remainder.
    std::vector<double> absr(n);
    for (std::size_t i = 0; i < n; ++i) absr[i] = std::abs(y[i] - out.trend[i] - out.seasonal[i]);
    std::vector<double> tmp = absr;
    const double h = 6.0 * detail::median(tmp);
    rob.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (h <= 0.0) {
        rob[i] = absr[i] <= 0.0 ? 1.0 : 0.0;
        continue;
      }
      const double u = absr[i] / h;
      if (u <= 0.001)
        rob[i] = 1.0;
      else if (u <= 0.999)
        rob[i] = (1.0 - u * u) * (1.0 - u * u);
      else
        rob[i] = 0.0;
    }
    out.weights = rob;
  }

  out.remainder.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.remainder[i] = y[i] - out.trend[i] - out.seasonal[i];
  return out;
}

}  // namespace adsas
