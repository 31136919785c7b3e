#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "adsas/error.hpp"
#include "adsas/linalg.hpp"
#include "adsas/optimize.hpp"
#include "adsas/series.hpp"

namespace adsas {

/// (p, d, q)(P, D, Q)_s. s = 1 means no seasonal part.
struct SarimaOrders {
  int p = 0, d = 0, q = 0;
  int P = 0, D = 0, Q = 0;
  int s = 1;

  int num_coefficients() const noexcept { return p + q + P + Q; }
  int ar_degree() const noexcept { return p + s * P; }
  int ma_degree() const noexcept { return q + s * Q; }
  int diff_degree() const noexcept { return d + s * D; }

  void validate() const {
    if (p < 0 || d < 0 || q < 0 || P < 0 || D < 0 || Q < 0) fail(Errc::invalid_argument, "orders must be nonnegative");
    if (d > 2) fail(Errc::invalid_argument, "d must be <= 2");
    if (D > 1) fail(Errc::invalid_argument, "D must be <= 1");
    if (s < 1) fail(Errc::invalid_argument, "seasonal period must be >= 1");
    if (s == 1 && (P != 0 || D != 0 || Q != 0))
      fail(Errc::invalid_argument, "seasonal orders require a seasonal period > 1");
  }

  friend bool operator==(const SarimaOrders&, const SarimaOrders&) = default;
};

inline std::string to_string(const SarimaOrders& o) {
  std::ostringstream os;
  os << "(" << o.p << "," << o.d << "," << o.q << ")(" << o.P << "," << o.D << "," << o.Q << ")_" << o.s;
  return os.str();
}

/// Fitted model. Coefficients follow
///   (1 - sum phi_i L^i)(1 - sum Phi_k L^{sk}) (w_t - mu)
///       = (1 + sum theta_j L^j)(1 + sum Theta_k L^{sk}) a_t
/// where w is the (d, D)-differenced series and mu = intercept (zero
/// whenever any differencing is applied).
struct SarimaModel {
  SarimaOrders orders;
  std::vector<double> ar, ma, seasonal_ar, seasonal_ma;
  double intercept = 0.0;
  double innovation_variance = 0.0;
  double aic = 0.0;
  double css = 0.0;
  double initial_css = 0.0;  // CSS of the Hannan-Rissanen starting point
  std::size_t n_effective = 0;
  std::size_t iterations = 0;
  bool converged = true;
  /// Last observations on the original scale, oldest first.
  std::vector<double> train_tail;
  /// Last one-step innovations, oldest first.
  std::vector<double> residual_tail;
};

namespace detail {

struct Lag {
  int lag;
  double coef;
};

/// Expanded AR side as w_t - mu = sum a_i (w_{t-i} - mu) + ...
inline std::vector<Lag> expand_ar(const std::vector<double>& phi, const std::vector<double>& sphi, int s) {
  // (1 - sum phi_i L^i)(1 - sum Phi_k L^{sk}) = 1 - sum a_i L^i
  const int deg = static_cast<int>(phi.size()) + s * static_cast<int>(sphi.size());
  std::vector<double> poly(static_cast<std::size_t>(deg) + 1, 0.0);
  std::vector<double> a(phi.size() + 1, 0.0), b(static_cast<std::size_t>(s) * sphi.size() + 1, 0.0);
  a[0] = 1.0;
  for (std::size_t i = 0; i < phi.size(); ++i) a[i + 1] = -phi[i];
  b[0] = 1.0;
  for (std::size_t k = 0; k < sphi.size(); ++k) b[static_cast<std::size_t>(s) * (k + 1)] = -sphi[k];
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) poly[i + j] += a[i] * b[j];
  std::vector<Lag> out;
  for (int l = 1; l <= deg; ++l)
    if (poly[static_cast<std::size_t>(l)] != 0.0) out.push_back({l, -poly[static_cast<std::size_t>(l)]});
  return out;
}

/// Expanded MA side as + sum b_j a_{t-j}.
inline std::vector<Lag> expand_ma(const std::vector<double>& theta, const std::vector<double>& stheta, int s) {
  const int deg = static_cast<int>(theta.size()) + s * static_cast<int>(stheta.size());
  std::vector<double> poly(static_cast<std::size_t>(deg) + 1, 0.0);
  std::vector<double> a(theta.size() + 1, 0.0), b(static_cast<std::size_t>(s) * stheta.size() + 1, 0.0);
  a[0] = 1.0;
  for (std::size_t i = 0; i < theta.size(); ++i) a[i + 1] = theta[i];
  b[0] = 1.0;
  for (std::size_t k = 0; k < stheta.size(); ++k) b[static_cast<std::size_t>(s) * (k + 1)] = stheta[k];
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) poly[i + j] += a[i] * b[j];
  std::vector<Lag> out;
  for (int l = 1; l <= deg; ++l)
    if (poly[static_cast<std::size_t>(l)] != 0.0) out.push_back({l, poly[static_cast<std::size_t>(l)]});
  return out;
}

/// Conditional one-step innovations of w. Innovations before `start` are
/// zero; returns the sum of squares over t >= start.
inline double css_residuals(std::span<const double> w, const std::vector<Lag>& ar, const std::vector<Lag>& ma,
                            double mu, std::size_t start, std::vector<double>& e) {
  const std::size_t n = w.size();
  e.assign(n, 0.0);
  double ss = 0.0;
  for (std::size_t t = start; t < n; ++t) {
    double pred = mu;
    for (const auto& l : ar) pred += l.coef * (w[t - static_cast<std::size_t>(l.lag)] - mu);
    for (const auto& l : ma)
      if (t >= static_cast<std::size_t>(l.lag)) pred += l.coef * e[t - static_cast<std::size_t>(l.lag)];
    e[t] = w[t] - pred;
    ss += e[t] * e[t];
  }
  return ss;
}

constexpr double kRootMargin = 1.001;

/// True when every root of 1 + c1 z + ... lies strictly outside the unit
/// circle by at least the given margin.
inline bool roots_outside(const std::vector<double>& lag_coefs, double margin = 1.0) {
  for (const auto& r : lag_polynomial_roots(lag_coefs))
    if (!(std::abs(r) > margin)) return false;
  return true;
}

inline bool ar_ok(const std::vector<double>& phi) {
  if (phi.empty()) return true;
  if (phi.size() == 1) return std::abs(phi[0]) < 1.0;
  std::vector<double> c(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) c[i] = -phi[i];
  return roots_outside(c);
}

inline bool ma_ok(const std::vector<double>& theta) {
  if (theta.empty()) return true;
  if (theta.size() == 1) return std::abs(theta[0]) < 1.0;
  return roots_outside(theta);
}

/// Reflects roots of 1 + c1 z + ... that lie inside (or too close to) the
/// unit circle so that all end up at modulus >= kRootMargin.
inline std::vector<double> repair_lag_polynomial(const std::vector<double>& c) {
  if (c.empty() || std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; })) return c;
  auto roots = lag_polynomial_roots(c);
  bool changed = false;
  for (auto& r : roots) {
    double m = std::abs(r);
    if (m >= kRootMargin) continue;
    changed = true;
    if (m == 0.0) {
      r = kRootMargin;
      continue;
    }
    if (m < 1.0) r = 1.0 / std::conj(r), m = std::abs(r);
    if (m < kRootMargin) r *= kRootMargin / m;
  }
  if (!changed) return c;
  auto out = lag_polynomial_from_roots(roots);
  out.resize(c.size(), 0.0);
  return out;
}

inline std::vector<double> repair_ar(const std::vector<double>& phi) {
  std::vector<double> c(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) c[i] = -phi[i];
  c = repair_lag_polynomial(c);
  for (double& v : c) v = -v;
  return c;
}

inline std::vector<double> repair_ma(const std::vector<double>& theta) { return repair_lag_polynomial(theta); }

inline Eigen::VectorXd ols_coef_or_zero(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.cols() == 0 || X.rows() <= X.cols()) return Eigen::VectorXd::Zero(X.cols());
  auto fit = ols(X, y, false);
  if (fit.rank < static_cast<std::size_t>(X.cols())) return Eigen::VectorXd::Zero(X.cols());
  return fit.coef;
}

struct Coefficients {
  std::vector<double> ar, ma, sar, sma;
};

/// Hannan-Rissanen: long autoregression for innovation proxies, then a
/// single regression of z_t on lagged z and lagged proxies. Seasonal lags
/// enter additively (cross terms omitted); the result only seeds the CSS
/// search.
inline Coefficients hannan_rissanen(std::span<const double> z, const SarimaOrders& o) {
  const std::size_t n = z.size();
  Coefficients c;
  c.ar.assign(static_cast<std::size_t>(o.p), 0.0);
  c.ma.assign(static_cast<std::size_t>(o.q), 0.0);
  c.sar.assign(static_cast<std::size_t>(o.P), 0.0);
  c.sma.assign(static_cast<std::size_t>(o.Q), 0.0);
  if (o.num_coefficients() == 0) return c;

  std::vector<int> ar_lags, ma_lags;
  for (int i = 1; i <= o.p; ++i) ar_lags.push_back(i);
  for (int k = 1; k <= o.P; ++k) ar_lags.push_back(o.s * k);
  for (int j = 1; j <= o.q; ++j) ma_lags.push_back(j);
  for (int k = 1; k <= o.Q; ++k) ma_lags.push_back(o.s * k);

  std::vector<double> proxy(n, 0.0);
  std::size_t proxy_start = 0;
  if (!ma_lags.empty()) {
    std::size_t m = static_cast<std::size_t>(std::max(10, 2 * o.ma_degree() + o.ar_degree()));
    m = std::min(m, n / 3);
    if (m >= 1) {
      const std::size_t rows = n - m;
      Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
      Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = m + r;
        y(static_cast<Eigen::Index>(r)) = z[t];
        for (std::size_t i = 1; i <= m; ++i) X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i - 1)) = z[t - i];
      }
      Eigen::VectorXd beta = ols_coef_or_zero(X, y);
      Eigen::VectorXd res = y - X * beta;
      for (std::size_t r = 0; r < rows; ++r) proxy[m + r] = res(static_cast<Eigen::Index>(r));
      proxy_start = m;
    }
  }

  int max_lag = 0;
  for (int l : ar_lags) max_lag = std::max(max_lag, l);
  for (int l : ma_lags) max_lag = std::max(max_lag, l);
  const std::size_t start = proxy_start + static_cast<std::size_t>(max_lag);
  const std::size_t k = ar_lags.size() + ma_lags.size();
  if (start >= n || n - start <= k + 1) return c;
  const std::size_t rows = n - start;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(k));
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = start + r;
    const auto ri = static_cast<Eigen::Index>(r);
    y(ri) = z[t];
    Eigen::Index col = 0;
    for (int l : ar_lags) X(ri, col++) = z[t - static_cast<std::size_t>(l)];
    for (int l : ma_lags) X(ri, col++) = proxy[t - static_cast<std::size_t>(l)];
  }
  Eigen::VectorXd beta = ols_coef_or_zero(X, y);
  Eigen::Index col = 0;
  for (int i = 0; i < o.p; ++i) c.ar[static_cast<std::size_t>(i)] = beta(col++);
  for (int i = 0; i < o.P; ++i) c.sar[static_cast<std::size_t>(i)] = beta(col++);
  for (int i = 0; i < o.q; ++i) c.ma[static_cast<std::size_t>(i)] = beta(col++);
  for (int i = 0; i < o.Q; ++i) c.sma[static_cast<std::size_t>(i)] = beta(col++);
  return c;
}

/// Coefficients of (1 - L)^d (1 - L^s)^D as 1 + sum delta_k L^k.
inline std::vector<double> differencing_polynomial(int d, int D, int s) {
  std::vector<double> poly{1.0};
  auto mul = [&](int lag) {
    std::vector<double> next(poly.size() + static_cast<std::size_t>(lag), 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      next[i] += poly[i];
      next[i + static_cast<std::size_t>(lag)] -= poly[i];
    }
    poly = std::move(next);
  };
  for (int i = 0; i < d; ++i) mul(1);
  for (int i = 0; i < D; ++i) mul(s);
  return poly;
}

inline std::vector<double> apply_differencing(std::span<const double> y, const std::vector<double>& delta) {
  const std::size_t deg = delta.size() - 1;
  std::vector<double> w;
  if (y.size() <= deg) return w;
  w.reserve(y.size() - deg);
  for (std::size_t t = deg; t < y.size(); ++t) {
    double v = 0.0;
    for (std::size_t k = 0; k <= deg; ++k) v += delta[k] * y[t - k];
    w.push_back(v);
  }
  return w;
}

}  // namespace detail

struct FitOptions {
  NelderMeadOptions optimizer{};
  /// Innovations are summed from max(ar_degree, condition_on) so that
  /// candidates compared by AIC can share one estimation sample.
  std::size_t condition_on = 0;
  /// Iteration-cap exits with a relative spread above this are reported as
  /// non-converged.
  double nonconvergence_spread = 1e-6;
};

/// Fits a SARIMA model by conditional sum of squares, starting from a
/// root-repaired Hannan-Rissanen estimate and refined by Nelder-Mead.
inline SarimaModel fit(std::span<const double> y, const SarimaOrders& orders, const FitOptions& opt = {}) {
  orders.validate();
  const std::size_t k = static_cast<std::size_t>(orders.num_coefficients());
  const auto delta = detail::differencing_polynomial(orders.d, orders.D, orders.s);
  const std::size_t ddeg = delta.size() - 1;
  if (y.size() <= ddeg) fail(Errc::too_short, "series shorter than the differencing span");
  const auto w = detail::apply_differencing(y, delta);
  if (w.size() < 10 * (k + 1))
    fail(Errc::too_short, "need " + std::to_string(10 * (k + 1)) + " differenced samples, have " + std::to_string(w.size()));
  const auto [wmin, wmax] = std::minmax_element(w.begin(), w.end());
  if (*wmin == *wmax) fail(Errc::degenerate_after_differencing, "series is constant after differencing");

  const bool with_mean = orders.d == 0 && orders.D == 0;
  double mean = 0.0;
  if (with_mean) mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  var /= static_cast<double>(w.size());

  const std::size_t start = std::max(static_cast<std::size_t>(orders.ar_degree()), opt.condition_on);
  if (start + k + 2 > w.size()) fail(Errc::too_short, "conditioning leaves too few samples");

  std::vector<double> z(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) z[i] = w[i] - mean;
  auto init = detail::hannan_rissanen(z, orders);
  init.ar = detail::repair_ar(init.ar);
  init.sar = detail::repair_ar(init.sar);
  init.ma = detail::repair_ma(init.ma);
  init.sma = detail::repair_ma(init.sma);

  const std::size_t np = static_cast<std::size_t>(orders.p), nq = static_cast<std::size_t>(orders.q),
                    nP = static_cast<std::size_t>(orders.P), nQ = static_cast<std::size_t>(orders.Q);
  auto unpack = [&](const std::vector<double>& x, detail::Coefficients& c, double& mu) {
    std::size_t i = 0;
    c.ar.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(np));
    i += np;
    c.ma.assign(x.begin() + static_cast<std::ptrdiff_t>(i), x.begin() + static_cast<std::ptrdiff_t>(i + nq));
    i += nq;
    c.sar.assign(x.begin() + static_cast<std::ptrdiff_t>(i), x.begin() + static_cast<std::ptrdiff_t>(i + nP));
    i += nP;
    c.sma.assign(x.begin() + static_cast<std::ptrdiff_t>(i), x.begin() + static_cast<std::ptrdiff_t>(i + nQ));
    i += nQ;
    mu = with_mean ? x[i] : 0.0;
  };

  std::vector<double> x0;
  x0.insert(x0.end(), init.ar.begin(), init.ar.end());
  x0.insert(x0.end(), init.ma.begin(), init.ma.end());
  x0.insert(x0.end(), init.sar.begin(), init.sar.end());
  x0.insert(x0.end(), init.sma.begin(), init.sma.end());
  if (with_mean) x0.push_back(mean);
  std::vector<double> steps(x0.size(), 0.1);
  if (with_mean) steps.back() = 0.1 * std::sqrt(var) + 1e-8 * (std::abs(mean) + 1.0);

  std::vector<double> e;
  detail::Coefficients c;
  double mu = 0.0;
  auto objective = [&](const std::vector<double>& x) {
    unpack(x, c, mu);
    if (!detail::ar_ok(c.ar) || !detail::ar_ok(c.sar) || !detail::ma_ok(c.ma) || !detail::ma_ok(c.sma))
      return std::numeric_limits<double>::infinity();
    const auto ar = detail::expand_ar(c.ar, c.sar, orders.s);
    const auto ma = detail::expand_ma(c.ma, c.sma, orders.s);
    const double ss = detail::css_residuals(w, ar, ma, mu, start, e);
    return std::isfinite(ss) ? ss : std::numeric_limits<double>::infinity();
  };

  SarimaModel m;
  m.orders = orders;
  m.initial_css = objective(x0);
  NelderMeadResult nm;
  if (k == 0) {
    nm.x = x0;
    nm.value = m.initial_css;
    nm.converged = true;
  } else {
    nm = nelder_mead(objective, x0, steps, opt.optimizer);
  }

  unpack(nm.x, c, mu);
  m.ar = c.ar;
  m.ma = c.ma;
  m.seasonal_ar = c.sar;
  m.seasonal_ma = c.sma;
  m.intercept = mu;
  m.iterations = nm.iterations;
  m.converged = nm.converged || nm.relative_spread <= opt.nonconvergence_spread;

  const auto ar = detail::expand_ar(m.ar, m.seasonal_ar, orders.s);
  const auto ma = detail::expand_ma(m.ma, m.seasonal_ma, orders.s);
  m.css = detail::css_residuals(w, ar, ma, mu, start, e);
  m.n_effective = w.size() - start;
  m.innovation_variance = m.css / static_cast<double>(m.n_effective);
  if (!(m.innovation_variance > 0.0))
    m.innovation_variance = std::numeric_limits<double>::min();
  m.aic = static_cast<double>(m.n_effective) * std::log(m.innovation_variance) + 2.0 * static_cast<double>(k + 1);

  const std::size_t tail = static_cast<std::size_t>(std::max(orders.ar_degree(), orders.ma_degree())) + ddeg;
  const std::size_t tail_len = std::min(tail, y.size());
  m.train_tail.assign(y.end() - static_cast<std::ptrdiff_t>(tail_len), y.end());
  const std::size_t rt = std::min(static_cast<std::size_t>(orders.ma_degree()), e.size());
  m.residual_tail.assign(e.end() - static_cast<std::ptrdiff_t>(rt), e.end());
  return m;
}

inline SarimaModel fit(const Series& s, const SarimaOrders& orders, const FitOptions& opt = {}) {
  return fit(s.values(), orders, opt);
}

/// Keeps the coefficients of `m` but re-derives its tails (and CSS
/// statistics) from new data. Used when a refit fails.
inline SarimaModel condition_on(const SarimaModel& m, std::span<const double> y) {
  const auto delta = detail::differencing_polynomial(m.orders.d, m.orders.D, m.orders.s);
  const std::size_t ddeg = delta.size() - 1;
  if (y.size() <= ddeg + static_cast<std::size_t>(m.orders.ar_degree()))
    fail(Errc::too_short, "series too short to condition the model");
  SarimaModel out = m;
  const auto w = detail::apply_differencing(y, delta);
  const std::size_t start = static_cast<std::size_t>(m.orders.ar_degree());
  std::vector<double> e;
  out.css = detail::css_residuals(w, detail::expand_ar(m.ar, m.seasonal_ar, m.orders.s),
                                  detail::expand_ma(m.ma, m.seasonal_ma, m.orders.s), m.intercept, start, e);
  out.n_effective = w.size() - start;
  const std::size_t tail = static_cast<std::size_t>(std::max(m.orders.ar_degree(), m.orders.ma_degree())) + ddeg;
  out.train_tail.assign(y.end() - static_cast<std::ptrdiff_t>(std::min(tail, y.size())), y.end());
  const std::size_t rt = std::min(static_cast<std::size_t>(m.orders.ma_degree()), e.size());
  out.residual_tail.assign(e.end() - static_cast<std::ptrdiff_t>(rt), e.end());
  return out;
}

/// In-sample one-step predictions on the original scale. Entries before
/// the first predictable index (differencing span + AR degree) repeat the
/// observation.
inline std::vector<double> one_step_predictions(const SarimaModel& m, std::span<const double> y) {
  const auto delta = detail::differencing_polynomial(m.orders.d, m.orders.D, m.orders.s);
  const std::size_t ddeg = delta.size() - 1;
  std::vector<double> pred(y.begin(), y.end());
  if (y.size() <= ddeg) return pred;
  const auto w = detail::apply_differencing(y, delta);
  std::vector<double> e;
  const std::size_t start = static_cast<std::size_t>(m.orders.ar_degree());
  detail::css_residuals(w, detail::expand_ar(m.ar, m.seasonal_ar, m.orders.s),
                        detail::expand_ma(m.ma, m.seasonal_ma, m.orders.s), m.intercept, start, e);
  for (std::size_t t = start; t < w.size(); ++t) pred[t + ddeg] = y[t + ddeg] - e[t];
  return pred;
}

/// h-step forecasts with future innovations set to zero, returned on the
/// original (undifferenced) scale.
inline std::vector<double> forecast(const SarimaModel& m, std::size_t h) {
  if (h < 1) fail(Errc::invalid_argument, "forecast horizon must be >= 1");
  const auto& o = m.orders;
  const auto delta = detail::differencing_polynomial(o.d, o.D, o.s);
  const std::size_t ddeg = delta.size() - 1;
  const auto ar = detail::expand_ar(m.ar, m.seasonal_ar, o.s);
  const auto ma = detail::expand_ma(m.ma, m.seasonal_ma, o.s);

  std::vector<double> y = m.train_tail;
  if (y.size() < ddeg + static_cast<std::size_t>(o.ar_degree()))
    fail(Errc::invalid_argument, "model tail too short to forecast");
  std::vector<double> w = detail::apply_differencing(y, delta);
  std::vector<double> e(w.size(), 0.0);
  // Align stored innovations with the end of w.
  const std::size_t rt = std::min(m.residual_tail.size(), e.size());
  std::copy(m.residual_tail.end() - static_cast<std::ptrdiff_t>(rt), m.residual_tail.end(),
            e.end() - static_cast<std::ptrdiff_t>(rt));

  std::vector<double> out;
  out.reserve(h);
  for (std::size_t step = 0; step < h; ++step) {
    const std::size_t t = w.size();
    double next = m.intercept;
    for (const auto& l : ar) next += l.coef * (w[t - static_cast<std::size_t>(l.lag)] - m.intercept);
    for (const auto& l : ma)
      if (t >= static_cast<std::size_t>(l.lag)) next += l.coef * e[t - static_cast<std::size_t>(l.lag)];
    w.push_back(next);
    e.push_back(0.0);
    double level = next;
    const std::size_t ty = y.size();
    for (std::size_t j = 1; j <= ddeg; ++j) level -= delta[j] * y[ty - j];
    y.push_back(level);
    out.push_back(level);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Order selection
// ---------------------------------------------------------------------------

struct OrderSearch {
  int max_p = 2, max_q = 2, max_P = 1, max_Q = 1;
  bool parallel = true;
  FitOptions fit{};
};

struct OrderSelection {
  SarimaOrders orders;
  SarimaModel model;
  std::size_t candidates_tried = 0;
  std::size_t candidates_failed = 0;
};

/// AIC grid search over p, q <= 2 and P, Q <= 1. d follows the stationarity
/// verdict; D = 1 whenever a seasonal period is present. All candidates
/// share one conditioning start so their AICs are comparable.
inline OrderSelection select_orders_with_model(std::span<const double> y, int seasonal_period, bool is_stationary,
                                               const OrderSearch& search = {}) {
  if (seasonal_period < 1) fail(Errc::invalid_argument, "seasonal period must be >= 1");
  const int s = seasonal_period;
  const int d = is_stationary ? 0 : 1;
  const int D = s > 1 ? 1 : 0;
  std::vector<SarimaOrders> grid;
  const int max_P = s > 1 ? search.max_P : 0, max_Q = s > 1 ? search.max_Q : 0;
  for (int P = 0; P <= max_P; ++P)
    for (int Q = 0; Q <= max_Q; ++Q)
      for (int p = 0; p <= search.max_p; ++p)
        for (int q = 0; q <= search.max_q; ++q) grid.push_back({p, d, q, P, D, Q, s});

  FitOptions fo = search.fit;
  fo.condition_on = static_cast<std::size_t>(search.max_p + s * max_P);

  std::vector<std::optional<SarimaModel>> fits(grid.size());
  std::vector<std::string> errors(grid.size());
  auto run = [&](std::size_t i) {
    try {
      fits[i] = fit(y, grid[i], fo);
    } catch (const Error& ex) {
      errors[i] = ex.what();
    }
  };
  if (search.parallel && grid.size() > 1) {
    const std::size_t workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8u));
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) run(i);
      }));
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) run(i);
  }

  OrderSelection out;
  out.candidates_tried = grid.size();
  std::optional<std::size_t> best;
  auto better = [&](std::size_t a, std::size_t b) {
    const double aa = fits[a]->aic, ab = fits[b]->aic;
    const double tol = 1e-9 * std::max({1.0, std::abs(aa), std::abs(ab)});
    if (std::abs(aa - ab) > tol) return aa < ab;
    const int ka = grid[a].num_coefficients(), kb = grid[b].num_coefficients();
    if (ka != kb) return ka < kb;
    return grid[a].p + grid[a].P > grid[b].p + grid[b].P;
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!fits[i]) {
      ++out.candidates_failed;
      continue;
    }
    if (!best || better(i, *best)) best = i;
  }
  if (!best) fail(Errc::all_fits_failed, "no candidate order could be fit" + (errors.empty() ? "" : ": " + errors.back()));
  out.orders = grid[*best];
  out.model = std::move(*fits[*best]);
  return out;
}

inline SarimaOrders select_orders(std::span<const double> y, int seasonal_period, bool is_stationary,
                                  const OrderSearch& search = {}) {
  return select_orders_with_model(y, seasonal_period, is_stationary, search).orders;
}

inline SarimaOrders select_orders(const Series& s, int seasonal_period, bool is_stationary,
                                  const OrderSearch& search = {}) {
  return select_orders(s.values(), seasonal_period, is_stationary, search);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') fail(Errc::format_error, "bad number '" + tok + "'");
  return v;
}

inline void write_vector(std::ostream& os, const char* key, const std::vector<double>& v) {
  os << key << ' ' << v.size();
  for (double x : v) os << ' ' << hex_double(x);
  os << '\n';
}

inline std::vector<double> read_vector(std::istringstream& line) {
  std::size_t n = 0;
  if (!(line >> n)) fail(Errc::format_error, "missing vector length");
  std::vector<double> v(n);
  std::string tok;
  for (auto& x : v) {
    if (!(line >> tok)) fail(Errc::format_error, "vector shorter than declared");
    x = parse_double(tok);
  }
  return v;
}

}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

/// Versioned key/value text form. Doubles are written as hexadecimal
/// floats, so a write/read cycle is bit-exact.
inline void write_model(std::ostream& os, const SarimaModel& m) {
  using detail::hex_double;
  const auto& o = m.orders;
  os << "adsas-sarima " << kModelFormatVersion << '\n';
  os << "orders " << o.p << ' ' << o.d << ' ' << o.q << ' ' << o.P << ' ' << o.D << ' ' << o.Q << ' ' << o.s << '\n';
  detail::write_vector(os, "ar", m.ar);
  detail::write_vector(os, "ma", m.ma);
  detail::write_vector(os, "seasonal_ar", m.seasonal_ar);
  detail::write_vector(os, "seasonal_ma", m.seasonal_ma);
  os << "intercept " << hex_double(m.intercept) << '\n';
  os << "innovation_variance " << hex_double(m.innovation_variance) << '\n';
  os << "aic " << hex_double(m.aic) << '\n';
  os << "css " << hex_double(m.css) << '\n';
  os << "initial_css " << hex_double(m.initial_css) << '\n';
  os << "n_effective " << m.n_effective << '\n';
  os << "iterations " << m.iterations << '\n';
  os << "converged " << (m.converged ? 1 : 0) << '\n';
  detail::write_vector(os, "train_tail", m.train_tail);
  detail::write_vector(os, "residual_tail", m.residual_tail);
  os << "end-sarima\n";
}

inline SarimaModel read_model(std::istream& is) {
  SarimaModel m;
  std::string line;
  if (!std::getline(is, line)) fail(Errc::format_error, "empty model document");
  {
    std::istringstream hdr(line);
    std::string magic;
    int version = 0;
    hdr >> magic >> version;
    if (magic != "adsas-sarima") fail(Errc::format_error, "not a SARIMA model document");
    if (version != kModelFormatVersion) fail(Errc::format_error, "unsupported model version " + std::to_string(version));
  }
  bool ended = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key, tok;
    ls >> key;
    if (key == "end-sarima") {
      ended = true;
      break;
    }
    if (key == "orders") {
      auto& o = m.orders;
      if (!(ls >> o.p >> o.d >> o.q >> o.P >> o.D >> o.Q >> o.s)) fail(Errc::format_error, "bad orders line");
    } else if (key == "ar") {
      m.ar = detail::read_vector(ls);
    } else if (key == "ma") {
      m.ma = detail::read_vector(ls);
    } else if (key == "seasonal_ar") {
      m.seasonal_ar = detail::read_vector(ls);
    } else if (key == "seasonal_ma") {
      m.seasonal_ma = detail::read_vector(ls);
    } else if (key == "train_tail") {
      m.train_tail = detail::read_vector(ls);
    } else if (key == "residual_tail") {
      m.residual_tail = detail::read_vector(ls);
    } else if (key == "n_effective") {
      ls >> m.n_effective;
    } else if (key == "iterations") {
      ls >> m.iterations;
    } else if (key == "converged") {
      int v = 0;
      ls >> v;
      m.converged = v != 0;
    } else {
      if (!(ls >> tok)) fail(Errc::format_error, "missing value for " + key);
      const double v = detail::parse_double(tok);
      if (key == "intercept") m.intercept = v;
      else if (key == "innovation_variance") m.innovation_variance = v;
      else if (key == "aic") m.aic = v;
      else if (key == "css") m.css = v;
      else if (key == "initial_css") m.initial_css = v;
      else fail(Errc::format_error, "unknown key " + key);
    }
  }
  if (!ended) fail(Errc::format_error, "model document truncated");
  m.orders.validate();
  if (m.ar.size() != static_cast<std::size_t>(m.orders.p) || m.ma.size() != static_cast<std::size_t>(m.orders.q) ||
      m.seasonal_ar.size() != static_cast<std::size_t>(m.orders.P) ||
      m.seasonal_ma.size() != static_cast<std::size_t>(m.orders.Q))
    fail(Errc::format_error, "coefficient counts do not match orders");
  return m;
}

}  // namespace adsas
