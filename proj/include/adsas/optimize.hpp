#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace adsas {

struct NelderMeadOptions {
  std::size_t max_iterations = 500;
  /// Converged once (f_worst - f_best) <= rel_tolerance * max(|f_best|, abs_floor).
  double rel_tolerance = 1e-8;
  double abs_floor = 1e-12;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  double relative_spread = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Derivative-free simplex minimization (standard reflection / expansion /
/// contraction / shrink coefficients 1, 2, 1/2, 1/2). `f` may return
/// +infinity for infeasible points. The start point is a simplex vertex,
/// so the result is never worse than f(x0).
template <class F>
NelderMeadResult nelder_mead(F&& f, const std::vector<double>& x0, const std::vector<double>& steps,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.value = f(x0);
    res.converged = true;
    res.relative_spread = 0.0;
    return res;
  }
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);
  auto spread = [&] {
    const double best = fv[order[0]], worst = fv[order[n]];
    if (!std::isfinite(worst)) return std::numeric_limits<double>::infinity();
    return (worst - best) / std::max(std::abs(best), opt.abs_floor);
  };

  std::size_t it = 0;
  for (;; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    res.relative_spread = spread();
    if (res.relative_spread <= opt.rel_tolerance) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iterations) break;

    const std::size_t worst = order[n];
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[k]][j];
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t j = 0; j < n; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
    const double fr = f(xr);
    if (fr < fv[order[0]]) {
      for (std::size_t j = 0; j < n; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe, fv[worst] = fe;
      } else {
        simplex[worst] = xr, fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[order[n - 1]]) {
      simplex[worst] = xr, fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t j = 0; j < n; ++j)
      xc[j] = outside ? centroid[j] + 0.5 * (xr[j] - centroid[j]) : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
    const double fc = f(xc);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc, fv[worst] = fc;
      continue;
    }
    const auto& best = simplex[order[0]];
    for (std::size_t k = 1; k <= n; ++k) {
      auto& v = simplex[order[k]];
      for (std::size_t j = 0; j < n; ++j) v[j] = best[j] + 0.5 * (v[j] - best[j]);
      fv[order[k]] = f(v);
    }
  }
  res.iterations = it;
  res.x = simplex[order[0]];
  res.value = fv[order[0]];
  return res;
}

}  // namespace adsas
