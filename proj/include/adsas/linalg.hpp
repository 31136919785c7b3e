#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

#include "adsas/error.hpp"

namespace adsas::detail {

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd std_err;
  double ssr = 0.0;
  std::size_t nobs = 0;
  std::size_t rank = 0;

  /// Gaussian log-likelihood based AIC, up to the usual additive constant
  /// n * (ln(2 pi) + 1).
  double aic() const {
    const double n = static_cast<double>(nobs);
    return n * std::log(ssr / n) + 2.0 * static_cast<double>(coef.size());
  }
};

/// Ordinary least squares by column-pivoted Householder QR. Standard
/// errors use sigma^2 = SSR / (n - k).
inline OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, bool want_std_err = true) {
  OlsFit fit;
  fit.nobs = static_cast<std::size_t>(X.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  fit.rank = static_cast<std::size_t>(qr.rank());
  if (fit.rank < static_cast<std::size_t>(X.cols())) return fit;
  fit.coef = qr.solve(y);
  fit.ssr = (y - X * fit.coef).squaredNorm();
  if (want_std_err && X.rows() > X.cols()) {
    const Eigen::Index k = X.cols();
    Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
    Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();
    const double sigma2 = fit.ssr / static_cast<double>(X.rows() - k);
    fit.std_err = (cov.diagonal() * sigma2).cwiseSqrt();
  }
  return fit;
}

/// Roots of 1 + c[0] z + c[1] z^2 + ... + c[n-1] z^n via the companion matrix.
inline std::vector<std::complex<double>> lag_polynomial_roots(const std::vector<double>& c) {
  std::size_t deg = c.size();
  while (deg > 0 && c[deg - 1] == 0.0) --deg;
  if (deg == 0) return {};
  // Monic form in z: z^deg + (c[deg-2]/c[deg-1]) z^(deg-1) + ... + 1/c[deg-1].
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
  const double lead = c[deg - 1];
  for (std::size_t j = 0; j < deg; ++j) {
    const double coeff = (j == 0) ? 1.0 : c[j - 1];  // coefficient of z^j
    comp(0, static_cast<Eigen::Index>(deg - 1 - j)) = -coeff / lead;
  }
  for (std::size_t i = 1; i < deg; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) roots.push_back(es.eigenvalues()[i]);
  return roots;
}

/// Expands prod (z - r_i) into real lag-polynomial form 1 + c1 z + ... + cn z^n
/// (normalized so the constant term is one).
inline std::vector<double> lag_polynomial_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> poly{1.0};  // coefficients in increasing power of z
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j + 1] += poly[j];
      next[j] -= r * poly[j];
    }
    poly = std::move(next);
  }
  const std::complex<double> c0 = poly[0];
  std::vector<double> out;
  for (std::size_t j = 1; j < poly.size(); ++j) out.push_back((poly[j] / c0).real());
  return out;
}

}  // namespace adsas::detail
