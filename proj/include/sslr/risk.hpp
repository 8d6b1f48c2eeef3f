/*
   Copyright 2026 The sslr Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Asymptotic excess risk of a linear predictor whose intercept is
// ȳ - beta^T x̄: an intercept term that does not depend on the slope
// estimator, plus Trace(M Sigma) with M = Cov(X).

#pragma once

#include <Eigen/Dense>

#include <optional>

#include "sslr/covariance.hpp"
#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linreg.hpp"

namespace sslr {

struct RiskReport {
  double first_term = 0.0;
  double trace_term = 0.0;
  double total = 0.0;
  std::optional<double> err_hat;
};

inline RiskReport asymptotic_risk(double first_term, const Eigen::MatrixXd& m_cov,
                                  const CovMatrix& sigma) {
  require(m_cov.rows() == m_cov.cols() && m_cov.rows() == sigma.values.rows(),
          "M and Sigma dimensions differ");
  RiskReport report;
  report.first_term = first_term;
  report.trace_term = (m_cov * sigma.values).trace();
  report.total = report.first_term + report.trace_term;
  return report;
}

/// Trace(M (Sigma1 - Sigma2)) / n: the asymptotic difference in prediction
/// error (of Y, and of E[Y|X]) between two estimators.
inline double prediction_error_difference(const Eigen::MatrixXd& m_cov, const Eigen::MatrixXd& sigma1,
                                          const Eigen::MatrixXd& sigma2, Eigen::Index n) {
  require(m_cov.rows() == sigma1.rows() && sigma1.rows() == sigma2.rows() &&
              sigma1.cols() == sigma2.cols() && m_cov.cols() == m_cov.rows(),
          "prediction error difference: dimension mismatch");
  require(n >= 1, "prediction error difference needs n >= 1");
  return (m_cov * (sigma1 - sigma2)).trace() / static_cast<double>(n);
}

inline double prediction_error_difference(const Eigen::MatrixXd& m_cov, const CovMatrix& sigma1,
                                          const CovMatrix& sigma2, Eigen::Index n) {
  return prediction_error_difference(m_cov, sigma1.values, sigma2.values, n);
}

/// Plug-in pieces shared by the numerator and denominator of the ERR estimate.
struct RiskPlugins {
  double sigma2_y = 0.0;    // (1/n) sum (y - ȳ)^2
  Eigen::MatrixXd m_hat;    // (1/(n+m)) sum over all rows of (x - x̄)(x - x̄)^T, x̄ labeled mean
  Eigen::VectorXd cov_yx;   // (1/n) sum (y - ȳ)(x - x̄)
  double first_term = 0.0;  // sigma2_y + b^T M b - 2 b^T cov_yx at b = beta_LSE
};

inline RiskPlugins risk_plugins(const SemiDataset& d, const FitResult& lse_fit) {
  require(lse_fit.slopes.size() == d.p(), "LSE fit does not match the dataset");
  const auto n = static_cast<double>(d.n());
  const Eigen::RowVectorXd x_bar = d.labeled_x().colwise().mean();
  const double y_bar = d.labeled_y().mean();
  const Eigen::VectorXd y_c = d.labeled_y().array() - y_bar;
  const Eigen::MatrixXd lx_c = d.labeled_x().rowwise() - x_bar;
  const Eigen::MatrixXd full_c = d.full_x().rowwise() - x_bar;

  RiskPlugins out;
  out.sigma2_y = y_c.squaredNorm() / n;
  out.m_hat = symmetrized(full_c.transpose() * full_c / static_cast<double>(full_c.rows()));
  out.cov_yx = lx_c.transpose() * y_c / n;
  const Eigen::VectorXd& b = lse_fit.slopes;
  out.first_term = out.sigma2_y + b.dot(out.m_hat * b) - 2.0 * b.dot(out.cov_yx);
  return out;
}

/// Plug-in estimate of the excess risk ratio of PI to LSE, using the pairs
/// bootstrap covariance of the LSE and the variance-bootstrap difference.
inline double err_hat_pi(const SemiDataset& d, const FitResult& lse_fit, const CovMatrix& av_bs_lse,
                         const Eigen::MatrixXd& delta_hat) {
  const Eigen::Index p = d.p();
  require(av_bs_lse.values.rows() == p && delta_hat.rows() == p && delta_hat.cols() == p,
          "covariance dimensions do not match the dataset");
  const RiskPlugins plug = risk_plugins(d, lse_fit);
  const Eigen::MatrixXd av_pi = av_bs_lse.values - delta_hat;
  const double numerator = plug.first_term + (plug.m_hat * av_pi).trace();
  const double denominator = plug.first_term + (plug.m_hat * av_bs_lse.values).trace();
  if (!(denominator > 0.0)) {
    fail(ErrorKind::DegenerateRisk, "estimated LSE excess risk is not positive");
  }
  return numerator / denominator;
}

/// (1/m) sum over unlabeled rows of vecX^T Sigma vecX / n, with Sigma the
/// intercept-augmented covariance. Returns nullopt when m = 0.
inline std::optional<double> mean_prediction_error(const SemiDataset& d,
                                                   const Eigen::MatrixXd& sigma_with_intercept) {
  require(sigma_with_intercept.rows() == d.p() + 1, "covariance must include the intercept");
  if (d.m() == 0) return std::nullopt;
  const Eigen::MatrixXd z = with_intercept_column(d.unlabeled_x());
  const double quad = (z * sigma_with_intercept).cwiseProduct(z).sum();
  return quad / static_cast<double>(d.m()) / static_cast<double>(d.n());
}

}  // namespace sslr
