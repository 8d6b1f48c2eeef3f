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

// Total-information (TI) and partial-information (PI) estimators of the best
// linear predictor.
//
// For each coordinate j the response is multiplied by the adjusted regressor
// X_{j.} / E(X_{j.}^2), which turns beta_j into the intercept of an auxiliary
// "intercept model"
//
//   W_j = beta_j + a U_1 + sum_j' b_j' U_{j'+1} + remainder,
//
//   W_j = Y X_{j.} / E(X_{j.}^2),  U_1 = X_{j.} / E(X_{j.}^2),
//   U_{j'+1} = X_j' X_{j.} / E(X_{j.}^2)  (minus 1 when j' = j),
//
// whose covariates all have expectation zero. beta_j is then estimated by the
// least-squares intercept W̄_j - â Ū_1 - sum b̂_j' Ū_{j'+1} over the labeled rows.
// TI takes the expectations (partialling coefficients and E(X_{j.}^2)) from
// known population moments; PI takes them from all n + m rows of X.

#pragma once

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linalg.hpp"
#include "sslr/linreg.hpp"
#include "sslr/parallel.hpp"

namespace sslr {

/// Marker: take every expectation from the pooled n + m rows.
struct PooledEmpirical {};

using MomentSource = std::variant<MomentSpec, PooledEmpirical>;

struct InterceptModelData {
  Eigen::VectorXd w;  // n
  Eigen::MatrixXd u;  // n x (p+1): U_1, U_2, ..., U_{p+1}
  Eigen::Index coordinate = 0;
  double mean_square = 0.0;  // E(X_{j.}^2) under the chosen source
};

struct CoordinateFit {
  double a_hat = 0.0;
  Eigen::VectorXd b_hat;                      // p
  Eigen::VectorXd intercept_model_residuals;  // n
};

struct SslFit {
  Eigen::VectorXd beta;
  double intercept = 0.0;
  std::vector<CoordinateFit> per_coordinate;
  EstimatorTag estimator_tag = EstimatorTag::PI;
  double nu_hat = 1.0;

  Eigen::VectorXd coefficients() const {
    Eigen::VectorXd c(beta.size() + 1);
    c(0) = intercept;
    c.tail(beta.size()) = beta;
    return c;
  }
};

/// (U_1, ..., U_{p+1}) for the given rows of X and their adjusted values X_{j.}.
inline Eigen::MatrixXd intercept_covariates(const Eigen::MatrixXd& x_rows,
                                            const Eigen::VectorXd& adjusted, Eigen::Index j,
                                            double mean_square) {
  const Eigen::Index p = x_rows.cols();
  const Eigen::VectorXd scaled = adjusted / mean_square;
  Eigen::MatrixXd u(x_rows.rows(), p + 1);
  u.col(0) = scaled;
  for (Eigen::Index c = 0; c < p; ++c) u.col(c + 1) = x_rows.col(c).cwiseProduct(scaled);
  u.col(j + 1).array() -= 1.0;
  return u;
}

namespace detail {

inline void check_sample_size(const SemiDataset& d) {
  if (d.n() < d.p() + 3) {
    fail(ErrorKind::Underdetermined,
         "intercept models need at least p + 3 = " + std::to_string(d.p() + 3) +
             " labeled rows, got " + std::to_string(d.n()));
  }
}

/// full_x is only consulted for the pooled source.
inline PartiallingRule partialling_for(const MomentSource& source, const Eigen::MatrixXd& full_x,
                                       Eigen::Index j) {
  if (const auto* moments = std::get_if<MomentSpec>(&source)) {
    return population_partialling(*moments, j);
  }
  return empirical_partialling(full_x, j);
}

inline InterceptModelData intercept_model(const SemiDataset& d, const PartiallingRule& rule) {
  InterceptModelData data;
  data.coordinate = rule.coordinate;
  data.mean_square = rule.mean_square;
  const Eigen::VectorXd adjusted = rule.apply(d.labeled_x());
  data.w = d.labeled_y().cwiseProduct(adjusted) / rule.mean_square;
  data.u = intercept_covariates(d.labeled_x(), adjusted, rule.coordinate, rule.mean_square);
  return data;
}

struct CoordinateEstimate {
  double beta = 0.0;
  CoordinateFit fit;
};

inline CoordinateEstimate fit_intercept_model(const InterceptModelData& data,
                                              const std::vector<std::string>& names) {
  const Eigen::Index p = data.u.cols() - 1;
  const Eigen::Index j = data.coordinate;
  const Eigen::MatrixXd design = with_intercept_column(data.u);
  Eigen::VectorXd theta;
  try {
    theta = LeastSquares(design).solve(data.w);
  } catch (const Error& e) {
    fail(ErrorKind::Estimation, "intercept model for coordinate " + std::to_string(j) + " ('" +
                                    names[j] + "') cannot be fitted: " + e.what());
  }
  CoordinateEstimate out;
  out.fit.a_hat = theta(1);
  out.fit.b_hat = theta.tail(p);
  const Eigen::VectorXd slopes = theta.tail(p + 1);
  const Eigen::VectorXd u_mean = data.u.colwise().mean().transpose();
  out.beta = data.w.mean() - u_mean.dot(slopes);
  out.fit.intercept_model_residuals = (data.w - data.u * slopes).array() - out.beta;
  return out;
}

}  // namespace detail

/// W_j and U_1..U_{p+1} on the labeled rows for coordinate j.
inline InterceptModelData build_intercept_model(const SemiDataset& d, Eigen::Index j,
                                                const MomentSource& source) {
  require(j >= 0 && j < d.p(), "coordinate out of range");
  if (const auto* moments = std::get_if<MomentSpec>(&source)) {
    require(moments->p() == d.p(), "moment spec dimension does not match the dataset");
    return detail::intercept_model(d, population_partialling(*moments, j));
  }
  return detail::intercept_model(d, empirical_partialling(d.full_x(), j));
}

/// Shared TI/PI pipeline; coordinates are independent and may run concurrently.
inline SslFit fit_intercept_estimator(const SemiDataset& d, const MomentSource& source,
                                      int threads = 1) {
  detail::check_sample_size(d);
  const bool pooled = std::holds_alternative<PooledEmpirical>(source);
  if (!pooled) {
    require(std::get<MomentSpec>(source).p() == d.p(),
            "moment spec dimension does not match the dataset");
  }
  const Eigen::MatrixXd full = pooled ? d.full_x() : Eigen::MatrixXd();
  const Eigen::Index p = d.p();

  std::vector<detail::CoordinateEstimate> estimates(static_cast<std::size_t>(p));
  parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const PartiallingRule rule = detail::partialling_for(source, full, j);
    estimates[jj] = detail::fit_intercept_model(detail::intercept_model(d, rule), d.column_names());
  });

  SslFit fit;
  fit.estimator_tag = pooled ? EstimatorTag::PI : EstimatorTag::TI;
  fit.nu_hat = d.labeled_fraction();
  fit.beta.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    fit.beta(j) = estimates[j].beta;
    fit.per_coordinate.push_back(std::move(estimates[j].fit));
  }
  const Eigen::VectorXd x_bar = d.labeled_x().colwise().mean().transpose();
  fit.intercept = d.labeled_y().mean() - fit.beta.dot(x_bar);
  return fit;
}

/// TI: expectations from known population moments of X.
inline SslFit fit_ti(const SemiDataset& d, const MomentSpec& moments, int threads = 1) {
  return fit_intercept_estimator(d, moments, threads);
}

/// PI: expectations from the pooled labeled + unlabeled sample.
inline SslFit fit_pi(const SemiDataset& d, int threads = 1) {
  return fit_intercept_estimator(d, PooledEmpirical{}, threads);
}

}  // namespace sslr
