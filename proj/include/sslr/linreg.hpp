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

// Least squares with intercept, partialling out, and the sandwich covariance.

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sslr/covariance.hpp"
#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linalg.hpp"

namespace sslr {

enum class EstimatorTag { LSE, TI, PI };

constexpr std::string_view to_string(EstimatorTag tag) {
  switch (tag) {
    case EstimatorTag::LSE: return "LSE";
    case EstimatorTag::TI: return "TI";
    case EstimatorTag::PI: return "PI";
  }
  return "unknown";
}

struct FitResult {
  double intercept = 0.0;
  Eigen::VectorXd slopes;
  Eigen::VectorXd residuals;
  EstimatorTag estimator_tag = EstimatorTag::LSE;

  /// (intercept, slopes...)
  Eigen::VectorXd coefficients() const {
    Eigen::VectorXd c(slopes.size() + 1);
    c(0) = intercept;
    c.tail(slopes.size()) = slopes;
    return c;
  }
};

/// Ordinary least squares of y on x (plus a constant unless with_intercept is false).
inline FitResult fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                   bool with_intercept = true,
                                   std::span<const std::string> column_names = {}) {
  require(x.rows() == y.size(), "design and response lengths differ");
  std::vector<std::string> labels;
  if (with_intercept) labels.emplace_back("(intercept)");
  labels.insert(labels.end(), column_names.begin(), column_names.end());

  const Eigen::MatrixXd design = with_intercept ? with_intercept_column(x) : x;
  const LeastSquares ls(design, labels);
  const Eigen::VectorXd coef = ls.solve(y);

  FitResult fit;
  fit.intercept = with_intercept ? coef(0) : 0.0;
  fit.slopes = with_intercept ? Eigen::VectorXd(coef.tail(x.cols())) : coef;
  fit.residuals = y - design * coef;
  return fit;
}

/// Fits the LSE on the labeled block of a dataset.
inline FitResult fit_lse(const SemiDataset& d) {
  return fit_least_squares(d.labeled_x(), d.labeled_y(), true, d.column_names());
}

/// Coefficients that partial X_j out on (1, X_{-j}), and E(X_{j.}^2) under the
/// expectation operator they were computed with.
///
/// `coefficients` is ordered (constant, X_1, ..., X_{j-1}, X_{j+1}, ..., X_p).
struct PartiallingRule {
  Eigen::Index coordinate = 0;
  Eigen::VectorXd coefficients;
  double mean_square = 0.0;

  /// X_j - vecX_{-j}^T coefficients for every row of x.
  Eigen::VectorXd apply(const Eigen::MatrixXd& x) const {
    const Eigen::Index p = x.cols();
    Eigen::VectorXd out = x.col(coordinate).array() - coefficients(0);
    Eigen::Index k = 1;
    for (Eigen::Index c = 0; c < p; ++c) {
      if (c == coordinate) continue;
      out -= coefficients(k++) * x.col(c);
    }
    return out;
  }
};

struct RowRange {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;  // exclusive

  Eigen::Index size() const { return end - begin; }
};

struct AdjustedRegressor {
  Eigen::VectorXd values;
  double mean_square = 0.0;
  Eigen::VectorXd coefficients;
};

namespace detail {

inline Eigen::MatrixXd partialling_design(const Eigen::MatrixXd& x, Eigen::Index j) {
  const Eigen::Index p = x.cols();
  Eigen::MatrixXd design(x.rows(), p);
  design.col(0).setOnes();
  Eigen::Index k = 1;
  for (Eigen::Index c = 0; c < p; ++c) {
    if (c != j) design.col(k++) = x.col(c);
  }
  return design;
}

inline void check_mean_square(double mean_square, double raw_mean_square, Eigen::Index j) {
  const double floor = kRankTolerance * kRankTolerance * std::max(raw_mean_square, 1e-300);
  if (!(mean_square > floor)) {
    fail(ErrorKind::DegenerateRegressor,
         "adjusted regressor for coordinate " + std::to_string(j) +
             " vanishes; the predictor is (nearly) a linear function of the others");
  }
}

}  // namespace detail

/// Partials column j of x out on the constant and the other columns, using every row.
inline PartiallingRule empirical_partialling(const Eigen::MatrixXd& x, Eigen::Index j) {
  require(j >= 0 && j < x.cols(), "coordinate out of range");
  const Eigen::MatrixXd design = detail::partialling_design(x, j);
  const LeastSquares ls(design);
  PartiallingRule rule;
  rule.coordinate = j;
  rule.coefficients = ls.solve(x.col(j));
  const Eigen::VectorXd residual = x.col(j) - design * rule.coefficients;
  const auto rows = static_cast<double>(x.rows());
  rule.mean_square = residual.squaredNorm() / rows;
  detail::check_mean_square(rule.mean_square, x.col(j).squaredNorm() / rows, j);
  return rule;
}

/// Population analogue: solves E(vecX_{-j} vecX_{-j}^T) b = E(vecX_{-j} X_j)
/// assembled from the moment spec.
inline PartiallingRule population_partialling(const MomentSpec& moments, Eigen::Index j) {
  const Eigen::Index p = moments.p();
  require(j >= 0 && j < p, "coordinate out of range");
  const Eigen::MatrixXd aug = moments.augmented();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c <= p; ++c) {
    if (c != j + 1) keep.push_back(c);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd gram(k, k);
  Eigen::VectorXd cross(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    cross(a) = aug(keep[a], j + 1);
    for (Eigen::Index b = 0; b < k; ++b) gram(a, b) = aug(keep[a], keep[b]);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (!(sv(k - 1) >= kRankTolerance * sv(0)) || !(sv(0) > 0.0)) {
    fail(ErrorKind::RankDeficient, "population partialling design for coordinate " +
                                       std::to_string(j) + " is singular");
  }
  PartiallingRule rule;
  rule.coordinate = j;
  rule.coefficients = svd.solve(cross);
  rule.mean_square = aug(j + 1, j + 1) - cross.dot(rule.coefficients);
  detail::check_mean_square(rule.mean_square, aug(j + 1, j + 1), j);
  return rule;
}

/// X_{j.} over the rows in restrict_to, with partialling coefficients and the
/// mean square taken over all rows of x_full.
inline AdjustedRegressor adjust_regressor(const Eigen::MatrixXd& x_full, Eigen::Index j,
                                          RowRange restrict_to) {
  require(restrict_to.begin >= 0 && restrict_to.begin <= restrict_to.end &&
              restrict_to.end <= x_full.rows(),
          "row range out of bounds");
  const PartiallingRule rule = empirical_partialling(x_full, j);
  AdjustedRegressor out;
  out.values = rule.apply(x_full.middleRows(restrict_to.begin, restrict_to.size()));
  out.mean_square = rule.mean_square;
  out.coefficients = rule.coefficients;
  return out;
}

inline AdjustedRegressor adjust_regressor(const Eigen::MatrixXd& x_full, Eigen::Index j) {
  return adjust_regressor(x_full, j, RowRange{0, x_full.rows()});
}

/// n * (D^T D)^{-1} D^T diag(r^2) D (D^T D)^{-1} with D = (1, x).
inline CovMatrix sandwich_cov_lse(const Eigen::MatrixXd& x, const Eigen::VectorXd& residuals) {
  require(x.rows() == residuals.size(), "design and residual lengths differ");
  const Eigen::MatrixXd design = with_intercept_column(x);
  const LeastSquares ls(design);
  const Eigen::MatrixXd bread = ls.gram_inverse();
  const Eigen::MatrixXd weighted = design.array().colwise() * residuals.array().square();
  const Eigen::MatrixXd meat = design.transpose() * weighted;
  const Eigen::MatrixXd full = static_cast<double>(x.rows()) * (bread * meat * bread);
  const Eigen::Index p = x.cols();
  return make_cov(full.bottomRightCorner(p, p), CovMethod::ParametricLSE, 0, full);
}

}  // namespace sslr
