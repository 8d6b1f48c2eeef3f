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

#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "sslr/error.hpp"

namespace sslr {

/// A singular value below this fraction of the largest one makes a design rank deficient.
inline constexpr double kRankTolerance = 1e-10;

namespace detail {

inline std::string column_label(std::span<const std::string> labels, Eigen::Index c) {
  if (c < static_cast<Eigen::Index>(labels.size())) return "'" + labels[c] + "'";
  return "#" + std::to_string(c);
}

inline bool well_conditioned(const Eigen::MatrixXd& upper) {
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(upper).singularValues();
  const double largest = sv(0);
  return largest > 0.0 && sv(sv.size() - 1) >= kRankTolerance * largest;
}

}  // namespace detail

/// Householder QR of a tall design matrix with an explicit rank check.
///
/// Without pivoting, the leading c x c block of R is the R factor of the first
/// c columns, which is how the first dependent column is located.
class LeastSquares {
 public:
  explicit LeastSquares(const Eigen::MatrixXd& design, std::span<const std::string> labels = {})
      : qr_(design) {
    const Eigen::Index rows = design.rows();
    const Eigen::Index cols = design.cols();
    if (cols == 0) fail(ErrorKind::Contract, "least squares needs at least one column");
    if (rows < cols) {
      fail(ErrorKind::Underdetermined, std::to_string(rows) + " rows cannot determine " +
                                           std::to_string(cols) + " coefficients");
    }
    const Eigen::MatrixXd r = upper_factor();
    if (!detail::well_conditioned(r)) {
      for (Eigen::Index c = 1; c <= cols; ++c) {
        if (!detail::well_conditioned(r.topLeftCorner(c, c))) {
          fail(ErrorKind::RankDeficient, "design is rank deficient; column " +
                                             detail::column_label(labels, c - 1) +
                                             " depends on the preceding columns");
        }
      }
      fail(ErrorKind::RankDeficient, "design is rank deficient");
    }
  }

  Eigen::Index rows() const { return qr_.rows(); }
  Eigen::Index cols() const { return qr_.cols(); }

  template <typename Rhs>
  auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    return qr_.solve(rhs);
  }

  Eigen::MatrixXd upper_factor() const {
    const Eigen::Index k = qr_.cols();
    return qr_.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  }

  /// (D^T D)^{-1} computed as R^{-1} R^{-T}.
  Eigen::MatrixXd gram_inverse() const {
    const Eigen::Index k = qr_.cols();
    const Eigen::MatrixXd r = upper_factor();
    const Eigen::MatrixXd r_inv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    return r_inv * r_inv.transpose();
  }

 private:
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

/// Prepends a column of ones.
inline Eigen::MatrixXd with_intercept_column(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

inline double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(symmetric),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

}  // namespace sslr
