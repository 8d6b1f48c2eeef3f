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

#include <cmath>
#include <optional>
#include <string_view>

#include "sslr/error.hpp"
#include "sslr/linalg.hpp"

namespace sslr {

enum class CovMethod { ParametricLSE, BootstrapLSE, ParametricPI, BootstrapPI, VarianceBootstrapPI };

constexpr std::string_view to_string(CovMethod method) {
  switch (method) {
    case CovMethod::ParametricLSE: return "parametric-lse";
    case CovMethod::BootstrapLSE: return "bootstrap-lse";
    case CovMethod::ParametricPI: return "parametric-pi";
    case CovMethod::BootstrapPI: return "bootstrap-pi";
    case CovMethod::VarianceBootstrapPI: return "variance-bootstrap-pi";
  }
  return "unknown";
}

/// n-scaled asymptotic covariance of the slope vector.
///
/// `with_intercept`, when present, is the (p+1)x(p+1) matrix whose first
/// row/column belongs to the intercept; `values` is its slope block.
struct CovMatrix {
  Eigen::MatrixXd values;
  CovMethod method = CovMethod::ParametricLSE;
  int replicates = 0;
  std::optional<Eigen::MatrixXd> with_intercept;

  Eigen::Index p() const { return values.rows(); }

  /// Standard errors of the slopes for a labeled sample of size n.
  Eigen::VectorXd slope_standard_errors(Eigen::Index n) const {
    return (values.diagonal().cwiseMax(0.0) / static_cast<double>(n)).cwiseSqrt();
  }

  std::optional<double> intercept_standard_error(Eigen::Index n) const {
    if (!with_intercept) return std::nullopt;
    return std::sqrt(std::max((*with_intercept)(0, 0), 0.0) / static_cast<double>(n));
  }
};

inline CovMatrix make_cov(Eigen::MatrixXd values, CovMethod method, int replicates = 0,
                          std::optional<Eigen::MatrixXd> with_intercept = std::nullopt) {
  require(values.rows() == values.cols(), "covariance must be square");
  CovMatrix cov{symmetrized(values), method, replicates, std::nullopt};
  if (with_intercept) {
    require(with_intercept->rows() == values.rows() + 1 && with_intercept->cols() == values.rows() + 1,
            "intercept-augmented covariance has the wrong shape");
    cov.with_intercept = symmetrized(*with_intercept);
  }
  return cov;
}

}  // namespace sslr
