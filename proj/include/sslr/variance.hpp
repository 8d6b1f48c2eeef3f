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

// Estimators of the asymptotic covariance of the PI estimator:
//   parametric         Cov(remainder) + nu (sandwich LSE - Cov(remainder))
//   pairs bootstrap    labeled pairs and unlabeled rows resampled separately
//   variance bootstrap BS(LSE) - n Cov(beta*_PI - beta*_LSE) on joint replicates
// plus the pairs bootstrap of the LSE itself.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

#include "sslr/covariance.hpp"
#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linreg.hpp"
#include "sslr/parallel.hpp"
#include "sslr/rng.hpp"
#include "sslr/ssl_estimators.hpp"

namespace sslr {

enum class BootstrapScheme { PairsLabeledOnly, PairsLabeledPlusUnlabeled };

constexpr std::string_view to_string(BootstrapScheme scheme) {
  return scheme == BootstrapScheme::PairsLabeledOnly ? "pairs-labeled-only"
                                                     : "pairs-labeled-plus-unlabeled";
}

inline constexpr int kDefaultBootstrapReplicates = 1000;
inline constexpr int kMaxRedraws = 100;

struct BootstrapPlan {
  int replicate_count = kDefaultBootstrapReplicates;
  std::uint64_t seed = 0;
  BootstrapScheme scheme = BootstrapScheme::PairsLabeledPlusUnlabeled;
};

/// Replicate coefficient vectors (intercept first), one row per replicate.
struct BootstrapReplicates {
  Eigen::MatrixXd lse;
  Eigen::MatrixXd pi;
  int redraws = 0;
};

/// n times the sample covariance (N - 1 denominator) of the rows of `replicates`.
inline Eigen::MatrixXd scaled_covariance(const Eigen::MatrixXd& replicates, Eigen::Index n) {
  const Eigen::Index count = replicates.rows();
  require(count >= 2, "covariance needs at least two replicates");
  const Eigen::RowVectorXd mean = replicates.colwise().mean();
  const Eigen::MatrixXd centered = replicates.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(count - 1);
  return symmetrized(static_cast<double>(n) * cov);
}

namespace detail {

inline constexpr std::uint32_t lane(int attempt, bool unlabeled) {
  return static_cast<std::uint32_t>(2 * attempt + (unlabeled ? 1 : 0));
}

inline SemiDataset resample(const SemiDataset& d, const BootstrapPlan& plan, std::uint64_t replicate,
                            int attempt) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  rng::Stream labeled_stream(plan.seed, replicate, lane(attempt, false));
  Eigen::MatrixXd lx(n, p);
  Eigen::VectorXd ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(rng::uniform_index(labeled_stream, static_cast<std::size_t>(n)));
    lx.row(i) = d.labeled_x().row(k);
    ly(i) = d.labeled_y()(k);
  }
  Eigen::MatrixXd ux(0, p);
  if (plan.scheme == BootstrapScheme::PairsLabeledPlusUnlabeled && d.m() > 0) {
    const Eigen::Index m = d.m();
    rng::Stream unlabeled_stream(plan.seed, replicate, lane(attempt, true));
    ux.resize(m, p);
    for (Eigen::Index i = 0; i < m; ++i) {
      ux.row(i) = d.unlabeled_x().row(
          static_cast<Eigen::Index>(rng::uniform_index(unlabeled_stream, static_cast<std::size_t>(m))));
    }
  }
  return {std::move(lx), std::move(ly), std::move(ux), d.column_names(), d.label_name()};
}

}  // namespace detail

/// Draws plan.replicate_count resamples and refits the requested estimators on
/// each. A resample on which any requested fit is singular is redrawn from a
/// fresh lane of the same replicate substream, at most kMaxRedraws times.
inline BootstrapReplicates draw_replicates(const SemiDataset& d, const BootstrapPlan& plan,
                                           bool want_lse, bool want_pi, int threads = 1) {
  require(plan.replicate_count >= 2, "bootstrap needs at least two replicates");
  const auto count = static_cast<std::size_t>(plan.replicate_count);
  const Eigen::Index width = d.p() + 1;

  BootstrapReplicates out;
  if (want_lse) out.lse.resize(plan.replicate_count, width);
  if (want_pi) out.pi.resize(plan.replicate_count, width);
  std::vector<int> redraws(count, 0);

  parallel_for(count, threads, [&](std::size_t r) {
    for (int attempt = 0;; ++attempt) {
      const SemiDataset sample = detail::resample(d, plan, r, attempt);
      try {
        Eigen::VectorXd lse_coef;
        Eigen::VectorXd pi_coef;
        if (want_lse) lse_coef = fit_lse(sample).coefficients();
        if (want_pi) pi_coef = fit_pi(sample).coefficients();
        if (want_lse) out.lse.row(static_cast<Eigen::Index>(r)) = lse_coef.transpose();
        if (want_pi) out.pi.row(static_cast<Eigen::Index>(r)) = pi_coef.transpose();
        redraws[r] = attempt;
        return;
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        if (attempt + 1 >= kMaxRedraws) {
          fail(ErrorKind::Estimation, "bootstrap replicate " + std::to_string(r) + " was singular in " +
                                          std::to_string(kMaxRedraws) + " consecutive draws");
        }
      }
    }
  });
  for (int k : redraws) out.redraws += k;
  return out;
}

namespace detail {

inline CovMatrix replicate_cov(const Eigen::MatrixXd& replicates, Eigen::Index n, CovMethod method) {
  const Eigen::MatrixXd full = scaled_covariance(replicates, n);
  const Eigen::Index p = full.rows() - 1;
  return make_cov(full.bottomRightCorner(p, p), method, static_cast<int>(replicates.rows()), full);
}

}  // namespace detail

/// Pairs bootstrap of the LSE over the labeled rows.
inline CovMatrix bootstrap_lse(const SemiDataset& d, const BootstrapPlan& plan, int threads = 1) {
  require(plan.scheme == BootstrapScheme::PairsLabeledOnly,
          "bootstrap_lse resamples labeled pairs only");
  const auto reps = draw_replicates(d, plan, true, false, threads);
  return detail::replicate_cov(reps.lse, d.n(), CovMethod::BootstrapLSE);
}

/// Pairs bootstrap of the full PI pipeline; labeled pairs and unlabeled rows
/// are resampled from their own empirical laws.
inline CovMatrix bootstrap_pi(const SemiDataset& d, const BootstrapPlan& plan, int threads = 1) {
  require(plan.scheme == BootstrapScheme::PairsLabeledPlusUnlabeled,
          "bootstrap_pi resamples labeled pairs and unlabeled rows");
  const auto reps = draw_replicates(d, plan, false, true, threads);
  return detail::replicate_cov(reps.pi, d.n(), CovMethod::BootstrapPI);
}

struct VarianceBootstrap {
  CovMatrix av;              // VarianceBootstrapPI
  Eigen::MatrixXd delta_hat;  // n Cov(beta*_PI - beta*_LSE), slopes only
  CovMatrix lse;             // BootstrapLSE from the same replicates
  CovMatrix pi;              // BootstrapPI from the same replicates
};

/// Variance bootstrap: both estimators on every joint resample. Also returns
/// the two plain pairs-bootstrap estimates, which come for free.
inline VarianceBootstrap variance_bootstrap_pi(const SemiDataset& d, const BootstrapPlan& plan,
                                               int threads = 1) {
  require(plan.scheme == BootstrapScheme::PairsLabeledPlusUnlabeled,
          "the variance bootstrap resamples labeled pairs and unlabeled rows");
  const auto reps = draw_replicates(d, plan, true, true, threads);
  const Eigen::Index p = d.p();
  VarianceBootstrap out{
      .av = {},
      .delta_hat = scaled_covariance((reps.pi - reps.lse).rightCols(p), d.n()),
      .lse = detail::replicate_cov(reps.lse, d.n(), CovMethod::BootstrapLSE),
      .pi = detail::replicate_cov(reps.pi, d.n(), CovMethod::BootstrapPI),
  };
  out.av = make_cov(out.lse.values - out.delta_hat, CovMethod::VarianceBootstrapPI,
                    plan.replicate_count);
  return out;
}

namespace detail {

/// Empirical (1/n) covariance of the intercept-model residuals; they have mean zero.
inline Eigen::MatrixXd remainder_covariance(const SemiDataset& d, const SslFit& pi_fit,
                                            const CovMatrix& lse_sandwich) {
  const Eigen::Index p = d.p();
  const Eigen::Index n = d.n();
  require(static_cast<Eigen::Index>(pi_fit.per_coordinate.size()) == p &&
              lse_sandwich.values.rows() == p,
          "PI fit, sandwich and dataset dimensions differ");
  require(lse_sandwich.method == CovMethod::ParametricLSE,
          "the parametric PI estimate takes the parametric sandwich of the LSE");
  Eigen::MatrixXd residuals(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto& r = pi_fit.per_coordinate[j].intercept_model_residuals;
    require(r.size() == n, "intercept-model residuals do not match the labeled sample");
    residuals.col(j) = r;
  }
  return symmetrized(residuals.transpose() * residuals / static_cast<double>(n));
}

}  // namespace detail

/// Parametric estimate of AV(beta_PI).
inline CovMatrix av_parametric_pi(const SemiDataset& d, const SslFit& pi_fit,
                                  const CovMatrix& lse_sandwich) {
  const Eigen::MatrixXd c = detail::remainder_covariance(d, pi_fit, lse_sandwich);
  const Eigen::MatrixXd& s = lse_sandwich.values;
  const double nu = pi_fit.nu_hat;
  Eigen::MatrixXd av = c + nu * (s - c);
  for (Eigen::Index j = 0; j < av.rows(); ++j) {
    av(j, j) = c(j, j) + nu * std::max(s(j, j) - c(j, j), 0.0);
  }
  return make_cov(std::move(av), CovMethod::ParametricPI);
}

/// Parametric estimate of AV(LSE) - AV(PI) = (1 - nu)(sandwich - Cov(remainder)),
/// left unclamped so that it can come out negative.
inline Eigen::MatrixXd parametric_difference(const SemiDataset& d, const SslFit& pi_fit,
                                             const CovMatrix& lse_sandwich) {
  const Eigen::MatrixXd c = detail::remainder_covariance(d, pi_fit, lse_sandwich);
  return (1.0 - pi_fit.nu_hat) * (lse_sandwich.values - c);
}

}  // namespace sslr
