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

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

namespace {

using sslr::BootstrapPlan;
using sslr::BootstrapScheme;
using sslr::testing::max_rel_diff;

BootstrapPlan plan(int reps, std::uint64_t seed, BootstrapScheme scheme = BootstrapScheme::PairsLabeledPlusUnlabeled) {
  return {reps, seed, scheme};
}

TEST(ScaledCovariance, MatchesHandComputation) {
  Eigen::MatrixXd reps(3, 2);
  reps << 1, 2, 3, 2, 5, 8;
  const Eigen::MatrixXd cov = sslr::scaled_covariance(reps, 10);
  // column means (3, 4); var1 = (4+0+4)/2 = 4, var2 = (4+4+16)/2 = 12, cov = (4+0+8)/2 = 6
  EXPECT_DOUBLE_EQ(cov(0, 0), 40.0);
  EXPECT_DOUBLE_EQ(cov(1, 1), 120.0);
  EXPECT_DOUBLE_EQ(cov(0, 1), 60.0);
  EXPECT_THROW(sslr::scaled_covariance(reps.topRows(1), 10), sslr::Error);
}

TEST(Bootstrap, BitIdenticalAcrossRunsAndThreadCounts) {
  std::mt19937_64 gen(1);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30, 60, 2);
  const auto a = sslr::variance_bootstrap_pi(d, plan(64, 99), 1);
  const auto b = sslr::variance_bootstrap_pi(d, plan(64, 99), 1);
  const auto c = sslr::variance_bootstrap_pi(d, plan(64, 99), 4);
  EXPECT_EQ(a.av.values, b.av.values);
  EXPECT_EQ(a.av.values, c.av.values);
  EXPECT_EQ(a.delta_hat, c.delta_hat);
  EXPECT_EQ(*a.pi.with_intercept, *c.pi.with_intercept);
  const auto other_seed = sslr::variance_bootstrap_pi(d, plan(64, 100), 1);
  EXPECT_NE(a.av.values, other_seed.av.values);
}

TEST(Bootstrap, SchemesMatchTheirEstimators) {
  std::mt19937_64 gen(2);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 20, 20, 1);
  EXPECT_THROW(sslr::bootstrap_lse(d, plan(10, 1)), sslr::Error);
  EXPECT_THROW(sslr::bootstrap_pi(d, plan(10, 1, BootstrapScheme::PairsLabeledOnly)), sslr::Error);
  EXPECT_THROW(sslr::variance_bootstrap_pi(d, plan(10, 1, BootstrapScheme::PairsLabeledOnly)), sslr::Error);
  EXPECT_THROW(sslr::bootstrap_pi(d, plan(1, 1)), sslr::Error);
}

TEST(Bootstrap, PlainAndJointReplicatesAgree) {
  std::mt19937_64 gen(3);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 25, 50, 2);
  const auto vb = sslr::variance_bootstrap_pi(d, plan(40, 5));
  const auto pi = sslr::bootstrap_pi(d, plan(40, 5));
  const auto lse = sslr::bootstrap_lse(d, plan(40, 5, BootstrapScheme::PairsLabeledOnly));
  EXPECT_EQ(vb.pi.values, pi.values);
  EXPECT_EQ(vb.lse.values, lse.values);
  EXPECT_EQ(lse.method, sslr::CovMethod::BootstrapLSE);
  EXPECT_EQ(vb.av.method, sslr::CovMethod::VarianceBootstrapPI);
}

TEST(Bootstrap, NoUnlabeledRowsCollapsePiOntoLse) {
  std::mt19937_64 gen(4);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30, 0, 3);
  const auto lse = sslr::bootstrap_lse(d, plan(80, 8, BootstrapScheme::PairsLabeledOnly));
  const auto pi = sslr::bootstrap_pi(d, plan(80, 8));
  EXPECT_LT(max_rel_diff(pi.values, lse.values), 1e-8);
  const auto vb = sslr::variance_bootstrap_pi(d, plan(80, 8));
  EXPECT_LT(vb.delta_hat.cwiseAbs().maxCoeff(), 1e-8 * lse.values.cwiseAbs().maxCoeff());
  EXPECT_LT(max_rel_diff(vb.av.values, lse.values), 1e-8);
}

TEST(Bootstrap, NoiselessLinearDataGivesZeroMatrices) {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd lx = sslr::testing::random_matrix(gen, 20, 2);
  const Eigen::MatrixXd ux = sslr::testing::random_matrix(gen, 30, 2);
  const Eigen::VectorXd y = (lx * Eigen::Vector2d(1.0, -2.0)).array() + 0.5;
  const sslr::SemiDataset d(lx, y, ux, {});
  const auto vb = sslr::variance_bootstrap_pi(d, plan(30, 2));
  EXPECT_LT(vb.lse.values.cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_LT(vb.pi.values.cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_LT(vb.delta_hat.cwiseAbs().maxCoeff(), 1e-18);
  EXPECT_LT(vb.av.values.cwiseAbs().maxCoeff(), 1e-18);
}

TEST(Bootstrap, DeltaHatAndImprovementArePsd) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index p = 1 + trial % 4;
    const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30 + trial, 40, p);
    const auto vb = sslr::variance_bootstrap_pi(d, plan(50, 100 + trial));
    const double scale = std::max(1e-300, vb.delta_hat.cwiseAbs().maxCoeff());
    EXPECT_GE(sslr::min_eigenvalue(vb.delta_hat), -1e-10 * scale);
    EXPECT_GE(sslr::min_eigenvalue(vb.lse.values - vb.av.values), -1e-10 * scale);
  }
}

TEST(Bootstrap, SingularResamplesAreRedrawn) {
  Eigen::MatrixXd lx(6, 1);
  lx << 0, 0, 0, 0, 1, 2;
  Eigen::VectorXd y(6);
  y << 0.1, -0.2, 0.3, 0.0, 0.2, 2.0;
  Eigen::MatrixXd ux(4, 1);
  ux << 0.5, -0.5, 1.0, 2.0;
  const sslr::SemiDataset d(lx, y, ux, {});
  const auto reps = sslr::draw_replicates(d, plan(50, 3), true, true);
  EXPECT_GT(reps.redraws, 0);
  EXPECT_TRUE(reps.lse.allFinite());
  EXPECT_TRUE(reps.pi.allFinite());
}

TEST(Bootstrap, HopelessDataFailsWithEstimationError) {
  const sslr::SemiDataset d(Eigen::MatrixXd::Constant(6, 1, 2.0), Eigen::VectorXd::Ones(6), Eigen::MatrixXd(0, 1), {});
  try {
    sslr::draw_replicates(d, plan(5, 3), true, false);
    FAIL();
  } catch (const sslr::Error& e) {
    EXPECT_EQ(e.kind(), sslr::ErrorKind::Estimation);
  }
}

// Direct transcription of the parametric formulas from intercept-model
// residuals computed by an independent least-squares fit.
TEST(ParametricPi, MatchesFormulaTranscription) {
  Eigen::MatrixXd lx(10, 2);
  lx << 0.2, 1.1, -0.9, 0.3, 1.4, -0.6, 0.7, 0.8, -1.6, 0.1, 0.5, -1.2, 2.2, 0.4, -0.3, -0.9, 0.9, 1.7, -1.1, -0.2;
  Eigen::MatrixXd ux(6, 2);
  ux << 0.3, -0.4, -1.0, 1.0, 1.2, 0.6, 0.0, -1.5, -0.7, 0.2, 1.8, -0.1;
  Eigen::VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) y(i) = lx(i, 0) * lx(i, 0) - lx(i, 1) + std::cos(3.0 * i);
  const sslr::SemiDataset d(lx, y, ux, {});
  const auto lse = sslr::fit_lse(d);
  const auto pi = sslr::fit_pi(d);
  const auto sandwich = sslr::sandwich_cov_lse(lx, lse.residuals);
  const double nu = 10.0 / 16.0;

  Eigen::MatrixXd r(10, 2);
  const Eigen::MatrixXd full = d.full_x();
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto other = sslr::fit_least_squares(full.col(1 - j), full.col(j));
    const double ms = other.residuals.squaredNorm() / 16.0;
    const Eigen::VectorXd adj = other.residuals.head(10);
    Eigen::MatrixXd u(10, 3);
    u.col(0) = adj / ms;
    u.col(1) = lx.col(0).cwiseProduct(adj) / ms;
    u.col(2) = lx.col(1).cwiseProduct(adj) / ms;
    u.col(j + 1).array() -= 1.0;
    const Eigen::VectorXd w = y.cwiseProduct(adj) / ms;
    const auto fit = sslr::fit_least_squares(u, w);
    EXPECT_NEAR(fit.intercept, pi.beta(j), 1e-10 * std::abs(pi.beta(j)));
    r.col(j) = fit.residuals;
  }
  Eigen::Matrix2d c;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int i = 0; i < 10; ++i) s += r(i, a) * r(i, b);
      c(a, b) = s / 10.0;
    }
  const Eigen::MatrixXd& sw = sandwich.values;
  const auto av = sslr::av_parametric_pi(d, pi, sandwich);
  const Eigen::MatrixXd diff = sslr::parametric_difference(d, pi, sandwich);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double expected = a == b ? c(a, a) + nu * std::max(sw(a, a) - c(a, a), 0.0) : c(a, b) + nu * (sw(a, b) - c(a, b));
      EXPECT_NEAR(av.values(a, b), expected, 1e-10 * std::abs(expected) + 1e-14);
      const double expected_diff = (1.0 - nu) * (sw(a, b) - c(a, b));
      EXPECT_NEAR(diff(a, b), expected_diff, 1e-10 * std::abs(expected_diff) + 1e-14);
    }
}

TEST(ParametricPi, TelescopesToSandwichWithoutUnlabeledRows) {
  std::mt19937_64 gen(7);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 40, 0, 2);
  const auto lse = sslr::fit_lse(d);
  const auto pi = sslr::fit_pi(d);
  const auto sandwich = sslr::sandwich_cov_lse(d.labeled_x(), lse.residuals);
  const auto av = sslr::av_parametric_pi(d, pi, sandwich);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double c = pi.per_coordinate[j].intercept_model_residuals.squaredNorm() / 40.0;
    if (sandwich.values(j, j) >= c) {
      EXPECT_NEAR(av.values(j, j), sandwich.values(j, j), 1e-12 * sandwich.values(j, j));
    }
  }
  EXPECT_LT(sslr::parametric_difference(d, pi, sandwich).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ParametricPi, RequiresTheParametricSandwich) {
  std::mt19937_64 gen(8);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 20, 10, 1);
  const auto pi = sslr::fit_pi(d);
  const auto bs = sslr::bootstrap_lse(d, plan(10, 1, BootstrapScheme::PairsLabeledOnly));
  EXPECT_THROW(sslr::av_parametric_pi(d, pi, bs), sslr::Error);
}

}  // namespace
