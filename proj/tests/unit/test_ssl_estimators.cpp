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

using sslr::testing::max_rel_diff;

TEST(InterceptModel, StandardizedSinglePredictor) {
  std::mt19937_64 gen(1);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 7, 3, 1);
  const auto data = sslr::build_intercept_model(d, 0, sslr::MomentSpec::standard_normal(1));
  const Eigen::ArrayXd x = d.labeled_x().col(0).array();
  EXPECT_LT((data.w.array() - x * d.labeled_y().array()).abs().maxCoeff(), 1e-14);
  EXPECT_LT((data.u.col(0).array() - x).abs().maxCoeff(), 1e-14);
  EXPECT_LT((data.u.col(1).array() - (x * x - 1.0)).abs().maxCoeff(), 1e-14);
  EXPECT_DOUBLE_EQ(data.mean_square, 1.0);
}

TEST(InterceptModel, GeneralSinglePredictor) {
  std::mt19937_64 gen(2);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 9, 0, 1);
  const double mu = 1.5;
  const double var = 2.0;
  Eigen::VectorXd mean(1);
  mean << mu;
  Eigen::MatrixXd second(1, 1);
  second << var + mu * mu;
  const auto data = sslr::build_intercept_model(d, 0, sslr::MomentSpec(mean, second));
  const Eigen::ArrayXd x = d.labeled_x().col(0).array();
  const Eigen::ArrayXd y = d.labeled_y().array();
  EXPECT_LT((data.w.array() - y * (x - mu) / var).abs().maxCoeff(), 1e-13);
  EXPECT_LT((data.u.col(0).array() - (x - mu) / var).abs().maxCoeff(), 1e-13);
  EXPECT_LT((data.u.col(1).array() - ((x - mu) * x / var - 1.0)).abs().maxCoeff(), 1e-13);
}

TEST(InterceptModel, TwoOrthonormalPredictorsHandProducts) {
  Eigen::MatrixXd x(5, 2);
  x << 0.5, -1.0, 1.5, 0.2, -0.3, 0.9, 2.0, -0.7, -1.1, 1.3;
  Eigen::VectorXd y(5);
  y << 1.0, 2.0, -1.0, 0.5, 3.0;
  const sslr::SemiDataset d(x, y, Eigen::MatrixXd(0, 2), {});
  const auto mom = sslr::MomentSpec::standard_normal(2);
  for (Eigen::Index j = 0; j < 2; ++j) {
    const auto data = sslr::build_intercept_model(d, j, mom);
    for (Eigen::Index i = 0; i < 5; ++i) {
      EXPECT_NEAR(data.w(i), y(i) * x(i, j), 1e-14);
      EXPECT_NEAR(data.u(i, 0), x(i, j), 1e-14);
      for (Eigen::Index jp = 0; jp < 2; ++jp) {
        EXPECT_NEAR(data.u(i, jp + 1), x(i, jp) * x(i, j) - (jp == j ? 1.0 : 0.0), 1e-14);
      }
    }
  }
}

TEST(FitTi, TenPointOracleRegression) {
  Eigen::MatrixXd x(10, 1);
  x << -1.3, 0.4, 2.1, -0.2, 0.9, -2.4, 1.1, 0.05, -0.6, 1.7;
  Eigen::VectorXd y(10);
  for (Eigen::Index i = 0; i < 10; ++i) y(i) = 0.3 + x(i, 0) + x(i, 0) * x(i, 0) + std::sin(7.0 * i);
  const sslr::SemiDataset d(x, y, Eigen::MatrixXd(0, 1), {"x"});
  const auto ti = sslr::fit_ti(d, sslr::MomentSpec::standard_normal(1));
  Eigen::MatrixXd u(10, 2);
  u.col(0) = x.col(0);
  u.col(1) = x.col(0).array().square() - 1.0;
  const auto oracle = sslr::fit_least_squares(u, x.col(0).cwiseProduct(y));
  EXPECT_NEAR(ti.beta(0), oracle.intercept, 1e-10 * std::abs(oracle.intercept));
  EXPECT_NEAR(ti.per_coordinate[0].a_hat, oracle.slopes(0), 1e-10 * std::abs(oracle.slopes(0)));
  EXPECT_NEAR(ti.intercept, y.mean() - ti.beta(0) * x.col(0).mean(), 1e-12);
  EXPECT_EQ(ti.estimator_tag, sslr::EstimatorTag::TI);
}

TEST(FitTiPi, NoiselessLinearDataRecoveredExactly) {
  std::mt19937_64 gen(6);
  const Eigen::MatrixXd lx = sslr::testing::random_matrix(gen, 25, 3);
  const Eigen::MatrixXd ux = sslr::testing::random_matrix(gen, 40, 3);
  Eigen::Vector3d beta(2.0, -1.0, 0.5);
  const Eigen::VectorXd y = (lx * beta).array() + 1.25;
  const sslr::SemiDataset d(lx, y, ux, {});
  for (const auto& fit : {sslr::fit_ti(d, sslr::MomentSpec::standard_normal(3)), sslr::fit_pi(d)}) {
    EXPECT_LT((fit.beta - beta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(fit.intercept, 1.25, 1e-10);
    for (const auto& c : fit.per_coordinate) EXPECT_LT(c.intercept_model_residuals.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FitPi, CollapsesToLseWithoutUnlabeledRows) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index p = 1 + trial % 5;
    const Eigen::Index n = p + 3 + trial % 23;
    const sslr::SemiDataset d = sslr::testing::random_dataset(gen, n, 0, p);
    const auto pi = sslr::fit_pi(d);
    const auto lse = sslr::fit_lse(d);
    ASSERT_LT(max_rel_diff(pi.coefficients(), lse.coefficients()), 1e-8) << "trial " << trial;
    EXPECT_DOUBLE_EQ(pi.nu_hat, 1.0);
  }
}

TEST(FitPi, PooledIntercepCovariatesHaveFullSampleMeanZero) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index p = 1 + trial % 5;
    const sslr::SemiDataset d = sslr::testing::random_dataset(gen, p + 5 + trial, 3 * trial, p);
    const Eigen::MatrixXd full = d.full_x();
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto rule = sslr::empirical_partialling(full, j);
      const Eigen::MatrixXd u = sslr::intercept_covariates(full, rule.apply(full), j, rule.mean_square);
      const Eigen::VectorXd means = u.colwise().mean();
      EXPECT_LT(means.cwiseAbs().maxCoeff(), 1e-10) << "trial " << trial << " j " << j;
    }
  }
}

TEST(FitPi, InvariantToResponseShiftInSlopes) {
  std::mt19937_64 gen(9);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30, 50, 2);
  const sslr::SemiDataset shifted(d.labeled_x(), d.labeled_y().array() + 10.0, d.unlabeled_x(), {});
  const auto a = sslr::fit_pi(d);
  const auto b = sslr::fit_pi(shifted);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(b.intercept, a.intercept + 10.0, 1e-9);
}

TEST(FitPi, ColumnPermutationEquivariant) {
  std::mt19937_64 gen(10);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30, 50, 3);
  Eigen::PermutationMatrix<3> perm;
  perm.indices() << 2, 0, 1;
  const Eigen::MatrixXd lx = d.labeled_x() * perm;
  const Eigen::MatrixXd ux = d.unlabeled_x() * perm;
  const auto a = sslr::fit_pi(d);
  const auto b = sslr::fit_pi(sslr::SemiDataset(lx, d.labeled_y(), ux, {}));
  EXPECT_LT((perm.transpose() * a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitPi, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 gen(11);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 40, 60, 4);
  EXPECT_EQ(sslr::fit_pi(d, 1).beta, sslr::fit_pi(d, 4).beta);
}

TEST(FitPi, DiffersFromLseWithUnlabeledRowsOnNonlinearData) {
  std::mt19937_64 gen(12);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 40, 400, 1);
  EXPECT_GT(std::abs(sslr::fit_pi(d).beta(0) - sslr::fit_lse(d).slopes(0)), 1e-6);
  EXPECT_DOUBLE_EQ(sslr::fit_pi(d).nu_hat, 40.0 / 440.0);
}

TEST(FitTiPi, Errors) {
  std::mt19937_64 gen(13);
  const sslr::SemiDataset small = sslr::testing::random_dataset(gen, 4, 10, 2);
  try {
    sslr::fit_pi(small);
    FAIL();
  } catch (const sslr::Error& e) {
    EXPECT_EQ(e.kind(), sslr::ErrorKind::Underdetermined);
  }
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 20, 10, 2);
  EXPECT_THROW(sslr::fit_ti(d, sslr::MomentSpec::standard_normal(3)), sslr::Error);
  EXPECT_THROW(sslr::build_intercept_model(d, 2, sslr::PooledEmpirical{}), sslr::Error);

  // x2 = 3 x1 on every row: the adjusted regressor vanishes.
  Eigen::MatrixXd lx = sslr::testing::random_matrix(gen, 12, 2);
  lx.col(1) = 3.0 * lx.col(0);
  const sslr::SemiDataset collinear(lx, Eigen::VectorXd::Ones(12), Eigen::MatrixXd(0, 2), {});
  try {
    sslr::fit_pi(collinear);
    FAIL();
  } catch (const sslr::Error& e) {
    EXPECT_TRUE(e.is_numerical());
  }
}

}  // namespace
