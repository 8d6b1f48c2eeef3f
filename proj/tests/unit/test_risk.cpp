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

sslr::CovMatrix cov_of(const Eigen::MatrixXd& m) { return sslr::make_cov(m, sslr::CovMethod::BootstrapLSE); }

TEST(AsymptoticRisk, ZeroCovarianceLeavesFirstTerm) {
  const auto r = sslr::asymptotic_risk(2.5, Eigen::MatrixXd::Identity(2, 2), cov_of(Eigen::MatrixXd::Zero(2, 2)));
  EXPECT_EQ(r.total, 2.5);
  EXPECT_EQ(r.trace_term, 0.0);
}

TEST(AsymptoticRisk, TraceArithmetic) {
  const auto r = sslr::asymptotic_risk(1.0, Eigen::MatrixXd::Identity(2, 2), cov_of(Eigen::Vector2d(2, 3).asDiagonal()));
  EXPECT_DOUBLE_EQ(r.trace_term, 5.0);
  EXPECT_DOUBLE_EQ(r.total, 6.0);
}

TEST(AsymptoticRisk, ToyModelRatioLimit) {
  // M = Var(X) = 1, first term 2 alpha^2 + 1 at alpha = 1.
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(1, 1);
  const auto toy = sslr::simlab::toy_asymptotics(1.0);
  const auto ti = sslr::asymptotic_risk(3.0, m, cov_of(Eigen::MatrixXd::Constant(1, 1, toy.sigma2_ti)));
  const auto lse = sslr::asymptotic_risk(3.0, m, cov_of(Eigen::MatrixXd::Constant(1, 1, toy.sigma2_lse)));
  EXPECT_NEAR(ti.total / lse.total, 10.0 / 14.0, 1e-15);
  EXPECT_NEAR(sslr::simlab::toy_err_limit(1.0, toy.sigma2_ti), 10.0 / 14.0, 1e-15);
}

TEST(PredictionErrorDifference, Arithmetic) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::MatrixXd s = Eigen::Vector2d(7, 5).asDiagonal();
  EXPECT_EQ(sslr::prediction_error_difference(m, s, s, 3), 0.0);
  const Eigen::MatrixXd s2 = Eigen::Vector2d(3, 3).asDiagonal();
  EXPECT_DOUBLE_EQ(sslr::prediction_error_difference(m, s, s2, 3), 2.0);
  EXPECT_THROW(sslr::prediction_error_difference(m, s, Eigen::MatrixXd::Zero(3, 3), 3), sslr::Error);
}

TEST(ErrHat, ZeroDeltaGivesExactlyOne) {
  std::mt19937_64 gen(1);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 30, 40, 2);
  const auto lse = sslr::fit_lse(d);
  const auto bs = cov_of(Eigen::Matrix2d::Identity() * 3.0);
  EXPECT_EQ(sslr::err_hat_pi(d, lse, bs, Eigen::MatrixXd::Zero(2, 2)), 1.0);
}

TEST(ErrHat, MatchesHandAssembledPlugins) {
  std::mt19937_64 gen(2);
  const sslr::SemiDataset d = sslr::testing::random_dataset(gen, 25, 15, 1);
  const auto lse = sslr::fit_lse(d);
  const double xb = d.labeled_x().col(0).mean();
  const double yb = d.labeled_y().mean();
  double s2y = 0.0, cyx = 0.0, mh = 0.0;
  for (Eigen::Index i = 0; i < 25; ++i) {
    s2y += (d.labeled_y()(i) - yb) * (d.labeled_y()(i) - yb) / 25.0;
    cyx += (d.labeled_y()(i) - yb) * (d.labeled_x()(i, 0) - xb) / 25.0;
  }
  const Eigen::MatrixXd full = d.full_x();
  for (Eigen::Index i = 0; i < 40; ++i) mh += (full(i, 0) - xb) * (full(i, 0) - xb) / 40.0;
  const double b = lse.slopes(0);
  const double first = s2y + b * b * mh - 2.0 * b * cyx;
  const double bs = 4.0;
  const double delta = 1.5;
  const double expected = (first + mh * (bs - delta)) / (first + mh * bs);
  const double got = sslr::err_hat_pi(d, lse, cov_of(Eigen::MatrixXd::Constant(1, 1, bs)),
                                      Eigen::MatrixXd::Constant(1, 1, delta));
  EXPECT_NEAR(got, expected, 1e-12);
}

TEST(ErrHat, DegenerateDenominatorRaises) {
  // Noiseless, m = 0: both plug-in risks vanish.
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  const Eigen::VectorXd y = 2.0 * x.col(0);
  const sslr::SemiDataset d(x, y, Eigen::MatrixXd(0, 1), {});
  try {
    sslr::err_hat_pi(d, sslr::fit_lse(d), cov_of(Eigen::MatrixXd::Zero(1, 1)), Eigen::MatrixXd::Zero(1, 1));
    FAIL();
  } catch (const sslr::Error& e) {
    EXPECT_EQ(e.kind(), sslr::ErrorKind::DegenerateRisk);
  }
}

TEST(ErrHat, ToyModelBelowOneInMostReplicates) {
  int below = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto d = sslr::simlab::generate_toy({1.0, 1.0, 250, 1500}, 1000 + r);
    const auto lse = sslr::fit_lse(d);
    const auto vb = sslr::variance_bootstrap_pi(d, {200, static_cast<std::uint64_t>(r), sslr::BootstrapScheme::PairsLabeledPlusUnlabeled});
    below += sslr::err_hat_pi(d, lse, vb.lse, vb.delta_hat) < 1.0;
  }
  EXPECT_GE(below, static_cast<int>(0.95 * reps));
}

TEST(MeanPredictionError, QuadraticFormAverage) {
  Eigen::MatrixXd lx(4, 1);
  lx << 0, 1, 2, 3;
  Eigen::MatrixXd ux(2, 1);
  ux << 1, -1;
  const sslr::SemiDataset d(lx, Eigen::VectorXd::Ones(4), ux, {});
  Eigen::Matrix2d sigma;
  sigma << 2, 0.5, 0.5, 3;
  // (1, 1): 2 + 1 + 3 = 6; (1, -1): 2 - 1 + 3 = 4; mean 5, over n = 4
  EXPECT_DOUBLE_EQ(*sslr::mean_prediction_error(d, sigma), 5.0 / 4.0);
  const sslr::SemiDataset none(lx, Eigen::VectorXd::Ones(4), Eigen::MatrixXd(0, 1), {});
  EXPECT_FALSE(sslr::mean_prediction_error(none, sigma));
}

}  // namespace
