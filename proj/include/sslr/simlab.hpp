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

// Monte Carlo laboratory: the quadratic toy model, the scenario grid, and
// test-set excess-risk-ratio (ERR) estimation.
//
// Every draw comes from a Philox substream addressed by (seed, replicate,
// lane), so results do not depend on thread count or scheduling.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sslr/dataset.hpp"
#include "sslr/error.hpp"
#include "sslr/linalg.hpp"
#include "sslr/linreg.hpp"
#include "sslr/parallel.hpp"
#include "sslr/rng.hpp"
#include "sslr/ssl_estimators.hpp"
#include "sslr/variance.hpp"

namespace sslr::simlab {

// ---------------------------------------------------------------------------
// Toy model  Y = alpha X^2 + beta X + eps,  X, eps iid N(0, 1)
// ---------------------------------------------------------------------------

struct ToyAsymptotics {
  double sigma2_lse = 0.0;
  double sigma2_ti = 0.0;
  double sigma2_diff = 0.0;

  double sigma2_pi(double nu) const { return sigma2_ti + nu * sigma2_diff; }
  /// AV(LSE) - AV(PI)
  double difference(double nu) const { return (1.0 - nu) * sigma2_diff; }
};

constexpr ToyAsymptotics toy_asymptotics(double alpha) {
  const double a2 = alpha * alpha;
  return {10.0 * a2 + 1.0, 6.0 * a2 + 1.0, 4.0 * a2};
}

/// Limit of the excess-risk ratio (method vs LSE) in the toy model, where M = 1
/// and the intercept term equals 2 alpha^2 + 1.
constexpr double toy_err_limit(double alpha, double sigma2_method) {
  const double base = 2.0 * alpha * alpha + 1.0;
  return (base + sigma2_method) / (base + toy_asymptotics(alpha).sigma2_lse);
}

struct ToySpec {
  double alpha = 1.0;
  double beta = 1.0;
  Eigen::Index n = 250;
  Eigen::Index m = 1500;
};

// ---------------------------------------------------------------------------
// Data-generating laws
// ---------------------------------------------------------------------------

enum class XLaw { Gaussian, Lognormal, Exponential, CubedGaussian };
enum class ErrorLaw { Gaussian, HeteroskedasticExp };
enum class MeanShape { Linear, Exp, Cube, Sqrt };

constexpr std::string_view to_string(XLaw law) {
  switch (law) {
    case XLaw::Gaussian: return "gaussian";
    case XLaw::Lognormal: return "lognormal";
    case XLaw::Exponential: return "exponential";
    case XLaw::CubedGaussian: return "cubed_gaussian";
  }
  return "unknown";
}

constexpr std::string_view to_string(ErrorLaw law) {
  return law == ErrorLaw::Gaussian ? "gaussian" : "hetero_exp";
}

constexpr std::string_view to_string(MeanShape shape) {
  switch (shape) {
    case MeanShape::Linear: return "linear";
    case MeanShape::Exp: return "exp";
    case MeanShape::Cube: return "cube";
    case MeanShape::Sqrt: return "sqrt";
  }
  return "unknown";
}

constexpr bool has_nonnegative_support(XLaw law) {
  return law == XLaw::Lognormal || law == XLaw::Exponential;
}

/// Joint law of (X, Y): iid coordinates of X, Y = mean(X) + noise.
struct Population {
  Eigen::Index p = 1;
  XLaw x_law = XLaw::Gaussian;
  ErrorLaw error_law = ErrorLaw::Gaussian;
  std::function<double(const double* x, Eigen::Index p)> mean;
};

inline Population toy_population(double alpha, double beta) {
  Population pop;
  pop.mean = [alpha, beta](const double* x, Eigen::Index) { return alpha * x[0] * x[0] + beta * x[0]; };
  return pop;
}

namespace detail {

inline double draw_coordinate(XLaw law, rng::Stream& stream) {
  switch (law) {
    case XLaw::Gaussian: return std::normal_distribution<double>()(stream);
    case XLaw::Lognormal: return std::exp(std::normal_distribution<double>()(stream));
    case XLaw::Exponential: return std::exponential_distribution<double>(1.0)(stream);
    case XLaw::CubedGaussian: {
      const double z = std::normal_distribution<double>()(stream);
      return z * z * z;
    }
  }
  return 0.0;
}

}  // namespace detail

inline Eigen::MatrixXd draw_x(const Population& pop, Eigen::Index rows, rng::Stream& stream) {
  Eigen::MatrixXd x(rows, pop.p);
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < pop.p; ++j) {
      if (pop.x_law == XLaw::Gaussian) {
        x(i, j) = normal(stream);
      } else {
        x(i, j) = detail::draw_coordinate(pop.x_law, stream);
      }
    }
  }
  return x;
}

inline Eigen::VectorXd draw_y(const Population& pop, const Eigen::MatrixXd& x, rng::Stream& stream) {
  Eigen::VectorXd y(x.rows());
  std::vector<double> row(static_cast<std::size_t>(pop.p));
  std::normal_distribution<double> normal;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < pop.p; ++j) row[j] = x(i, j);
    double noise = normal(stream);
    if (pop.error_law == ErrorLaw::HeteroskedasticExp) noise *= std::exp(x.row(i).norm());
    y(i) = pop.mean(row.data(), pop.p) + noise;
  }
  return y;
}

namespace detail {

// Lanes within a replicate substream.
inline constexpr std::uint32_t kLanesPerAttempt = 4;
inline constexpr std::uint32_t kLabeledX = 0;
inline constexpr std::uint32_t kLabeledNoise = 1;
inline constexpr std::uint32_t kUnlabeled = 2;
inline constexpr std::uint32_t kExtraPool = 3;

inline std::uint32_t lane(int attempt, std::uint32_t which) {
  return static_cast<std::uint32_t>(attempt) * kLanesPerAttempt + which;
}

inline std::vector<std::string> default_names(Eigen::Index p) {
  if (p == 1) return {"x"};
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace detail

/// A training draw: labeled rows and the unlabeled block for each pool size asked for.
struct TrainingDraw {
  Eigen::MatrixXd labeled_x;
  Eigen::VectorXd labeled_y;
  Eigen::MatrixXd unlabeled_x;
};

/// Training data for one replicate. The first `m` pooled rows come from one
/// lane; rows beyond that (up to `pool`) from another, so a larger pool
/// extends rather than replaces the smaller one.
inline TrainingDraw draw_training(const Population& pop, Eigen::Index n, Eigen::Index m,
                                  std::uint64_t seed, std::uint64_t replicate, int attempt = 0,
                                  Eigen::Index pool = -1) {
  if (pool < 0) pool = m;
  TrainingDraw out;
  rng::Stream x_stream(seed, replicate, detail::lane(attempt, detail::kLabeledX));
  rng::Stream noise_stream(seed, replicate, detail::lane(attempt, detail::kLabeledNoise));
  out.labeled_x = draw_x(pop, n, x_stream);
  out.labeled_y = draw_y(pop, out.labeled_x, noise_stream);
  rng::Stream u_stream(seed, replicate, detail::lane(attempt, detail::kUnlabeled));
  const Eigen::Index first = std::min(m, pool);
  out.unlabeled_x.resize(pool, pop.p);
  out.unlabeled_x.topRows(first) = draw_x(pop, first, u_stream);
  if (pool > first) {
    rng::Stream extra(seed, replicate, detail::lane(attempt, detail::kExtraPool));
    out.unlabeled_x.bottomRows(pool - first) = draw_x(pop, pool - first, extra);
  }
  return out;
}

/// n labeled rows from the toy model and m unlabeled X rows.
inline SemiDataset generate_toy(const ToySpec& spec, std::uint64_t seed) {
  if (spec.n < 4) fail(ErrorKind::Configuration, "toy model needs n >= 4");
  if (spec.m < 0) fail(ErrorKind::Configuration, "toy model needs m >= 0");
  auto draw = draw_training(toy_population(spec.alpha, spec.beta), spec.n, spec.m, seed, 0);
  return {std::move(draw.labeled_x), std::move(draw.labeled_y), std::move(draw.unlabeled_x), {"x"}, "y"};
}

// ---------------------------------------------------------------------------
// Scenario grid
// ---------------------------------------------------------------------------

struct MRule {
  enum class Kind { EqualN, TwiceN, Fixed };
  Kind kind = Kind::TwiceN;
  Eigen::Index fixed = 0;

  Eigen::Index resolve(Eigen::Index n) const {
    switch (kind) {
      case Kind::EqualN: return n;
      case Kind::TwiceN: return 2 * n;
      case Kind::Fixed: return fixed;
    }
    return n;
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::EqualN: return "n";
      case Kind::TwiceN: return "2n";
      case Kind::Fixed: return std::to_string(fixed);
    }
    return "?";
  }
};

inline constexpr Eigen::Index kDefaultTestSize = 100000;

struct ScenarioSpec {
  Eigen::Index n = 100;
  MRule m_rule;
  Eigen::Index p = 1;
  XLaw x_law = XLaw::Gaussian;
  ErrorLaw error_law = ErrorLaw::Gaussian;
  MeanShape mean_shape = MeanShape::Linear;
  Eigen::Index test_size = kDefaultTestSize;
  std::uint64_t seed = 0;
  /// Sqrt on a real-line X law means sqrt(|x|); when false such cells are rejected.
  bool allow_abs_sqrt = true;

  Eigen::Index m() const { return m_rule.resolve(n); }

  /// True when the mean shape is sqrt(|x|) rather than sqrt(x).
  bool uses_abs_sqrt() const {
    return mean_shape == MeanShape::Sqrt && !has_nonnegative_support(x_law);
  }

  std::string label() const {
    std::string s = "n=" + std::to_string(n) + " m=" + m_rule.to_string() + " p=" + std::to_string(p) +
                    " x=" + std::string(simlab::to_string(x_law)) +
                    " err=" + std::string(simlab::to_string(error_law)) +
                    " mean=" + std::string(simlab::to_string(mean_shape));
    if (uses_abs_sqrt()) s += "(|x|)";
    return s;
  }
};

inline void validate(const ScenarioSpec& spec) {
  if (spec.p < 1) fail(ErrorKind::Configuration, "p must be at least 1");
  if (spec.n < spec.p + 3) {
    fail(ErrorKind::Configuration, "n must be at least p + 3 (" + spec.label() + ")");
  }
  if (spec.m() < 0) fail(ErrorKind::Configuration, "m must be non-negative");
  if (spec.test_size < spec.p + 2) fail(ErrorKind::Configuration, "test set too small");
  if (spec.uses_abs_sqrt() && !spec.allow_abs_sqrt) {
    fail(ErrorKind::Configuration, "sqrt mean requires a non-negative X law unless the |x| convention is allowed (" +
                                       spec.label() + ")");
  }
}

inline double mean_component(MeanShape shape, double x) {
  switch (shape) {
    case MeanShape::Linear: return x;
    case MeanShape::Exp: return std::exp(x);
    case MeanShape::Cube: return x * x * x;
    case MeanShape::Sqrt: return std::sqrt(std::abs(x));
  }
  return 0.0;
}

/// Y = sum_j f(X_j) + eps.
inline Population scenario_population(const ScenarioSpec& spec) {
  validate(spec);
  Population pop;
  pop.p = spec.p;
  pop.x_law = spec.x_law;
  pop.error_law = spec.error_law;
  pop.mean = [shape = spec.mean_shape](const double* x, Eigen::Index p) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) total += mean_component(shape, x[j]);
    return total;
  };
  return pop;
}

struct TestSet {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

inline TestSet draw_test(const Population& pop, Eigen::Index size, std::uint64_t seed) {
  const std::uint64_t test_seed = rng::derive_seed(seed, rng::tag_of("test-set"));
  rng::Stream x_stream(test_seed, 0, 0);
  rng::Stream y_stream(test_seed, 0, 1);
  TestSet test;
  test.x = draw_x(pop, size, x_stream);
  test.y = draw_y(pop, test.x, y_stream);
  return test;
}

struct ScenarioDraw {
  SemiDataset train;
  TestSet test;
};

inline ScenarioDraw generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  const Population pop = scenario_population(spec);
  auto draw = draw_training(pop, spec.n, spec.m(), rng::derive_seed(seed, rng::tag_of("train")), 0);
  return {SemiDataset(std::move(draw.labeled_x), std::move(draw.labeled_y), std::move(draw.unlabeled_x),
                      detail::default_names(spec.p)),
          draw_test(pop, spec.test_size, seed)};
}

// ---------------------------------------------------------------------------
// Test-set excess risk
// ---------------------------------------------------------------------------

/// Test-set MSE of linear predictors relative to the test set's own least
/// squares fit (the best linear fit, BLF). Because the BLF residuals are
/// orthogonal to (1, X), MSE(theta) - MSE_BLF = (theta - theta_BLF)^T G
/// (theta - theta_BLF) exactly, with G the test Gram matrix / N.
class TestEvaluator {
 public:
  explicit TestEvaluator(const TestSet& test) {
    const Eigen::MatrixXd z = with_intercept_column(test.x);
    const LeastSquares ls(z);
    theta_blf_ = ls.solve(test.y);
    const auto size = static_cast<double>(test.x.rows());
    gram_ = symmetrized(z.transpose() * z / size);
    mse_blf_ = (test.y - z * theta_blf_).squaredNorm() / size;
    const double y_mean = test.y.mean();
    const Eigen::ArrayXd yc = test.y.array() - y_mean;
    const double var = yc.square().mean();
    y_excess_kurtosis_ = var > 0.0 ? yc.pow(4).mean() / (var * var) - 3.0 : 0.0;
  }

  double excess(const Eigen::VectorXd& theta) const {
    const Eigen::VectorXd d = theta - theta_blf_;
    return d.dot(gram_ * d);
  }

  double mse_blf() const { return mse_blf_; }
  double y_excess_kurtosis() const { return y_excess_kurtosis_; }
  const Eigen::VectorXd& theta_blf() const { return theta_blf_; }

 private:
  Eigen::VectorXd theta_blf_;
  Eigen::MatrixXd gram_;
  double mse_blf_ = 0.0;
  double y_excess_kurtosis_ = 0.0;
};

struct ErrEstimate {
  double err = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  bool unstable = false;

  bool significantly_below_one() const { return !unstable && err + 2.0 * se < 1.0; }
  bool significantly_above_one() const { return !unstable && err - 2.0 * se > 1.0; }
};

/// Ratio of means with a delta-method standard error from per-replicate pairs.
inline ErrEstimate ratio_estimate(const std::vector<double>& method_excess,
                                  const std::vector<double>& lse_excess, double scale) {
  ErrEstimate out;
  const auto count = method_excess.size();
  if (count < 2) {
    out.unstable = true;
    return out;
  }
  const auto r = static_cast<double>(count);
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mean_a += method_excess[i];
    mean_b += lse_excess[i];
  }
  mean_a /= r;
  mean_b /= r;
  if (!(mean_b > 1e-14 * std::max(scale, 1e-300)) || !std::isfinite(mean_a)) {
    out.unstable = true;
    return out;
  }
  double saa = 0.0;
  double sab = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double da = method_excess[i] - mean_a;
    const double db = lse_excess[i] - mean_b;
    saa += da * da;
    sab += da * db;
    sbb += db * db;
  }
  saa /= r - 1.0;
  sab /= r - 1.0;
  sbb /= r - 1.0;
  out.err = mean_a / mean_b;
  const double var = (saa - 2.0 * out.err * sab + out.err * out.err * sbb) / (r * mean_b * mean_b);
  out.se = std::sqrt(std::max(var, 0.0));
  out.unstable = !std::isfinite(out.err) || !std::isfinite(out.se);
  return out;
}

inline double excess_kurtosis(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(values.size());
  m4 /= static_cast<double>(values.size());
  return m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

struct ErrOptions {
  int max_reps = 2000;
  double target_se = 0.02;
  int batch_size = 100;
  bool include_pi = true;
  bool include_ti = true;
  /// TI is realized as PI with an unlabeled pool of ti_pool_factor * n rows.
  Eigen::Index ti_pool_factor = 500;
  int threads = 1;
};

struct ErrResult {
  std::optional<ErrEstimate> pi;
  std::optional<ErrEstimate> ti;
  int reps_used = 0;
  int redraws = 0;
  double mse_blf = 0.0;
  double mean_excess_lse = 0.0;
  double y_excess_kurtosis = 0.0;
  double lse_excess_kurtosis = 0.0;
};

/// Repeats: draw a training set, fit LSE / PI / TI, score each on the fixed
/// test set. Stops after the first batch at which every requested ERR has a
/// standard error below target_se, or at max_reps. Inputs are checked in
/// whole batches, so the stopping point is independent of the thread count.
inline ErrResult estimate_errs(const Population& pop, Eigen::Index n, Eigen::Index m,
                               const TestSet& test, std::uint64_t seed, const ErrOptions& options) {
  require(options.max_reps >= 2, "ERR estimation needs max_reps >= 2");
  require(options.include_pi || options.include_ti, "no method requested");
  require(n >= pop.p + 3, "n must be at least p + 3");
  const TestEvaluator evaluator(test);
  const std::uint64_t train_seed = rng::derive_seed(seed, rng::tag_of("train"));
  const Eigen::Index ti_pool = std::max(options.ti_pool_factor * n, m);
  const auto names = detail::default_names(pop.p);

  std::vector<double> lse_ex;
  std::vector<double> pi_ex;
  std::vector<double> ti_ex;
  ErrResult out;
  out.mse_blf = evaluator.mse_blf();
  out.y_excess_kurtosis = evaluator.y_excess_kurtosis();

  const int batch = std::max(1, std::min(options.batch_size, options.max_reps));
  int done = 0;
  while (done < options.max_reps) {
    const int count = std::min(batch, options.max_reps - done);
    std::vector<double> b_lse(count), b_pi(count), b_ti(count);
    std::vector<int> b_redraws(count, 0);
    parallel_for(static_cast<std::size_t>(count), options.threads, [&](std::size_t k) {
      const auto replicate = static_cast<std::uint64_t>(done) + k;
      for (int attempt = 0;; ++attempt) {
        const Eigen::Index pool = options.include_ti ? ti_pool : m;
        TrainingDraw draw = draw_training(pop, n, m, train_seed, replicate, attempt, pool);
        try {
          const FitResult lse = fit_least_squares(draw.labeled_x, draw.labeled_y);
          b_lse[k] = evaluator.excess(lse.coefficients());
          if (options.include_pi) {
            const SemiDataset d(draw.labeled_x, draw.labeled_y, draw.unlabeled_x.topRows(m), names);
            b_pi[k] = evaluator.excess(fit_pi(d).coefficients());
          }
          if (options.include_ti) {
            const SemiDataset d(std::move(draw.labeled_x), std::move(draw.labeled_y),
                                std::move(draw.unlabeled_x), names);
            b_ti[k] = evaluator.excess(fit_pi(d).coefficients());
          }
          b_redraws[k] = attempt;
          return;
        } catch (const Error& e) {
          if (!e.is_numerical() || attempt + 1 >= kMaxRedraws) throw;
        }
      }
    });
    lse_ex.insert(lse_ex.end(), b_lse.begin(), b_lse.end());
    if (options.include_pi) pi_ex.insert(pi_ex.end(), b_pi.begin(), b_pi.end());
    if (options.include_ti) ti_ex.insert(ti_ex.end(), b_ti.begin(), b_ti.end());
    for (int r : b_redraws) out.redraws += r;
    done += count;

    bool converged = true;
    if (options.include_pi) {
      out.pi = ratio_estimate(pi_ex, lse_ex, out.mse_blf);
      converged = converged && !out.pi->unstable && out.pi->se < options.target_se;
    }
    if (options.include_ti) {
      out.ti = ratio_estimate(ti_ex, lse_ex, out.mse_blf);
      converged = converged && !out.ti->unstable && out.ti->se < options.target_se;
    }
    if (converged) break;
  }
  out.reps_used = done;
  double total = 0.0;
  for (double v : lse_ex) total += v;
  out.mean_excess_lse = total / static_cast<double>(lse_ex.size());
  out.lse_excess_kurtosis = excess_kurtosis(lse_ex);
  return out;
}

/// One method's ERR for a grid cell, with the test set drawn from spec.seed.
struct ErrSummary {
  double err = 0.0;
  double se = 0.0;
  int reps_used = 0;
  bool unstable = false;
};

inline ErrSummary estimate_err(const ScenarioSpec& spec, EstimatorTag method, int max_reps,
                               double target_se, int threads = 1) {
  require(method == EstimatorTag::PI || method == EstimatorTag::TI, "ERR compares PI or TI with the LSE");
  const Population pop = scenario_population(spec);
  ErrOptions options;
  options.max_reps = max_reps;
  options.target_se = target_se;
  options.include_pi = method == EstimatorTag::PI;
  options.include_ti = method == EstimatorTag::TI;
  options.threads = threads;
  const ErrResult result = estimate_errs(pop, spec.n, spec.m(), draw_test(pop, spec.test_size, spec.seed),
                                         spec.seed, options);
  const ErrEstimate& e = method == EstimatorTag::PI ? *result.pi : *result.ti;
  return {e.err, e.se, result.reps_used, e.unstable};
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  std::size_t cell = 0;
  ScenarioSpec spec;
  std::optional<ErrResult> result;
  std::string error;  // non-empty when the cell failed
};

struct SweepGroup {
  Eigen::Index p = 0;
  Eigen::Index n = 0;
  int cells = 0;
  int pi_cells = 0;
  int pi_below = 0;
  int pi_above = 0;
  int ti_cells = 0;
  int ti_below = 0;
  int ti_above = 0;

  double proportion(int count, int of) const { return of > 0 ? static_cast<double>(count) / of : 0.0; }
};

struct SweepTable {
  std::vector<SweepRow> rows;

  /// Table-2 style: per (p, n), the share of cells whose ERR is more than two
  /// standard errors below / above 1.
  std::vector<SweepGroup> summary() const {
    std::map<std::pair<Eigen::Index, Eigen::Index>, SweepGroup> groups;
    for (const auto& row : rows) {
      auto& g = groups[{row.spec.p, row.spec.n}];
      g.p = row.spec.p;
      g.n = row.spec.n;
      ++g.cells;
      if (!row.result) continue;
      if (row.result->pi) {
        ++g.pi_cells;
        g.pi_below += row.result->pi->significantly_below_one();
        g.pi_above += row.result->pi->significantly_above_one();
      }
      if (row.result->ti) {
        ++g.ti_cells;
        g.ti_below += row.result->ti->significantly_below_one();
        g.ti_above += row.result->ti->significantly_above_one();
      }
    }
    std::vector<SweepGroup> out;
    for (auto& [key, g] : groups) out.push_back(g);
    return out;
  }
};

/// Runs every cell (in parallel across cells); a failing cell is recorded, not fatal.
inline SweepTable scenario_sweep(const std::vector<ScenarioSpec>& grid, ErrOptions options) {
  require(!grid.empty(), "scenario grid is empty");
  SweepTable table;
  table.rows.resize(grid.size());
  const int threads = resolve_threads(options.threads);
  ErrOptions cell_options = options;
  cell_options.threads = grid.size() == 1 ? threads : 1;
  parallel_for(grid.size(), grid.size() == 1 ? 1 : threads, [&](std::size_t c) {
    SweepRow& row = table.rows[c];
    row.cell = c;
    row.spec = grid[c];
    try {
      const Population pop = scenario_population(row.spec);
      const TestSet test = draw_test(pop, row.spec.test_size, row.spec.seed);
      row.result = estimate_errs(pop, row.spec.n, row.spec.m(), test, row.spec.seed, cell_options);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  return table;
}

/// The full grid: 6 sample sizes x 2 pool rules x 2 dimensions x 4 X laws x
/// 2 error laws x 4 mean shapes = 768 cells. Seeds are derived per cell.
inline std::vector<ScenarioSpec> full_grid(std::uint64_t seed) {
  std::vector<ScenarioSpec> grid;
  for (Eigen::Index n : {12, 25, 50, 100, 250, 500}) {
    for (auto rule : {MRule::Kind::EqualN, MRule::Kind::TwiceN}) {
      for (Eigen::Index p : {1, 4}) {
        for (auto x : {XLaw::Gaussian, XLaw::Lognormal, XLaw::Exponential, XLaw::CubedGaussian}) {
          for (auto e : {ErrorLaw::Gaussian, ErrorLaw::HeteroskedasticExp}) {
            for (auto f : {MeanShape::Linear, MeanShape::Exp, MeanShape::Cube, MeanShape::Sqrt}) {
              ScenarioSpec spec;
              spec.n = n;
              spec.m_rule.kind = rule;
              spec.p = p;
              spec.x_law = x;
              spec.error_law = e;
              spec.mean_shape = f;
              spec.seed = rng::derive_seed(seed, grid.size());
              grid.push_back(spec);
            }
          }
        }
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Grid files
// ---------------------------------------------------------------------------
//
// CSV with header n,m,p,x_law,error_law,mean_shape and optional test_size and
// seed columns. m is "n", "2n" or a non-negative integer. Cells without a
// seed get derive_seed(base_seed, cell index).

namespace detail {

[[noreturn]] inline void grid_error(const std::string& where, const std::string& what) {
  fail(ErrorKind::Configuration, where + ": " + what);
}

inline std::int64_t grid_integer(std::string_view text, const std::string& where, const char* column) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    grid_error(where, std::string("column '") + column + "': expected an integer, found '" + std::string(text) + "'");
  }
  return value;
}

template <typename Enum, std::size_t N>
Enum grid_enum(std::string_view text, const std::array<Enum, N>& values, const std::string& where,
               const char* column) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  std::string allowed;
  for (Enum v : values) allowed += (allowed.empty() ? "" : "|") + std::string(to_string(v));
  grid_error(where, std::string("column '") + column + "': unknown value '" + std::string(text) +
                        "' (expected " + allowed + ")");
}

}  // namespace detail

inline MRule parse_m_rule(std::string_view text, const std::string& where = "m") {
  if (text == "n") return {MRule::Kind::EqualN, 0};
  if (text == "2n") return {MRule::Kind::TwiceN, 0};
  const auto value = detail::grid_integer(text, where, "m");
  if (value < 0) detail::grid_error(where, "column 'm': must be non-negative");
  return {MRule::Kind::Fixed, static_cast<Eigen::Index>(value)};
}

inline std::vector<ScenarioSpec> parse_grid(std::istream& in, const std::string& source,
                                            std::uint64_t base_seed, bool allow_abs_sqrt = true) {
  csv::Table table;
  try {
    table = csv::parse(in, source);
  } catch (const Error& e) {
    fail(ErrorKind::Configuration, e.what());
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!index.emplace(table.header[c], c).second) {
      detail::grid_error(source + ":1", "duplicate column '" + table.header[c] + "'");
    }
  }
  for (const char* name : {"n", "m", "p", "x_law", "error_law", "mean_shape"}) {
    if (!index.contains(name)) detail::grid_error(source + ":1", std::string("missing column '") + name + "'");
  }
  for (const auto& [name, c] : index) {
    static const std::array<std::string_view, 8> known{"n", "m", "p", "x_law", "error_law", "mean_shape",
                                                       "test_size", "seed"};
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      detail::grid_error(source + ":1", "unknown column '" + name + "'");
    }
  }
  if (table.rows.empty()) detail::grid_error(source, "grid has no cells");

  std::vector<ScenarioSpec> grid;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source + ":" + std::to_string(table.line_numbers[r]);
    const auto field = [&](const char* name) { return std::string_view(row[index.at(name)]); };
    ScenarioSpec spec;
    spec.n = detail::grid_integer(field("n"), where, "n");
    spec.m_rule = parse_m_rule(field("m"), where);
    spec.p = detail::grid_integer(field("p"), where, "p");
    spec.x_law = detail::grid_enum(field("x_law"),
                                   std::array{XLaw::Gaussian, XLaw::Lognormal, XLaw::Exponential,
                                              XLaw::CubedGaussian},
                                   where, "x_law");
    spec.error_law = detail::grid_enum(field("error_law"),
                                       std::array{ErrorLaw::Gaussian, ErrorLaw::HeteroskedasticExp}, where,
                                       "error_law");
    spec.mean_shape = detail::grid_enum(
        field("mean_shape"), std::array{MeanShape::Linear, MeanShape::Exp, MeanShape::Cube, MeanShape::Sqrt},
        where, "mean_shape");
    if (index.contains("test_size") && !field("test_size").empty()) {
      spec.test_size = detail::grid_integer(field("test_size"), where, "test_size");
    }
    spec.seed = rng::derive_seed(base_seed, r);
    if (index.contains("seed") && !field("seed").empty()) {
      std::uint64_t seed = 0;
      const auto text = field("seed");
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        detail::grid_error(where, "column 'seed': expected an unsigned integer, found '" + std::string(text) + "'");
      }
      spec.seed = seed;
    }
    spec.allow_abs_sqrt = allow_abs_sqrt;
    try {
      validate(spec);
    } catch (const Error& e) {
      detail::grid_error(where, e.what());
    }
    grid.push_back(spec);
  }
  return grid;
}

inline std::vector<ScenarioSpec> read_grid(const std::filesystem::path& path, std::uint64_t base_seed,
                                           bool allow_abs_sqrt = true) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Configuration, "cannot open grid file '" + path.string() + "'");
  return parse_grid(in, path.string(), base_seed, allow_abs_sqrt);
}

// ---------------------------------------------------------------------------
// Sampling-variance and variance-estimator studies on the toy model
// ---------------------------------------------------------------------------

/// n Var(estimate) across replicates, with its Monte Carlo standard error
/// sqrt((mu4 - var^2) / R) scaled by n.
struct ScaledVariance {
  double n_var = 0.0;
  double se = 0.0;
  double mean = 0.0;
};

inline ScaledVariance scaled_variance(const std::vector<double>& values, Eigen::Index n) {
  const auto r = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= r;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d2 = (v - mean) * (v - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  const double var = m2 / (r - 1.0);
  m4 /= r;
  const auto scale = static_cast<double>(n);
  return {scale * var, scale * std::sqrt(std::max(m4 - var * var, 0.0) / r), mean};
}

struct SamplingVariances {
  ScaledVariance lse;
  ScaledVariance ti;
  ScaledVariance pi;
};

/// Slope estimates over `reps` toy datasets; TI uses the exact N(0, 1) moments.
inline SamplingVariances toy_sampling_variances(const ToySpec& spec, int reps, std::uint64_t seed,
                                                int threads = 1) {
  require(reps >= 2, "need at least two replicates");
  const Population pop = toy_population(spec.alpha, spec.beta);
  const MomentSpec moments = MomentSpec::standard_normal(1);
  std::vector<double> lse(reps), ti(reps), pi(reps);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    auto draw = draw_training(pop, spec.n, spec.m, seed, r);
    const SemiDataset d(std::move(draw.labeled_x), std::move(draw.labeled_y), std::move(draw.unlabeled_x), {"x"});
    lse[r] = fit_lse(d).slopes(0);
    ti[r] = fit_ti(d, moments).beta(0);
    pi[r] = fit_pi(d).beta(0);
  });
  return {scaled_variance(lse, spec.n), scaled_variance(ti, spec.n), scaled_variance(pi, spec.n)};
}

struct SummaryStat {
  double mean = 0.0;
  double sd = 0.0;
  double fraction_negative = 0.0;
};

inline SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  const auto r = static_cast<double>(values.size());
  if (values.empty()) return s;
  int negative = 0;
  for (double v : values) {
    s.mean += v;
    negative += v < 0.0;
  }
  s.mean /= r;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
  s.fraction_negative = negative / r;
  return s;
}

/// Per-replicate output of the variance-estimator study (first slope only).
struct VarianceStudyReplicate {
  double beta_pi = 0.0;
  double beta_lse = 0.0;
  double var_bootstrap = 0.0;
  double var_parametric = 0.0;
  double var_vbs = 0.0;
  double diff_bootstrap = 0.0;   // BS(LSE) - BS(PI)
  double diff_parametric = 0.0;  // (1 - nu)(sandwich - Cov(remainder))
  double diff_vbs = 0.0;         // Delta hat
};

struct VarianceStudy {
  ToySpec spec;
  int reps = 0;
  int n_bs = 0;
  std::uint64_t seed = 0;
  std::vector<VarianceStudyReplicate> replicates;

  double nu() const { return static_cast<double>(spec.n) / static_cast<double>(spec.n + spec.m); }
  double true_variance() const { return toy_asymptotics(spec.alpha).sigma2_pi(nu()); }
  double true_difference() const { return toy_asymptotics(spec.alpha).difference(nu()); }

  template <typename Field>
  SummaryStat stat(Field field) const {
    std::vector<double> values;
    values.reserve(replicates.size());
    for (const auto& r : replicates) values.push_back(r.*field);
    return summarize(values);
  }
};

/// For each of `reps` toy datasets: PI, the parametric / bootstrap / variance
/// bootstrap estimates of AV(PI), and the three matching estimates of
/// AV(LSE) - AV(PI).
inline VarianceStudy variance_study(const ToySpec& spec, int reps, int n_bs, std::uint64_t seed,
                                    int threads = 1) {
  require(reps >= 1, "need at least one replicate");
  require(n_bs >= 2, "need at least two bootstrap replicates");
  const Population pop = toy_population(spec.alpha, spec.beta);
  VarianceStudy study{spec, reps, n_bs, seed, std::vector<VarianceStudyReplicate>(reps)};
  const std::uint64_t data_seed = rng::derive_seed(seed, rng::tag_of("toy-data"));
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    auto draw = draw_training(pop, spec.n, spec.m, data_seed, r);
    const SemiDataset d(std::move(draw.labeled_x), std::move(draw.labeled_y), std::move(draw.unlabeled_x), {"x"});
    const FitResult lse = fit_lse(d);
    const SslFit pi = fit_pi(d);
    const CovMatrix sandwich = sandwich_cov_lse(d.labeled_x(), lse.residuals);
    BootstrapPlan plan;
    plan.replicate_count = n_bs;
    plan.seed = rng::derive_seed(seed, r);
    plan.scheme = BootstrapScheme::PairsLabeledPlusUnlabeled;
    const VarianceBootstrap vb = variance_bootstrap_pi(d, plan);

    auto& out = study.replicates[r];
    out.beta_pi = pi.beta(0);
    out.beta_lse = lse.slopes(0);
    out.var_bootstrap = vb.pi.values(0, 0);
    out.var_parametric = av_parametric_pi(d, pi, sandwich).values(0, 0);
    out.var_vbs = vb.av.values(0, 0);
    out.diff_bootstrap = vb.lse.values(0, 0) - vb.pi.values(0, 0);
    out.diff_parametric = parametric_difference(d, pi, sandwich)(0, 0);
    out.diff_vbs = vb.delta_hat(0, 0);
  });
  return study;
}

}  // namespace sslr::simlab
