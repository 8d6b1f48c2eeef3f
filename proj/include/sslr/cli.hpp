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

// Command-line front end. Commands:
//
//   fit       LSE / PI (and TI given --moments) with bootstrap standard errors
//   se        every covariance estimator side by side
//   simulate  ERR sweep over a grid file
//   toy       variance-estimator study on the quadratic toy model
//
// Exit codes: 0 success, 1 usage or configuration, 2 input data, 3 numerical.
// Reports are assembled in memory and written by temp-file + rename, so a
// failed run leaves no output behind. Each report embeds the resolved config.
//
// Needs CLI11 and nlohmann/json on the include path.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sslr/sslr.hpp"

namespace sslr::cli {

using Json = nlohmann::ordered_json;

inline constexpr std::uint64_t kDefaultSeed = 20260101;

struct RunConfig {
  std::string command;
  std::string labeled;
  std::string unlabeled;
  std::string label_col = "y";
  std::string moments;
  std::string grid;
  std::string out;
  std::string summary;
  std::string format = "json";
  int n_bs = kDefaultBootstrapReplicates;
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;

  // toy
  double alpha = 1.0;
  double beta = 1.0;
  Eigen::Index n = 250;
  Eigen::Index m = 1500;
  int reps = 1000;

  // simulate
  int max_reps = 2000;
  double target_se = 0.02;
  int batch_size = 100;
  bool with_ti = true;
  Eigen::Index ti_pool_factor = 500;
  bool allow_abs_sqrt = true;
};

inline Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  if (c.command == "fit" || c.command == "se") {
    j["labeled"] = c.labeled;
    j["unlabeled"] = c.unlabeled.empty() ? Json() : Json(c.unlabeled);
    j["label_col"] = c.label_col;
    j["moments"] = c.moments.empty() ? Json() : Json(c.moments);
    j["nbs"] = c.n_bs;
  } else if (c.command == "toy") {
    j["alpha"] = c.alpha;
    j["beta"] = c.beta;
    j["n"] = c.n;
    j["m"] = c.m;
    j["reps"] = c.reps;
    j["nbs"] = c.n_bs;
  } else if (c.command == "simulate") {
    j["grid"] = c.grid;
    j["max_reps"] = c.max_reps;
    j["target_se"] = c.target_se;
    j["batch_size"] = c.batch_size;
    j["ti"] = c.with_ti;
    j["ti_pool_factor"] = c.ti_pool_factor;
    j["allow_abs_sqrt"] = c.allow_abs_sqrt;
  }
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["format"] = c.format;
  j["out"] = c.out.empty() ? Json() : Json(c.out);
  return j;
}

/// A report: metadata (config, scalars, advisories) plus one table.
struct Report {
  Json meta;
  std::string table_key = "rows";
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  std::optional<Json> sidecar;  // written next to a CSV report
};

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(); }

inline Json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : Json(); }

inline std::string csv_field(const Json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_float()) return csv::format_real(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  const std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

inline std::string render_csv(const Report& r) {
  std::ostringstream out;
  out << "# " << r.meta.dump() << '\n';
  for (std::size_t c = 0; c < r.columns.size(); ++c) out << (c ? "," : "") << r.columns[c];
  out << '\n';
  for (const auto& row : r.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << csv_field(row[c]);
    out << '\n';
  }
  return out.str();
}

inline Json table_json(const Report& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json obj;
    for (std::size_t c = 0; c < row.size(); ++c) obj[r.columns[c]] = row[c];
    rows.push_back(std::move(obj));
  }
  return rows;
}

inline std::string render_json(const Report& r) {
  Json doc = r.meta;
  doc[r.table_key] = table_json(r);
  if (r.sidecar) doc["summary"] = *r.sidecar;
  return doc.dump(2) + "\n";
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()) + "-" +
         std::to_string(counter++);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorKind::Io, "cannot rename into '" + path.string() + "': " + ec.message());
  }
}

inline void emit(const Report& r, const RunConfig& c, std::ostream& out) {
  const bool csv_format = c.format == "csv";
  const std::string body = csv_format ? render_csv(r) : render_json(r);
  if (c.out.empty()) {
    out << body;
    if (csv_format && r.sidecar) out << "# summary: " << r.sidecar->dump() << '\n';
    return;
  }
  if (csv_format && r.sidecar) {
    Json side;
    side["config"] = r.meta["config"];
    side["summary"] = *r.sidecar;
    const std::string path = c.summary.empty() ? c.out + ".summary.json" : c.summary;
    const std::string side_body = side.dump(2) + "\n";
    write_atomically(c.out, body);
    write_atomically(path, side_body);
    return;
  }
  write_atomically(c.out, body);
}

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// {"columns": [...], "mean": [...], "second_moment": [[...]]}; when "columns"
/// is present the moments are reordered to the dataset's column order.
inline MomentSpec load_moments(const std::filesystem::path& path, const std::vector<std::string>& columns) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Schema, "cannot open moments file '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  const auto where = path.string();
  if (!doc.is_object() || !doc.contains("mean") || !doc.contains("second_moment")) {
    fail(ErrorKind::Schema, where + ": expected an object with \"mean\" and \"second_moment\"");
  }
  const auto p = static_cast<Eigen::Index>(columns.size());
  std::vector<std::size_t> order(columns.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  const auto& mean = doc["mean"];
  const auto& second = doc["second_moment"];
  if (!mean.is_array() || !second.is_array() || mean.size() != columns.size() || second.size() != columns.size()) {
    fail(ErrorKind::Schema, where + ": moments must have one entry per predictor (" + std::to_string(p) + ")");
  }
  if (doc.contains("columns")) {
    const auto& names = doc["columns"];
    if (!names.is_array() || names.size() != columns.size()) {
      fail(ErrorKind::Schema, where + ": \"columns\" must list the " + std::to_string(p) + " predictors");
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
      bool found = false;
      for (std::size_t s = 0; s < names.size(); ++s) {
        if (names[s].is_string() && names[s].get<std::string>() == columns[k]) {
          order[k] = s;
          found = true;
        }
      }
      if (!found) fail(ErrorKind::Schema, where + ": no moments for column '" + columns[k] + "'");
    }
  }
  Eigen::VectorXd mu(p);
  Eigen::MatrixXd s2(p, p);
  try {
    for (Eigen::Index a = 0; a < p; ++a) {
      mu(a) = mean.at(order[a]).get<double>();
      const auto& row = second.at(order[a]);
      if (!row.is_array() || row.size() != columns.size()) {
        fail(ErrorKind::Schema, where + ": second_moment must be " + std::to_string(p) + " x " + std::to_string(p));
      }
      for (Eigen::Index b = 0; b < p; ++b) s2(a, b) = row.at(order[b]).get<double>();
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Parse, where + ": " + e.what());
  }
  try {
    return MomentSpec(mu, s2);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Contract) fail(ErrorKind::Schema, where + ": " + e.what());
    throw;
  }
}

inline SemiDataset load_data(const RunConfig& c) {
  if (c.labeled.empty()) fail(ErrorKind::Configuration, c.command + " needs --labeled");
  std::optional<std::filesystem::path> unlabeled;
  if (!c.unlabeled.empty()) unlabeled = c.unlabeled;
  return load_csv(c.labeled, unlabeled, c.label_col);
}

inline double se_from(const CovMatrix& cov, Eigen::Index coefficient, Eigen::Index n) {
  // coefficient 0 is the intercept
  if (coefficient == 0) {
    const auto v = cov.intercept_standard_error(n);
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
  }
  return cov.slope_standard_errors(n)(coefficient - 1);
}

inline std::vector<std::string> coefficient_names(const SemiDataset& d) {
  std::vector<std::string> names{"(intercept)"};
  names.insert(names.end(), d.column_names().begin(), d.column_names().end());
  return names;
}

inline BootstrapPlan plan_for(const RunConfig& c) {
  return {c.n_bs, rng::derive_seed(c.seed, rng::tag_of("bootstrap")),
          BootstrapScheme::PairsLabeledPlusUnlabeled};
}

inline Json dataset_json(const SemiDataset& d) {
  Json j;
  j["n"] = d.n();
  j["m"] = d.m();
  j["p"] = d.p();
  j["columns"] = d.column_names();
  j["label"] = d.label_name();
  return j;
}

inline Json advisories_for(const SemiDataset& d) {
  Json a = Json::array();
  if (d.m() == 0) a.push_back("no unlabeled data supplied: PI coincides with the LSE");
  return a;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

inline Report cmd_fit(const RunConfig& c) {
  const SemiDataset d = load_data(c);
  if (c.n_bs < 2) fail(ErrorKind::Configuration, "--nbs must be at least 2");
  const FitResult lse = fit_lse(d);
  const SslFit pi = fit_pi(d, c.threads);
  std::optional<SslFit> ti;
  if (!c.moments.empty()) ti = fit_ti(d, load_moments(c.moments, d.column_names()), c.threads);
  const VarianceBootstrap vb = variance_bootstrap_pi(d, plan_for(c), c.threads);

  Report r;
  r.table_key = "coefficients";
  r.meta["config"] = to_json(c);
  r.meta["dataset"] = dataset_json(d);
  Json advisories = advisories_for(d);
  advisories.push_back("PI intercept SE is a pairs-bootstrap estimate; slope SEs use the variance bootstrap");

  std::optional<double> err_hat;
  try {
    err_hat = err_hat_pi(d, lse, vb.lse, vb.delta_hat);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateRisk) throw;
    advisories.push_back("ERR_hat_PI undefined: estimated LSE excess risk is not positive");
  }
  const RiskPlugins plug = risk_plugins(d, lse);
  Json risk;
  risk["err_hat_pi"] = number_or_null(err_hat);
  risk["first_term"] = plug.first_term;
  risk["prediction_error_difference"] = prediction_error_difference(plug.m_hat, vb.lse, vb.av, d.n());
  Json mpe;
  mpe["lse_pairs_bootstrap"] = number_or_null(mean_prediction_error(d, *vb.lse.with_intercept));
  mpe["pi_pairs_bootstrap"] = number_or_null(mean_prediction_error(d, *vb.pi.with_intercept));
  mpe["note"] = "diagnostic: averages over unlabeled rows using the full pairs-bootstrap covariance";
  risk["mean_prediction_error"] = mpe;
  r.meta["risk"] = risk;
  r.meta["bootstrap"] = {{"replicates", c.n_bs}, {"redraw_scheme", std::string(to_string(BootstrapScheme::PairsLabeledPlusUnlabeled))}};
  r.meta["advisories"] = advisories;

  r.columns = {"name", "beta_lse", "se_lse", "beta_pi", "se_pi", "se_pi_method", "se_ratio"};
  if (ti) r.columns.push_back("beta_ti");
  const auto names = coefficient_names(d);
  const Eigen::VectorXd b_lse = lse.coefficients();
  const Eigen::VectorXd b_pi = pi.coefficients();
  for (Eigen::Index k = 0; k <= d.p(); ++k) {
    const double se_l = se_from(vb.lse, k, d.n());
    const double se_p = k == 0 ? se_from(vb.pi, 0, d.n()) : se_from(vb.av, k, d.n());
    std::vector<Json> row{names[k],
                          b_lse(k),
                          number_or_null(se_l),
                          b_pi(k),
                          number_or_null(se_p),
                          k == 0 ? "pairs-bootstrap" : "variance-bootstrap",
                          number_or_null(se_l / se_p)};
    if (ti) row.push_back(ti->coefficients()(k));
    r.rows.push_back(std::move(row));
  }
  return r;
}

// ---------------------------------------------------------------------------
// se
// ---------------------------------------------------------------------------

inline Report cmd_se(const RunConfig& c) {
  const SemiDataset d = load_data(c);
  if (c.n_bs < 2) fail(ErrorKind::Configuration, "--nbs must be at least 2");
  const FitResult lse = fit_lse(d);
  const SslFit pi = fit_pi(d, c.threads);
  const CovMatrix sandwich = sandwich_cov_lse(d.labeled_x(), lse.residuals);
  const CovMatrix parametric = av_parametric_pi(d, pi, sandwich);
  const VarianceBootstrap vb = variance_bootstrap_pi(d, plan_for(c), c.threads);

  Report r;
  r.table_key = "coefficients";
  r.meta["config"] = to_json(c);
  r.meta["dataset"] = dataset_json(d);
  Json advisories = advisories_for(d);
  advisories.push_back("parametric and variance-bootstrap PI estimates cover slopes only");
  r.meta["advisories"] = advisories;
  r.columns = {"name", "beta_lse", "se_lse_sandwich", "se_lse_bootstrap", "beta_pi", "se_pi_parametric",
               "se_pi_bootstrap", "se_pi_variance_bootstrap"};
  const auto names = coefficient_names(d);
  const Eigen::VectorXd b_lse = lse.coefficients();
  const Eigen::VectorXd b_pi = pi.coefficients();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index k = 0; k <= d.p(); ++k) {
    r.rows.push_back({names[k], b_lse(k), number_or_null(se_from(sandwich, k, d.n())),
                      number_or_null(se_from(vb.lse, k, d.n())), b_pi(k),
                      number_or_null(k == 0 ? nan : se_from(parametric, k, d.n())),
                      number_or_null(se_from(vb.pi, k, d.n())),
                      number_or_null(k == 0 ? nan : se_from(vb.av, k, d.n()))});
  }
  return r;
}

// ---------------------------------------------------------------------------
// toy
// ---------------------------------------------------------------------------

inline Json stat_json(const simlab::SummaryStat& s, bool with_negative) {
  Json j;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  if (with_negative) j["fraction_negative"] = s.fraction_negative;
  return j;
}

inline Report cmd_toy(const RunConfig& c) {
  if (c.reps < 2) fail(ErrorKind::Configuration, "--reps must be at least 2");
  if (c.n_bs < 2) fail(ErrorKind::Configuration, "--nbs must be at least 2");
  if (c.n < 4) fail(ErrorKind::Configuration, "--n must be at least 4");
  if (c.m < 0) fail(ErrorKind::Configuration, "--m must be non-negative");
  const simlab::ToySpec spec{c.alpha, c.beta, c.n, c.m};
  const simlab::VarianceStudy study = simlab::variance_study(spec, c.reps, c.n_bs, c.seed, c.threads);
  const auto truth = simlab::toy_asymptotics(c.alpha);

  using R = simlab::VarianceStudyReplicate;
  Report r;
  r.meta["config"] = to_json(c);
  r.meta["truth"] = {{"sigma2_lse", truth.sigma2_lse},
                     {"sigma2_ti", truth.sigma2_ti},
                     {"sigma2_diff", truth.sigma2_diff},
                     {"nu", study.nu()},
                     {"av_pi", study.true_variance()},
                     {"av_lse_minus_av_pi", study.true_difference()}};
  r.meta["beta_pi"] = stat_json(study.stat(&R::beta_pi), false);
  r.meta["beta_lse"] = stat_json(study.stat(&R::beta_lse), false);
  r.columns = {"quantity", "estimator", "mean", "sd", "fraction_negative", "truth"};
  const auto add = [&](const char* quantity, const char* estimator, double R::*field, double truth_value) {
    const auto s = study.stat(field);
    r.rows.push_back({quantity, estimator, s.mean, s.sd, s.fraction_negative, truth_value});
  };
  add("variance", "parametric", &R::var_parametric, study.true_variance());
  add("variance", "bootstrap", &R::var_bootstrap, study.true_variance());
  add("variance", "variance_bootstrap", &R::var_vbs, study.true_variance());
  add("difference", "parametric", &R::diff_parametric, study.true_difference());
  add("difference", "bootstrap", &R::diff_bootstrap, study.true_difference());
  add("difference", "variance_bootstrap", &R::diff_vbs, study.true_difference());
  return r;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline Json summary_json(const simlab::SweepTable& table) {
  Json groups = Json::array();
  for (const auto& g : table.summary()) {
    Json j;
    j["p"] = g.p;
    j["n"] = g.n;
    j["cells"] = g.cells;
    j["pi"] = {{"cells", g.pi_cells},
               {"significantly_below_1", g.pi_below},
               {"significantly_above_1", g.pi_above},
               {"proportion_below_1", g.proportion(g.pi_below, g.pi_cells)},
               {"proportion_above_1", g.proportion(g.pi_above, g.pi_cells)}};
    if (g.ti_cells > 0) {
      j["ti"] = {{"cells", g.ti_cells},
                 {"significantly_below_1", g.ti_below},
                 {"significantly_above_1", g.ti_above},
                 {"proportion_below_1", g.proportion(g.ti_below, g.ti_cells)},
                 {"proportion_above_1", g.proportion(g.ti_above, g.ti_cells)}};
    }
    groups.push_back(std::move(j));
  }
  int failed = 0;
  for (const auto& row : table.rows) failed += !row.error.empty();
  Json s;
  s["rule"] = "significant when ERR + 2 SE < 1 (below) or ERR - 2 SE > 1 (above)";
  s["groups"] = groups;
  s["failed_cells"] = failed;
  return s;
}

inline Report cmd_simulate(const RunConfig& c) {
  if (c.grid.empty()) fail(ErrorKind::Configuration, "simulate needs --grid");
  if (c.max_reps < 2) fail(ErrorKind::Configuration, "--max-reps must be at least 2");
  if (!(c.target_se > 0.0)) fail(ErrorKind::Configuration, "--target-se must be positive");
  if (c.batch_size < 1) fail(ErrorKind::Configuration, "--batch must be at least 1");
  if (c.ti_pool_factor < 1) fail(ErrorKind::Configuration, "--ti-pool-factor must be at least 1");
  const auto grid = simlab::read_grid(c.grid, c.seed, c.allow_abs_sqrt);
  simlab::ErrOptions options;
  options.max_reps = c.max_reps;
  options.target_se = c.target_se;
  options.batch_size = c.batch_size;
  options.include_ti = c.with_ti;
  options.ti_pool_factor = c.ti_pool_factor;
  options.threads = c.threads;
  const simlab::SweepTable table = simlab::scenario_sweep(grid, options);

  Report r;
  r.table_key = "cells";
  r.meta["config"] = to_json(c);
  r.columns = {"cell",    "n",      "m_rule",     "m",          "p",          "x_law",          "error_law",
               "mean_shape", "test_size", "seed", "err_pi", "se_pi", "err_ti", "se_ti", "reps_used",
               "redraws", "mse_blf", "y_excess_kurtosis", "lse_excess_kurtosis", "flags", "error"};
  for (const auto& row : table.rows) {
    const auto& s = row.spec;
    std::string flags;
    const auto flag = [&](const char* f) { flags += (flags.empty() ? "" : ";") + std::string(f); };
    if (s.uses_abs_sqrt()) flag("sqrt_abs_x");
    Json err_pi, se_pi, err_ti, se_ti, reps, redraws, blf, yk, lk;
    if (row.result) {
      const auto& res = *row.result;
      if (res.pi) {
        err_pi = number_or_null(res.pi->err);
        se_pi = number_or_null(res.pi->se);
        if (res.pi->unstable) flag("pi_unstable_ratio");
      }
      if (res.ti) {
        err_ti = number_or_null(res.ti->err);
        se_ti = number_or_null(res.ti->se);
        if (res.ti->unstable) flag("ti_unstable_ratio");
      }
      reps = res.reps_used;
      redraws = res.redraws;
      blf = res.mse_blf;
      yk = res.y_excess_kurtosis;
      lk = res.lse_excess_kurtosis;
      if (res.reps_used >= c.max_reps) flag("max_reps_reached");
    } else {
      flag("failed");
    }
    r.rows.push_back({static_cast<std::int64_t>(row.cell), s.n, s.m_rule.to_string(), s.m(), s.p,
                      std::string(simlab::to_string(s.x_law)), std::string(simlab::to_string(s.error_law)),
                      std::string(simlab::to_string(s.mean_shape)), s.test_size, s.seed, err_pi, se_pi, err_ti,
                      se_ti, reps, redraws, blf, yk, lk, flags, row.error.empty() ? Json() : Json(row.error)});
  }
  r.sidecar = summary_json(table);
  return r;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration:
      return 1;
    case ErrorKind::Schema:
    case ErrorKind::Parse:
    case ErrorKind::EmptyData:
    case ErrorKind::Io:
      return 2;
    default:
      return 3;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"Semi-supervised linear regression: LSE, TI and PI estimators"};
  app.require_subcommand(1);

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
    sub->add_option("--threads", c.threads, "worker threads (0: SSLR_THREADS or all cores)")->capture_default_str();
    sub->add_option("--out", c.out, "output path (default: stdout)");
    sub->add_option("--format", c.format, "report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  };
  const auto add_data = [&](CLI::App* sub) {
    sub->add_option("--labeled", c.labeled, "CSV with predictors and the label")->required();
    sub->add_option("--unlabeled", c.unlabeled, "CSV with predictors only");
    sub->add_option("--label-col", c.label_col, "label column name")->capture_default_str();
    sub->add_option("--nbs", c.n_bs, "bootstrap replicates")->capture_default_str();
  };

  CLI::App* fit = app.add_subcommand("fit", "LSE and PI estimates with standard errors");
  add_data(fit);
  fit->add_option("--moments", c.moments, "JSON population moments of X (enables TI)");
  add_common(fit);

  CLI::App* se = app.add_subcommand("se", "all covariance estimators side by side");
  add_data(se);
  add_common(se);

  CLI::App* simulate = app.add_subcommand("simulate", "ERR sweep over a scenario grid");
  simulate->add_option("--grid", c.grid, "grid CSV")->required();
  simulate->add_option("--max-reps", c.max_reps, "replicate cap per cell")->capture_default_str();
  simulate->add_option("--target-se", c.target_se, "stop once every ERR SE is below this")->capture_default_str();
  simulate->add_option("--batch", c.batch_size, "replicates between stopping checks")->capture_default_str();
  simulate->add_option("--ti-pool-factor", c.ti_pool_factor, "TI pool size as a multiple of n")->capture_default_str();
  simulate->add_flag("!--no-ti", c.with_ti, "skip the TI column");
  simulate->add_flag("!--no-abs-sqrt", c.allow_abs_sqrt, "reject sqrt mean shapes on real-line X laws");
  simulate->add_option("--summary", c.summary, "summary JSON path for CSV output (default: OUT.summary.json)");
  add_common(simulate);

  CLI::App* toy = app.add_subcommand("toy", "variance-estimator study on the quadratic toy model");
  toy->add_option("--alpha", c.alpha, "weight of the quadratic term")->capture_default_str();
  toy->add_option("--beta", c.beta, "linear slope")->capture_default_str();
  toy->add_option("--n", c.n, "labeled sample size")->capture_default_str();
  toy->add_option("--m", c.m, "unlabeled sample size")->capture_default_str();
  toy->add_option("--reps", c.reps, "simulation replicates")->capture_default_str();
  toy->add_option("--nbs", c.n_bs, "bootstrap replicates")->capture_default_str();
  add_common(toy);

  std::vector<const char*> argv{"sslr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    c.threads = resolve_threads(c.threads);
    Report report;
    if (fit->parsed()) {
      c.command = "fit";
      report = cmd_fit(c);
    } else if (se->parsed()) {
      c.command = "se";
      report = cmd_se(c);
    } else if (simulate->parsed()) {
      c.command = "simulate";
      report = cmd_simulate(c);
    } else {
      c.command = "toy";
      report = cmd_toy(c);
    }
    emit(report, c, out);
    return 0;
  } catch (const Error& e) {
    err << "sslr: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "sslr: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace sslr::cli
