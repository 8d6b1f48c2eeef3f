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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sslr/error.hpp"
#include "sslr/linalg.hpp"

namespace sslr {

/// Labeled (X, y) rows plus unlabeled X rows over the same p predictors.
///
/// The labeled rows come first in the "full X sample" of n + m rows.
class SemiDataset {
 public:
  SemiDataset(Eigen::MatrixXd labeled_x, Eigen::VectorXd labeled_y, Eigen::MatrixXd unlabeled_x,
              std::vector<std::string> column_names, std::string label_name = "y")
      : labeled_x_(std::move(labeled_x)),
        labeled_y_(std::move(labeled_y)),
        unlabeled_x_(std::move(unlabeled_x)),
        column_names_(std::move(column_names)),
        label_name_(std::move(label_name)) {
    const Eigen::Index p = labeled_x_.cols();
    if (labeled_x_.rows() == 0) fail(ErrorKind::EmptyData, "dataset has no labeled rows");
    if (labeled_y_.size() != labeled_x_.rows()) {
      fail(ErrorKind::Contract, "labeled X has " + std::to_string(labeled_x_.rows()) +
                                    " rows but y has " + std::to_string(labeled_y_.size()));
    }
    if (unlabeled_x_.rows() == 0 && unlabeled_x_.cols() != p) unlabeled_x_.resize(0, p);
    if (unlabeled_x_.cols() != p) {
      fail(ErrorKind::Contract, "labeled and unlabeled blocks have different column counts");
    }
    if (column_names_.empty()) {
      for (Eigen::Index j = 0; j < p; ++j) column_names_.push_back("x" + std::to_string(j + 1));
    }
    if (static_cast<Eigen::Index>(column_names_.size()) != p) {
      fail(ErrorKind::Contract, "expected " + std::to_string(p) + " column names");
    }
    if (!labeled_x_.allFinite() || !labeled_y_.allFinite() || !unlabeled_x_.allFinite()) {
      fail(ErrorKind::Parse, "dataset contains non-finite values");
    }
  }

  Eigen::Index n() const { return labeled_x_.rows(); }
  Eigen::Index m() const { return unlabeled_x_.rows(); }
  Eigen::Index p() const { return labeled_x_.cols(); }

  const Eigen::MatrixXd& labeled_x() const { return labeled_x_; }
  const Eigen::VectorXd& labeled_y() const { return labeled_y_; }
  const Eigen::MatrixXd& unlabeled_x() const { return unlabeled_x_; }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::string& label_name() const { return label_name_; }

  /// Labeled rows stacked over unlabeled rows.
  Eigen::MatrixXd full_x() const {
    Eigen::MatrixXd full(n() + m(), p());
    full.topRows(n()) = labeled_x_;
    full.bottomRows(m()) = unlabeled_x_;
    return full;
  }

  /// n / (n + m)
  double labeled_fraction() const {
    return static_cast<double>(n()) / static_cast<double>(n() + m());
  }

  bool operator==(const SemiDataset& other) const {
    return labeled_x_ == other.labeled_x_ && labeled_y_ == other.labeled_y_ &&
           unlabeled_x_ == other.unlabeled_x_ && column_names_ == other.column_names_ &&
           label_name_ == other.label_name_;
  }

 private:
  Eigen::MatrixXd labeled_x_;
  Eigen::VectorXd labeled_y_;
  Eigen::MatrixXd unlabeled_x_;
  std::vector<std::string> column_names_;
  std::string label_name_;
};

/// First and second moments of X: E X and E X X^T.
class MomentSpec {
 public:
  MomentSpec(Eigen::VectorXd mean, Eigen::MatrixXd second_moment)
      : mean_(std::move(mean)), second_moment_(std::move(second_moment)) {
    const Eigen::Index p = mean_.size();
    if (p == 0) fail(ErrorKind::Contract, "moment spec needs at least one predictor");
    if (second_moment_.rows() != p || second_moment_.cols() != p) {
      fail(ErrorKind::Contract, "second moment must be " + std::to_string(p) + "x" +
                                    std::to_string(p));
    }
    if (!mean_.allFinite() || !second_moment_.allFinite()) {
      fail(ErrorKind::Contract, "moment spec contains non-finite values");
    }
    const double scale = std::max(1.0, second_moment_.cwiseAbs().maxCoeff());
    if ((second_moment_ - second_moment_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      fail(ErrorKind::Contract, "second moment matrix is not symmetric");
    }
    second_moment_ = symmetrized(second_moment_);
    const Eigen::MatrixXd cov = covariance();
    const Eigen::VectorXd eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(eig(0) > kRankTolerance * std::max(eig(p - 1), 0.0)) || !(eig(p - 1) > 0.0)) {
      fail(ErrorKind::RankDeficient, "covariance implied by the moment spec is not positive definite");
    }
  }

  /// Moments of p independent standard normal coordinates.
  static MomentSpec standard_normal(Eigen::Index p) {
    return {Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Identity(p, p)};
  }

  Eigen::Index p() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& second_moment() const { return second_moment_; }

  /// M = E X X^T - E X E X^T
  Eigen::MatrixXd covariance() const { return second_moment_ - mean_ * mean_.transpose(); }

  /// E(vecX vecX^T) for vecX = (1, X_1, ..., X_p).
  Eigen::MatrixXd augmented() const {
    const Eigen::Index p = mean_.size();
    Eigen::MatrixXd a(p + 1, p + 1);
    a(0, 0) = 1.0;
    a.block(0, 1, 1, p) = mean_.transpose();
    a.block(1, 0, p, 1) = mean_;
    a.bottomRightCorner(p, p) = second_moment_;
    return a;
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd second_moment_;
};

/// Mean and second moment over all n + m rows of X.
inline MomentSpec empirical_moments(const SemiDataset& d) {
  const Eigen::Index rows = d.n() + d.m();
  if (rows < 2) fail(ErrorKind::EmptyData, "empirical moments need at least two rows");
  const Eigen::MatrixXd full = d.full_x();

  std::vector<std::string> labels{"(intercept)"};
  labels.insert(labels.end(), d.column_names().begin(), d.column_names().end());
  // Singular covariance <=> the design (1, X) is rank deficient.
  LeastSquares check(with_intercept_column(full), labels);

  const double inv = 1.0 / static_cast<double>(rows);
  Eigen::VectorXd mean = full.colwise().sum().transpose() * inv;
  Eigen::MatrixXd second = (full.transpose() * full) * inv;
  return {std::move(mean), symmetrized(second)};
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based, per row
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.emplace_back(trim(field));
  return fields;
}

inline Table parse(std::istream& in, const std::string& source) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);  // UTF-8 BOM
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(table.header.size()) + " fields, found " +
                                 std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) fail(ErrorKind::Schema, source + ": missing header row");
  return table;
}

inline std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

inline std::string format_real(double value) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

inline Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Schema, "cannot open '" + path.string() + "'");
  return parse(in, path.string());
}

inline std::unordered_map<std::string, std::size_t> index_header(const Table& table,
                                                                 const std::string& source) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!index.emplace(table.header[c], c).second) {
      fail(ErrorKind::Schema, source + ": duplicate column '" + table.header[c] + "'");
    }
  }
  return index;
}

inline double cell(const Table& table, std::size_t row, std::size_t col, const std::string& source) {
  const auto value = parse_real(table.rows[row][col]);
  if (!value) {
    fail(ErrorKind::Parse, source + ":" + std::to_string(table.line_numbers[row]) + ", column '" +
                               table.header[col] + "': expected a finite real, found '" +
                               table.rows[row][col] + "'");
  }
  return *value;
}

}  // namespace csv

/// Builds a dataset from already-parsed tables (see load_csv).
inline SemiDataset dataset_from_tables(const csv::Table& labeled, const std::string& labeled_source,
                                       const csv::Table* unlabeled,
                                       const std::string& unlabeled_source,
                                       const std::string& label_column) {
  const auto index = csv::index_header(labeled, labeled_source);
  const auto label_it = index.find(label_column);
  if (label_it == index.end()) {
    fail(ErrorKind::Schema, labeled_source + ": label column '" + label_column + "' not found");
  }
  const std::size_t label_col = label_it->second;

  std::vector<std::string> names;
  std::vector<std::size_t> predictor_cols;
  for (std::size_t c = 0; c < labeled.header.size(); ++c) {
    if (c == label_col) continue;
    names.push_back(labeled.header[c]);
    predictor_cols.push_back(c);
  }
  if (names.empty()) fail(ErrorKind::Schema, labeled_source + ": no predictor columns");
  const auto p = static_cast<Eigen::Index>(names.size());

  // Rows with an empty label are unlabeled.
  std::vector<std::size_t> labeled_rows;
  std::vector<std::size_t> unlabeled_rows;
  for (std::size_t r = 0; r < labeled.rows.size(); ++r) {
    (csv::trim(labeled.rows[r][label_col]).empty() ? unlabeled_rows : labeled_rows).push_back(r);
  }

  std::vector<std::size_t> extern_cols;
  std::size_t extern_rows = 0;
  if (unlabeled != nullptr) {
    const auto uindex = csv::index_header(*unlabeled, unlabeled_source);
    for (const auto& name : names) {
      const auto it = uindex.find(name);
      if (it == uindex.end()) {
        fail(ErrorKind::Schema, unlabeled_source + ": predictor column '" + name + "' not found");
      }
      extern_cols.push_back(it->second);
    }
    extern_rows = unlabeled->rows.size();
  }

  if (labeled_rows.empty()) fail(ErrorKind::EmptyData, labeled_source + ": no labeled rows");

  const auto n = static_cast<Eigen::Index>(labeled_rows.size());
  const auto m = static_cast<Eigen::Index>(unlabeled_rows.size() + extern_rows);
  Eigen::MatrixXd lx(n, p);
  Eigen::VectorXd ly(n);
  Eigen::MatrixXd ux(m, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = labeled_rows[i];
    for (Eigen::Index j = 0; j < p; ++j) lx(i, j) = csv::cell(labeled, r, predictor_cols[j], labeled_source);
    ly(i) = csv::cell(labeled, r, label_col, labeled_source);
  }
  Eigen::Index u = 0;
  for (const std::size_t r : unlabeled_rows) {
    for (Eigen::Index j = 0; j < p; ++j) ux(u, j) = csv::cell(labeled, r, predictor_cols[j], labeled_source);
    ++u;
  }
  for (std::size_t r = 0; r < extern_rows; ++r) {
    for (Eigen::Index j = 0; j < p; ++j) ux(u, j) = csv::cell(*unlabeled, r, extern_cols[j], unlabeled_source);
    ++u;
  }
  return {std::move(lx), std::move(ly), std::move(ux), std::move(names), label_column};
}

/// Reads a labeled CSV (rows with an empty label cell count as unlabeled) and
/// optionally a second CSV of unlabeled rows matched by column name.
inline SemiDataset load_csv(const std::filesystem::path& labeled_path,
                            const std::optional<std::filesystem::path>& unlabeled_path,
                            const std::string& label_column) {
  const csv::Table labeled = csv::read_file(labeled_path);
  if (!unlabeled_path) return dataset_from_tables(labeled, labeled_path.string(), nullptr, "", label_column);
  const csv::Table unlabeled = csv::read_file(*unlabeled_path);
  return dataset_from_tables(labeled, labeled_path.string(), &unlabeled, unlabeled_path->string(),
                             label_column);
}

/// Single-file layout: predictors then the label; unlabeled rows leave the label empty.
inline void write_csv(std::ostream& out, const SemiDataset& d) {
  for (const auto& name : d.column_names()) out << name << ',';
  out << d.label_name() << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) out << csv::format_real(d.labeled_x()(i, j)) << ',';
    out << csv::format_real(d.labeled_y()(i)) << '\n';
  }
  for (Eigen::Index i = 0; i < d.m(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) out << csv::format_real(d.unlabeled_x()(i, j)) << ',';
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const SemiDataset& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_csv(out, d);
}

}  // namespace sslr
