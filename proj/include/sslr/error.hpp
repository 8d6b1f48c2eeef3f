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

#include <stdexcept>
#include <string>
#include <string_view>

namespace sslr {

enum class ErrorKind {
  // input data
  Schema,
  Parse,
  EmptyData,
  Io,
  // numerics
  RankDeficient,
  Underdetermined,
  DegenerateRegressor,
  Estimation,
  DegenerateRisk,
  // caller mistakes
  Contract,
  Configuration,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::EmptyData: return "empty-data";
    case ErrorKind::Io: return "io";
    case ErrorKind::RankDeficient: return "rank-deficient";
    case ErrorKind::Underdetermined: return "under-determined";
    case ErrorKind::DegenerateRegressor: return "degenerate-regressor";
    case ErrorKind::Estimation: return "estimation";
    case ErrorKind::DegenerateRisk: return "degenerate-risk";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Configuration: return "configuration";
  }
  return "unknown";
}

/// Every failure raised by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Numerical failures (singular designs and the like) as opposed to bad input.
  bool is_numerical() const noexcept {
    switch (kind_) {
      case ErrorKind::RankDeficient:
      case ErrorKind::Underdetermined:
      case ErrorKind::DegenerateRegressor:
      case ErrorKind::Estimation:
      case ErrorKind::DegenerateRisk:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::Contract, what);
}

}  // namespace sslr
