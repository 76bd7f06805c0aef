// Copyright 2026 The ecodrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ecodrive {

// Machine-readable error categories. The CLI prints these verbatim.
enum class ErrorCategory {
  kParse,
  kValidation,
  kInfeasibleControl,
  kBatteryPowerLimit,
  kNoFeasiblePath,
  kSimulationDivergence,
  kBracket,
  kSizeGuard,
  kComparisonRefused,
};

const char* ToString(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(ErrorCategory::kParse, what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

class InfeasibleControlError : public Error {
 public:
  InfeasibleControlError(const std::string& what, double bound)
      : Error(ErrorCategory::kInfeasibleControl, what), bound_(bound) {}
  // The limit that was violated.
  double bound() const { return bound_; }

 private:
  double bound_;
};

class BatteryPowerLimitError : public Error {
 public:
  BatteryPowerLimitError(double requested_w, double limit_w);
  double requested() const { return requested_; }
  double limit() const { return limit_; }

 private:
  double requested_;
  double limit_;
};

class NoFeasiblePathError : public Error {
 public:
  NoFeasiblePathError(const std::string& what, std::string tag = "no-feasible-path")
      : Error(ErrorCategory::kNoFeasiblePath, what), tag_(std::move(tag)) {}
  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
};

class SimulationDivergenceError : public Error {
 public:
  SimulationDivergenceError(int stage, const std::string& tag);
  int stage() const { return stage_; }
  const std::string& tag() const { return tag_; }

 private:
  int stage_;
  std::string tag_;
};

class BracketError : public Error {
 public:
  BracketError(double residual_lo, double residual_hi);
  double residual_lo() const { return residual_lo_; }
  double residual_hi() const { return residual_hi_; }

 private:
  double residual_lo_;
  double residual_hi_;
};

class SizeGuardError : public Error {
 public:
  explicit SizeGuardError(const std::string& what)
      : Error(ErrorCategory::kSizeGuard, what) {}
};

class ComparisonRefusedError : public Error {
 public:
  explicit ComparisonRefusedError(const std::string& what)
      : Error(ErrorCategory::kComparisonRefused, what) {}
};

}  // namespace ecodrive
