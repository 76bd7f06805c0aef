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

#include "ecodrive/errors.hpp"

#include <sstream>

namespace ecodrive {

const char* ToString(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kParse:
      return "parse-error";
    case ErrorCategory::kValidation:
      return "validation-error";
    case ErrorCategory::kInfeasibleControl:
      return "infeasible-control";
    case ErrorCategory::kBatteryPowerLimit:
      return "battery-power-limit";
    case ErrorCategory::kNoFeasiblePath:
      return "no-feasible-path";
    case ErrorCategory::kSimulationDivergence:
      return "simulation-divergence";
    case ErrorCategory::kBracket:
      return "bracket-error";
    case ErrorCategory::kSizeGuard:
      return "size-guard";
    case ErrorCategory::kComparisonRefused:
      return "comparison-refused";
  }
  return "unknown";
}

namespace {

std::string BatteryMessage(double requested, double limit) {
  std::ostringstream os;
  os << "battery power request " << requested << " W exceeds limit " << limit
     << " W";
  return os.str();
}

std::string DivergenceMessage(int stage, const std::string& tag) {
  std::ostringstream os;
  os << "simulation diverged at stage " << stage << " (" << tag << ")";
  return os.str();
}

std::string BracketMessage(double lo, double hi) {
  std::ostringstream os;
  os << "residual does not change sign over bracket: r(lo)=" << lo
     << ", r(hi)=" << hi;
  return os.str();
}

}  // namespace

BatteryPowerLimitError::BatteryPowerLimitError(double requested_w,
                                               double limit_w)
    : Error(ErrorCategory::kBatteryPowerLimit,
            BatteryMessage(requested_w, limit_w)),
      requested_(requested_w),
      limit_(limit_w) {}

SimulationDivergenceError::SimulationDivergenceError(int stage,
                                                     const std::string& tag)
    : Error(ErrorCategory::kSimulationDivergence, DivergenceMessage(stage, tag)),
      stage_(stage),
      tag_(tag) {}

BracketError::BracketError(double residual_lo, double residual_hi)
    : Error(ErrorCategory::kBracket, BracketMessage(residual_lo, residual_hi)),
      residual_lo_(residual_lo),
      residual_hi_(residual_hi) {}

}  // namespace ecodrive
