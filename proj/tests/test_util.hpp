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

// Shared helpers for the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#ifndef ECODRIVE_DATA_DIR
#define ECODRIVE_DATA_DIR "data"
#endif

namespace ecodrive::testing {

// |a - b| <= tol * max(|a|, |b|), with exact equality covering zeros.
inline bool RelEq(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline std::string DataPath(const std::string& rel) {
  return std::string(ECODRIVE_DATA_DIR) + "/" + rel;
}

}  // namespace ecodrive::testing
