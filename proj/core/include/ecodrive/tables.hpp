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

#include <vector>

namespace ecodrive {

// Piecewise-linear lookup over sorted breakpoints, clamped at both ends.
class Table1D {
 public:
  explicit Table1D(double constant = 0.0);
  Table1D(std::vector<double> breakpoints, std::vector<double> values);

  double operator()(double x) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  bool is_constant() const { return values_.size() == 1; }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

// Bilinear lookup, row-major values[i * cols.size() + j], clamped.
class Table2D {
 public:
  explicit Table2D(double constant = 0.0);
  Table2D(std::vector<double> rows, std::vector<double> cols,
          std::vector<double> values);

  double operator()(double row, double col) const;

  const std::vector<double>& rows() const { return rows_; }
  const std::vector<double>& cols() const { return cols_; }
  const std::vector<double>& values() const { return values_; }
  bool is_constant() const { return values_.size() == 1; }

 private:
  std::vector<double> rows_;
  std::vector<double> cols_;
  std::vector<double> values_;
};

}  // namespace ecodrive
