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

#include "ecodrive/tables.hpp"

#include <algorithm>
#include <utility>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

void CheckAxis(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) {
    throw ValidationError(std::string("table axis '") + name + "' is empty");
  }
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw ValidationError(std::string("table axis '") + name +
                            "' is not strictly increasing");
    }
  }
}

// Returns (lower index, fraction) with clamping at both ends.
std::pair<std::size_t, double> Locate(const std::vector<double>& axis,
                                      double x) {
  if (axis.size() == 1 || x <= axis.front()) return {0, 0.0};
  if (x >= axis.back()) return {axis.size() - 2, 1.0};
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  std::size_t lo = hi - 1;
  return {lo, (x - axis[lo]) / (axis[hi] - axis[lo])};
}

}  // namespace

Table1D::Table1D(double constant) : breakpoints_{0.0}, values_{constant} {}

Table1D::Table1D(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  CheckAxis(breakpoints_, "breakpoints");
  if (values_.size() != breakpoints_.size()) {
    throw ValidationError("table values do not match breakpoints");
  }
}

double Table1D::operator()(double x) const {
  if (values_.size() == 1) return values_[0];
  auto [lo, t] = Locate(breakpoints_, x);
  if (t == 0.0) return values_[lo];
  if (t == 1.0) return values_[lo + 1];
  return values_[lo] + t * (values_[lo + 1] - values_[lo]);
}

Table2D::Table2D(double constant)
    : rows_{0.0}, cols_{0.0}, values_{constant} {}

Table2D::Table2D(std::vector<double> rows, std::vector<double> cols,
                 std::vector<double> values)
    : rows_(std::move(rows)), cols_(std::move(cols)), values_(std::move(values)) {
  CheckAxis(rows_, "rows");
  CheckAxis(cols_, "cols");
  if (values_.size() != rows_.size() * cols_.size()) {
    throw ValidationError("table values do not match rows x cols");
  }
}

double Table2D::operator()(double row, double col) const {
  if (values_.size() == 1) return values_[0];
  const std::size_t nc = cols_.size();
  auto [i, s] = Locate(rows_, row);
  auto [j, t] = Locate(cols_, col);
  auto at = [&](std::size_t a, std::size_t b) {
    a = std::min(a, rows_.size() - 1);
    b = std::min(b, nc - 1);
    return values_[a * nc + b];
  };
  const double v00 = at(i, j);
  const double v01 = at(i, j + 1);
  const double v10 = at(i + 1, j);
  const double v11 = at(i + 1, j + 1);
  return (1 - s) * ((1 - t) * v00 + t * v01) + s * ((1 - t) * v10 + t * v11);
}

}  // namespace ecodrive
