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

#include <istream>
#include <string>
#include <vector>

namespace ecodrive {

// A stopped vehicle is modelled as creeping at this speed so that the
// per-stage travel time stays finite.
inline constexpr double kSpeedFloor = 1.0;  // m/s
inline constexpr double kDefaultStageLength = 10.0;  // m

struct RoutePoint {
  double distance = 0.0;  // m from origin
  double v_min = 0.0;     // m/s
  double v_max = 0.0;     // m/s
  double grade = 0.0;     // rad
  bool stop = false;
};

// Validated points as read from disk, strictly increasing in distance.
struct RawRoute {
  std::vector<RoutePoint> points;
  double length() const;
};

// Uniform spatial grid. Point k sits at distance k * stage_length.
struct Route {
  std::vector<RoutePoint> points;
  double stage_length = kDefaultStageLength;
  double speed_floor = kSpeedFloor;

  int size() const { return static_cast<int>(points.size()); }
  int stage_count() const { return size() - 1; }
  const RoutePoint& operator[](int k) const {
    return points[static_cast<std::size_t>(k)];
  }
};

// Route CSV: header `d_m,v_min_mps,v_max_mps,grade_rad,stop`, `#` comments.
RawRoute ParseRoute(std::istream& in, double speed_floor = kSpeedFloor);
RawRoute LoadRoute(const std::string& path, double speed_floor = kSpeedFloor);

Route Resample(const RawRoute& raw, double stage_length,
               double speed_floor = kSpeedFloor);
RawRoute ToRaw(const Route& route);

std::string FormatRouteCsv(const RawRoute& raw);

// Speed cap revealed en route: from `distance` onward v_max is limited to
// `v_max`; the controller learns about it when it reaches `activate_at_stage`.
struct SpeedCap {
  double distance = 0.0;
  double v_max = 0.0;
  int activate_at_stage = 0;
};

// CSV `d_m,v_max_mps,activate_at_stage`.
std::vector<SpeedCap> ParseSpeedCaps(std::istream& in);
std::vector<SpeedCap> LoadSpeedCaps(const std::string& path);

// Applies every cap already active at `stage`. Stop points are untouched.
Route ApplySpeedCaps(const Route& route, const std::vector<SpeedCap>& caps,
                     int stage);

}  // namespace ecodrive
