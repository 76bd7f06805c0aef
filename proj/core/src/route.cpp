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

#include "ecodrive/route.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double ParseDouble(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": bad number '" + s + "'",
                     line);
  }
}

bool ParseBool(const std::string& s, int line) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError("line " + std::to_string(line) + ": bad stop flag '" + s + "'",
                   line);
}

// Yields (line number, cells) for every non-comment, non-blank row after the
// header, which must equal `header`.
template <typename F>
void ForEachRow(std::istream& in, const std::string& header, F&& f) {
  std::string line;
  int number = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++number;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    if (!seen_header) {
      if (trimmed != header) {
        throw ParseError("line " + std::to_string(number) +
                             ": expected header '" + header + "'",
                         number);
      }
      seen_header = true;
      continue;
    }
    f(number, SplitCsv(trimmed));
  }
  if (!seen_header) throw ParseError("missing header '" + header + "'", number);
}

}  // namespace

double RawRoute::length() const {
  if (points.size() < 2) return 0.0;
  return points.back().distance - points.front().distance;
}

RawRoute ParseRoute(std::istream& in, double speed_floor) {
  RawRoute raw;
  ForEachRow(in, "d_m,v_min_mps,v_max_mps,grade_rad,stop",
             [&](int line, const std::vector<std::string>& cells) {
               if (cells.size() != 5) {
                 throw ParseError("line " + std::to_string(line) +
                                      ": expected 5 columns",
                                  line);
               }
               RoutePoint p;
               p.distance = ParseDouble(cells[0], line);
               p.v_min = ParseDouble(cells[1], line);
               p.v_max = ParseDouble(cells[2], line);
               p.grade = ParseDouble(cells[3], line);
               p.stop = ParseBool(cells[4], line);
               const std::string where = "line " + std::to_string(line) + ": ";
               if (p.distance < 0.0) {
                 throw ValidationError(where + "negative distance");
               }
               if (!raw.points.empty() &&
                   !(p.distance > raw.points.back().distance)) {
                 throw ValidationError(where +
                                       "distance not strictly increasing");
               }
               if (std::abs(p.grade) >= std::numbers::pi / 2) {
                 throw ValidationError(where + "grade outside (-pi/2, pi/2)");
               }
               if (!p.stop) {
                 if (p.v_min > p.v_max) {
                   throw ValidationError(where + "v_min above v_max");
                 }
                 if (!(p.v_min > 0.0)) {
                   throw ValidationError(where + "v_min must be positive");
                 }
                 if (p.v_max < speed_floor) {
                   throw ValidationError(where + "v_max below speed floor");
                 }
               }
               raw.points.push_back(p);
             });
  if (raw.points.size() < 2) {
    throw ValidationError("route needs at least two points");
  }
  return raw;
}

RawRoute LoadRoute(const std::string& path, double speed_floor) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open route file '" + path + "'");
  return ParseRoute(in, speed_floor);
}

Route Resample(const RawRoute& raw, double stage_length, double speed_floor) {
  if (!(stage_length > 0.0)) {
    throw ValidationError("stage length must be positive");
  }
  if (raw.points.size() < 2) {
    throw ValidationError("route needs at least two points");
  }
  const double length = raw.length();
  if (stage_length > length) {
    throw ValidationError("stage length larger than route length");
  }
  const double origin = raw.points.front().distance;
  const int n = static_cast<int>(std::floor(length / stage_length + 1e-9)) + 1;
  // Slack so grid points that coincide with raw points pick them up.
  const double eps = 1e-9 * std::max(1.0, length);

  Route route;
  route.stage_length = stage_length;
  route.speed_floor = speed_floor;
  route.points.resize(static_cast<std::size_t>(n));
  std::size_t hold = 0;
  for (int k = 0; k < n; ++k) {
    const double d = origin + k * stage_length;
    while (hold + 1 < raw.points.size() &&
           raw.points[hold + 1].distance <= d + eps) {
      ++hold;
    }
    RoutePoint& p = route.points[static_cast<std::size_t>(k)];
    p.distance = d - origin;
    const RoutePoint& held = raw.points[hold];
    p.v_max = held.v_max;
    p.v_min = std::clamp(held.v_min, speed_floor, std::max(held.v_max, speed_floor));
    if (held.stop && held.v_max <= speed_floor && hold + 1 < raw.points.size()) {
      // A stop row without an envelope of its own borrows the next row's.
      const RoutePoint& next = raw.points[std::min(hold + 1, raw.points.size() - 1)];
      p.v_max = next.stop ? speed_floor : next.v_max;
      p.v_min = next.stop ? speed_floor
                          : std::clamp(next.v_min, speed_floor,
                                       std::max(next.v_max, speed_floor));
    }
    if (hold + 1 < raw.points.size() && raw.points[hold].distance < d - eps) {
      const RoutePoint& a = raw.points[hold];
      const RoutePoint& b = raw.points[hold + 1];
      const double t = (d - a.distance) / (b.distance - a.distance);
      p.grade = a.grade + t * (b.grade - a.grade);
    } else {
      p.grade = raw.points[hold].grade;
    }
    p.stop = false;
  }
  for (const RoutePoint& r : raw.points) {
    if (!r.stop) continue;
    const double s = (r.distance - origin) / stage_length;
    const int k = std::clamp(static_cast<int>(std::lround(s)), 0, n - 1);
    route.points[static_cast<std::size_t>(k)].stop = true;
  }
  route.points.front().stop = true;
  route.points.back().stop = true;
  for (RoutePoint& p : route.points) {
    if (p.stop) {
      p.v_min = speed_floor;
      p.v_max = speed_floor;
    }
  }
  return route;
}

RawRoute ToRaw(const Route& route) {
  RawRoute raw;
  raw.points = route.points;
  return raw;
}

std::string FormatRouteCsv(const RawRoute& raw) {
  std::ostringstream os;
  os.precision(17);
  os << "d_m,v_min_mps,v_max_mps,grade_rad,stop\n";
  for (const RoutePoint& p : raw.points) {
    os << p.distance << ',' << p.v_min << ',' << p.v_max << ',' << p.grade
       << ',' << (p.stop ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<SpeedCap> ParseSpeedCaps(std::istream& in) {
  std::vector<SpeedCap> caps;
  ForEachRow(in, "d_m,v_max_mps,activate_at_stage",
             [&](int line, const std::vector<std::string>& cells) {
               if (cells.size() != 3) {
                 throw ParseError("line " + std::to_string(line) +
                                      ": expected 3 columns",
                                  line);
               }
               SpeedCap cap;
               cap.distance = ParseDouble(cells[0], line);
               cap.v_max = ParseDouble(cells[1], line);
               const double stage = ParseDouble(cells[2], line);
               if (stage < 0 || stage != std::floor(stage)) {
                 throw ParseError("line " + std::to_string(line) +
                                      ": activate_at_stage must be a "
                                      "non-negative integer",
                                  line);
               }
               cap.activate_at_stage = static_cast<int>(stage);
               caps.push_back(cap);
             });
  return caps;
}

std::vector<SpeedCap> LoadSpeedCaps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open perturbation file '" + path + "'");
  return ParseSpeedCaps(in);
}

Route ApplySpeedCaps(const Route& route, const std::vector<SpeedCap>& caps,
                     int stage) {
  Route out = route;
  for (const SpeedCap& cap : caps) {
    if (cap.activate_at_stage > stage) continue;
    const double v_max = std::max(cap.v_max, route.speed_floor);
    for (RoutePoint& p : out.points) {
      if (p.stop || p.distance + 1e-9 < cap.distance) continue;
      p.v_max = std::min(p.v_max, v_max);
      p.v_min = std::min(p.v_min, p.v_max);
    }
  }
  return out;
}

}  // namespace ecodrive
