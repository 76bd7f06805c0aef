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

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/powertrain.hpp"
#include "json.hpp"

namespace ecodrive {

namespace {

using nlohmann::json;

double ReadNumber(const json& value, const std::string& key) {
  // "inf" is accepted so efficiency widths can flatten the surface.
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  if (!value.is_number()) {
    throw ValidationError("param '" + key + "' must be a number");
  }
  return value.get<double>();
}

std::vector<double> ReadArray(const json& value, const std::string& key) {
  if (!value.is_array()) {
    throw ValidationError("param '" + key + "' must be an array");
  }
  std::vector<double> out;
  for (const auto& v : value) out.push_back(ReadNumber(v, key));
  return out;
}

Table1D ReadTable1D(const json& value, const std::string& key) {
  if (value.is_number()) return Table1D(value.get<double>());
  if (!value.is_object() || !value.contains("breakpoints") ||
      !value.contains("values") || value.size() != 2) {
    throw ValidationError("param '" + key +
                          "' must be a number or {breakpoints, values}");
  }
  return Table1D(ReadArray(value["breakpoints"], key),
                 ReadArray(value["values"], key));
}

Table2D ReadTable2D(const json& value, const std::string& key) {
  if (value.is_number()) return Table2D(value.get<double>());
  if (!value.is_object() || !value.contains("rows") || !value.contains("cols") ||
      !value.contains("values") || value.size() != 3) {
    throw ValidationError("param '" + key +
                          "' must be a number or {rows, cols, values}");
  }
  std::vector<double> flat;
  for (const auto& row : value["values"]) {
    auto r = ReadArray(row, key);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Table2D(ReadArray(value["rows"], key), ReadArray(value["cols"], key),
                 std::move(flat));
}

json WriteNumber(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return v;
}

json WriteTable1D(const Table1D& t) {
  if (t.is_constant()) return t.values()[0];
  return json{{"breakpoints", t.breakpoints()}, {"values", t.values()}};
}

json WriteTable2D(const Table2D& t) {
  if (t.is_constant()) return t.values()[0];
  json rows = json::array();
  const std::size_t nc = t.cols().size();
  for (std::size_t i = 0; i < t.rows().size(); ++i) {
    rows.push_back(std::vector<double>(t.values().begin() + i * nc,
                                       t.values().begin() + (i + 1) * nc));
  }
  return json{{"rows", t.rows()}, {"cols", t.cols()}, {"values", rows}};
}

struct Field {
  std::function<void(VehicleParams&, const json&, const std::string&)> read;
  std::function<json(const VehicleParams&)> write;
};

#define ECODRIVE_SCALAR(name, member)                                      \
  {                                                                        \
    name, Field {                                                          \
      [](VehicleParams& p, const json& v, const std::string& k) {          \
        p.member = ReadNumber(v, k);                                       \
      },                                                                   \
          [](const VehicleParams& p) { return WriteNumber(p.member); }     \
    }                                                                      \
  }

const std::map<std::string, Field>& Fields() {
  static const std::map<std::string, Field> fields = {
      ECODRIVE_SCALAR("mass", mass),
      ECODRIVE_SCALAR("drag_coefficient", drag_coefficient),
      ECODRIVE_SCALAR("frontal_area", frontal_area),
      ECODRIVE_SCALAR("air_density", air_density),
      ECODRIVE_SCALAR("wheel_radius", wheel_radius),
      ECODRIVE_SCALAR("gravity", gravity),
      ECODRIVE_SCALAR("brake_max_decel", brake_max_decel),
      ECODRIVE_SCALAR("final_drive", final_drive),
      ECODRIVE_SCALAR("converter_lock_speed", converter_lock_speed),
      ECODRIVE_SCALAR("converter_slip", converter_slip),
      ECODRIVE_SCALAR("belt_ratio", belt_ratio),
      ECODRIVE_SCALAR("bsg_max_torque", bsg_max_torque),
      ECODRIVE_SCALAR("bsg_min_torque", bsg_min_torque),
      ECODRIVE_SCALAR("bsg_max_power", bsg_max_power),
      ECODRIVE_SCALAR("internal_resistance", internal_resistance),
      ECODRIVE_SCALAR("nominal_capacity", nominal_capacity),
      ECODRIVE_SCALAR("bias_current", bias_current),
      ECODRIVE_SCALAR("fuel_lhv", fuel_lhv),
      ECODRIVE_SCALAR("engine_eta_peak", engine_efficiency.peak),
      ECODRIVE_SCALAR("engine_eta_torque_opt", engine_efficiency.torque_opt),
      ECODRIVE_SCALAR("engine_eta_speed_opt", engine_efficiency.speed_opt),
      ECODRIVE_SCALAR("engine_eta_torque_width", engine_efficiency.torque_width),
      ECODRIVE_SCALAR("engine_eta_speed_width", engine_efficiency.speed_width),
      ECODRIVE_SCALAR("engine_eta_floor", engine_efficiency.floor),
      ECODRIVE_SCALAR("idle_fuel_rate", idle_fuel_rate),
      ECODRIVE_SCALAR("idle_speed", idle_speed),
      ECODRIVE_SCALAR("stall_speed", stall_speed),
      ECODRIVE_SCALAR("engine_peak_torque", engine_peak_torque),
      ECODRIVE_SCALAR("engine_max_power", engine_max_power),
      ECODRIVE_SCALAR("engine_min_torque", engine_min_torque),
      {"gear_ratios",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.gear_ratios = ReadArray(v, k);
             },
             [](const VehicleParams& p) { return json(p.gear_ratios); }}},
      {"gear_upshift_speeds",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.gear_upshift_speeds = ReadArray(v, k);
             },
             [](const VehicleParams& p) {
               return json(p.gear_upshift_speeds);
             }}},
      {"rolling_coefficient",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.rolling_coefficient = ReadTable1D(v, k);
             },
             [](const VehicleParams& p) {
               return WriteTable1D(p.rolling_coefficient);
             }}},
      {"open_circuit_voltage",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.open_circuit_voltage = ReadTable1D(v, k);
             },
             [](const VehicleParams& p) {
               return WriteTable1D(p.open_circuit_voltage);
             }}},
      {"transmission_efficiency",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.transmission_efficiency = ReadTable2D(v, k);
             },
             [](const VehicleParams& p) {
               return WriteTable2D(p.transmission_efficiency);
             }}},
      {"bsg_efficiency",
       Field{[](VehicleParams& p, const json& v, const std::string& k) {
               p.bsg_efficiency = ReadTable2D(v, k);
             },
             [](const VehicleParams& p) {
               return WriteTable2D(p.bsg_efficiency);
             }}},
  };
  return fields;
}

#undef ECODRIVE_SCALAR

}  // namespace

VehicleParams ParseVehicleParams(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("vehicle params: ") + e.what(), 0);
  }
  if (!doc.is_object()) {
    throw ValidationError("vehicle params: top level must be an object");
  }
  VehicleParams params = DefaultVehicleParams();
  const auto& fields = Fields();
  for (const auto& [key, value] : doc.items()) {
    if (key == "description") continue;
    auto it = fields.find(key);
    if (it == fields.end()) {
      throw ValidationError("vehicle params: unknown key '" + key + "'");
    }
    it->second.read(params, value, key);
  }
  params.Validate();
  return params;
}

VehicleParams LoadVehicleParams(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open params file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseVehicleParams(buffer.str());
}

std::string DumpVehicleParams(const VehicleParams& params) {
  json doc = json::object();
  for (const auto& [key, field] : Fields()) doc[key] = field.write(params);
  return doc.dump(2);
}

}  // namespace ecodrive
