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

// Quasi-static plant model of a P0 mild-hybrid vehicle: engine fuel map,
// belted starter generator, zero-order battery, locked torque converter,
// stepped transmission and road load. Every function here is pure in
// (inputs, params).

#pragma once

#include <string>
#include <vector>

#include "ecodrive/tables.hpp"

namespace ecodrive {

// Smooth bell-shaped brake efficiency surface used by the default Willans
// style fuel map. Widths may be +inf to make the surface constant.
struct EngineEfficiencySurface {
  double peak = 0.34;
  double torque_opt = 120.0;      // Nm
  double speed_opt = 300.0;       // rad/s
  double torque_width = 150.0;    // Nm
  double speed_width = 350.0;     // rad/s
  double floor = 0.08;

  double operator()(double torque, double speed) const;
};

struct VehicleParams {
  // Chassis.
  double mass = 1600.0;                // kg
  double drag_coefficient = 0.30;      // -
  double frontal_area = 2.2;           // m^2
  double air_density = 1.225;          // kg/m^3
  Table1D rolling_coefficient{0.009};  // - over speed (m/s)
  double wheel_radius = 0.32;          // m
  double gravity = 9.81;               // m/s^2
  double brake_max_decel = 4.0;        // m/s^2, friction brake capacity

  // Driveline.
  double final_drive = 3.2;
  std::vector<double> gear_ratios{4.0, 2.4, 1.6, 1.2, 1.0, 0.8};
  // Upshift speeds (m/s); size = gear_ratios.size() - 1, strictly increasing.
  std::vector<double> gear_upshift_speeds{5.0, 9.0, 13.0, 17.0, 23.0};
  Table2D transmission_efficiency{0.95};  // over (turbine speed, torque)
  double converter_lock_speed = 2.0;      // m/s
  double converter_slip = 0.0;            // rad/s, applied below lock speed

  // Belted starter generator.
  double belt_ratio = 2.5;
  Table2D bsg_efficiency{0.85};  // over (bsg speed, torque)
  double bsg_max_torque = 20.0;  // Nm at the BSG shaft
  double bsg_min_torque = -20.0;
  double bsg_max_power = 8000.0;  // W mechanical, both directions

  // Battery.
  Table1D open_circuit_voltage{48.0};  // V over SoC
  double internal_resistance = 0.05;   // Ohm
  double nominal_capacity = 28800.0;   // A s
  double bias_current = 2.0;           // A

  // Engine.
  double fuel_lhv = 42.6e6;        // J/kg
  EngineEfficiencySurface engine_efficiency;
  double idle_fuel_rate = 1.5e-4;  // kg/s
  double idle_speed = 80.0;        // rad/s
  double stall_speed = 70.0;       // rad/s
  double engine_peak_torque = 250.0;   // Nm
  double engine_max_power = 120000.0;  // W
  double engine_min_torque = -20.0;    // Nm, motoring drag when running

  // Throws ValidationError on the first violated invariant.
  void Validate() const;
};

VehicleParams DefaultVehicleParams();
// Flat JSON document; unknown keys are rejected.
VehicleParams ParseVehicleParams(const std::string& json_text);
VehicleParams LoadVehicleParams(const std::string& path);
std::string DumpVehicleParams(const VehicleParams& params);

struct TorqueLimits {
  double engine_min = 0.0;
  double engine_max = 0.0;
  double bsg_min = 0.0;
  double bsg_max = 0.0;
};

struct EngineOperatingPoint {
  double speed = 0.0;  // rad/s
  int gear = 1;        // 1-based
};

struct DrivelineOutput {
  double tractive_force = 0.0;  // N
  double output_torque = 0.0;   // Nm
};

struct BatteryOutput {
  double current = 0.0;        // A, terminal current
  double total_current = 0.0;  // A, including auxiliaries
  double soc_rate = 0.0;       // 1/s
};

// 1-based gear selected by the speed-threshold schedule.
int SelectGear(double speed, const VehicleParams& params);
double GearRatio(int gear, const VehicleParams& params);
double TurbineSpeed(double speed, const VehicleParams& params);

// Fuel mass flow (kg/s). Throws InfeasibleControlError outside the limits.
double FuelRate(double engine_torque, double engine_speed,
                const VehicleParams& params);

// Electrical power drawn (positive) or delivered (negative) by the BSG.
double BsgElectricalPower(double bsg_torque, double engine_speed,
                          const VehicleParams& params);

double BatteryPowerLimit(double soc, const VehicleParams& params);
// True when BatteryStep accepts the request, i.e. V_oc^2 - 4 R0 P >= 0.
bool BatteryRequestFeasible(double soc, double bsg_power,
                            const VehicleParams& params);
BatteryOutput BatteryStep(double soc, double bsg_power,
                          const VehicleParams& params);

EngineOperatingPoint EngineSpeed(double speed, bool stop_flag,
                                 const VehicleParams& params);

DrivelineOutput DrivelineForce(double speed, double powertrain_torque,
                               const VehicleParams& params);

double RoadLoad(double speed, double grade, const VehicleParams& params);

TorqueLimits GetTorqueLimits(double engine_speed, const VehicleParams& params);

// Crank-referred friction brake capacity at the given vehicle speed.
double BrakeTorqueCapacity(double speed, const VehicleParams& params);

}  // namespace ecodrive
