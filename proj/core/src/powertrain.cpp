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

#include "ecodrive/powertrain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

// Slack on torque limit checks; controls built from the limits themselves
// must never be rejected because of rounding.
constexpr double kTorqueSlack = 1e-9;

double Gaussian(double x, double center, double width) {
  if (std::isinf(width)) return 1.0;
  const double z = (x - center) / width;
  return std::exp(-z * z);
}

void Require(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("vehicle params: ") + what);
}

void RequireEfficiency(const std::vector<double>& values, const char* what) {
  for (double v : values) Require(v > 0.0 && v <= 1.0, what);
}

}  // namespace

double EngineEfficiencySurface::operator()(double torque, double speed) const {
  const double eta = peak * Gaussian(torque, torque_opt, torque_width) *
                     Gaussian(speed, speed_opt, speed_width);
  return std::max(eta, floor);
}

void VehicleParams::Validate() const {
  Require(mass > 0.0, "mass must be positive");
  Require(wheel_radius > 0.0, "wheel_radius must be positive");
  Require(nominal_capacity > 0.0, "nominal_capacity must be positive");
  Require(fuel_lhv > 0.0, "fuel_lhv must be positive");
  Require(internal_resistance > 0.0, "internal_resistance must be positive");
  Require(drag_coefficient >= 0.0 && frontal_area >= 0.0 && air_density >= 0.0,
          "aerodynamic terms must be non-negative");
  Require(gravity > 0.0, "gravity must be positive");
  Require(brake_max_decel > 0.0, "brake_max_decel must be positive");
  Require(final_drive > 0.0 && belt_ratio > 0.0, "ratios must be positive");
  Require(!gear_ratios.empty(), "gear_ratios is empty");
  for (double r : gear_ratios) Require(r > 0.0, "gear ratios must be positive");
  Require(gear_upshift_speeds.size() + 1 == gear_ratios.size(),
          "gear_upshift_speeds must have one entry fewer than gear_ratios");
  for (std::size_t i = 1; i < gear_upshift_speeds.size(); ++i) {
    Require(gear_upshift_speeds[i] > gear_upshift_speeds[i - 1],
            "gear_upshift_speeds must be strictly increasing");
  }
  RequireEfficiency(transmission_efficiency.values(),
                    "transmission efficiency outside (0, 1]");
  RequireEfficiency(bsg_efficiency.values(), "bsg efficiency outside (0, 1]");
  Require(engine_efficiency.peak > 0.0 && engine_efficiency.peak <= 1.0,
          "engine efficiency peak outside (0, 1]");
  Require(engine_efficiency.floor > 0.0 &&
              engine_efficiency.floor <= engine_efficiency.peak,
          "engine efficiency floor outside (0, peak]");
  Require(engine_efficiency.torque_width > 0.0 &&
              engine_efficiency.speed_width > 0.0,
          "engine efficiency widths must be positive");
  Require(bsg_min_torque <= 0.0 && bsg_max_torque >= 0.0,
          "bsg limits must bracket zero");
  Require(bsg_max_power > 0.0, "bsg_max_power must be positive");
  Require(engine_min_torque <= engine_peak_torque,
          "engine_min_torque above engine_peak_torque");
  Require(engine_peak_torque > 0.0 && engine_max_power > 0.0,
          "engine torque/power must be positive");
  Require(idle_speed > 0.0 && stall_speed > 0.0, "idle/stall speed positive");
  Require(idle_fuel_rate >= 0.0, "idle_fuel_rate must be non-negative");
  for (double v : open_circuit_voltage.values()) {
    Require(v > 0.0, "open-circuit voltage must be positive");
  }
  for (double c : rolling_coefficient.values()) {
    Require(c >= 0.0, "rolling coefficient must be non-negative");
  }
}

VehicleParams DefaultVehicleParams() { return VehicleParams{}; }

int SelectGear(double speed, const VehicleParams& params) {
  int gear = 1;
  for (double threshold : params.gear_upshift_speeds) {
    if (speed >= threshold) ++gear;
  }
  return gear;
}

double GearRatio(int gear, const VehicleParams& params) {
  return params.gear_ratios.at(static_cast<std::size_t>(gear - 1));
}

double TurbineSpeed(double speed, const VehicleParams& params) {
  const double ratio = GearRatio(SelectGear(speed, params), params);
  return params.final_drive * ratio * speed / params.wheel_radius;
}

TorqueLimits GetTorqueLimits(double engine_speed, const VehicleParams& params) {
  TorqueLimits limits;
  if (engine_speed <= 0.0) return limits;
  const double base_speed = params.engine_max_power / params.engine_peak_torque;
  limits.engine_max = engine_speed <= base_speed
                          ? params.engine_peak_torque
                          : params.engine_max_power / engine_speed;
  limits.engine_min = std::min(params.engine_min_torque, limits.engine_max);
  const double bsg_speed = params.belt_ratio * engine_speed;
  const double power_torque = params.bsg_max_power / bsg_speed;
  limits.bsg_max = std::min(params.bsg_max_torque, power_torque);
  limits.bsg_min = std::max(params.bsg_min_torque, -power_torque);
  return limits;
}

double FuelRate(double engine_torque, double engine_speed,
                const VehicleParams& params) {
  if (engine_speed == 0.0) return 0.0;
  const TorqueLimits limits = GetTorqueLimits(engine_speed, params);
  if (engine_torque > limits.engine_max + kTorqueSlack) {
    throw InfeasibleControlError("engine torque above maximum",
                                 limits.engine_max);
  }
  if (engine_torque < limits.engine_min - kTorqueSlack) {
    throw InfeasibleControlError("engine torque below minimum",
                                 limits.engine_min);
  }
  const double idle =
      engine_speed <= params.idle_speed ? params.idle_fuel_rate : 0.0;
  if (engine_torque <= 0.0) return idle;
  const double eta = params.engine_efficiency(engine_torque, engine_speed);
  return idle + engine_torque * engine_speed / (eta * params.fuel_lhv);
}

double BsgElectricalPower(double bsg_torque, double engine_speed,
                          const VehicleParams& params) {
  const TorqueLimits limits = GetTorqueLimits(engine_speed, params);
  if (bsg_torque > limits.bsg_max + kTorqueSlack) {
    throw InfeasibleControlError("bsg torque above maximum", limits.bsg_max);
  }
  if (bsg_torque < limits.bsg_min - kTorqueSlack) {
    throw InfeasibleControlError("bsg torque below minimum", limits.bsg_min);
  }
  if (bsg_torque == 0.0) return 0.0;
  const double bsg_speed = params.belt_ratio * engine_speed;
  const double eta = params.bsg_efficiency(bsg_speed, bsg_torque);
  const double mechanical = bsg_torque * bsg_speed;
  return bsg_torque < 0.0 ? mechanical * eta : mechanical / eta;
}

double BatteryPowerLimit(double soc, const VehicleParams& params) {
  const double voc = params.open_circuit_voltage(soc);
  return voc * voc / (4.0 * params.internal_resistance);
}

bool BatteryRequestFeasible(double soc, double bsg_power,
                            const VehicleParams& params) {
  const double voc = params.open_circuit_voltage(soc);
  return voc * voc - 4.0 * params.internal_resistance * bsg_power >= 0.0;
}

BatteryOutput BatteryStep(double soc, double bsg_power,
                          const VehicleParams& params) {
  const double voc = params.open_circuit_voltage(soc);
  const double r0 = params.internal_resistance;
  const double discriminant = voc * voc - 4.0 * r0 * bsg_power;
  if (discriminant < 0.0) {
    throw BatteryPowerLimitError(bsg_power, BatteryPowerLimit(soc, params));
  }
  BatteryOutput out;
  // (V - sqrt(D)) / (2 R0) rewritten without cancellation.
  out.current = 2.0 * bsg_power / (voc + std::sqrt(discriminant));
  out.total_current = out.current + params.bias_current;
  out.soc_rate = -out.total_current / params.nominal_capacity;
  return out;
}

EngineOperatingPoint EngineSpeed(double speed, bool stop_flag,
                                 const VehicleParams& params) {
  EngineOperatingPoint op;
  op.gear = SelectGear(speed, params);
  const double turbine = params.final_drive * GearRatio(op.gear, params) *
                         speed / params.wheel_radius;
  const double slip =
      speed < params.converter_lock_speed ? params.converter_slip : 0.0;
  const double pump = turbine + slip;
  if (pump >= params.stall_speed) {
    op.speed = pump;
  } else {
    op.speed = stop_flag ? 0.0 : params.idle_speed;
  }
  return op;
}

DrivelineOutput DrivelineForce(double speed, double powertrain_torque,
                               const VehicleParams& params) {
  const double ratio =
      params.final_drive * GearRatio(SelectGear(speed, params), params);
  const double turbine = ratio * speed / params.wheel_radius;
  const double eta = params.transmission_efficiency(turbine, powertrain_torque);
  DrivelineOutput out;
  out.output_torque = powertrain_torque >= 0.0
                          ? ratio * powertrain_torque * eta
                          : ratio * powertrain_torque / eta;
  out.tractive_force = out.output_torque / params.wheel_radius;
  return out;
}

double RoadLoad(double speed, double grade, const VehicleParams& params) {
  const double aero = 0.5 * params.drag_coefficient * params.air_density *
                      params.frontal_area * speed * speed;
  const double weight = params.mass * params.gravity;
  return aero + weight * std::cos(grade) * params.rolling_coefficient(speed) +
         weight * std::sin(grade);
}

double BrakeTorqueCapacity(double speed, const VehicleParams& params) {
  const double ratio =
      params.final_drive * GearRatio(SelectGear(speed, params), params);
  const double turbine = ratio * speed / params.wheel_radius;
  const double eta = params.transmission_efficiency(turbine, 0.0);
  return params.mass * params.brake_max_decel * params.wheel_radius * eta /
         ratio;
}

}  // namespace ecodrive
