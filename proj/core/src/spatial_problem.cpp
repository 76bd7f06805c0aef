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

#include "ecodrive/spatial_problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {

constexpr double kTorqueSlack = 1e-9;

void Require(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("problem config: ") + what);
}

bool TorqueFeasible(const ControlBenchmark& u, const StageContext& ctx) {
  return u.engine_command >= EngineCommandMin(ctx) - kTorqueSlack &&
         u.engine_command <= EngineCommandMax(ctx) + kTorqueSlack &&
         u.bsg_torque >= ctx.limits.bsg_min - kTorqueSlack &&
         u.bsg_torque <= ctx.limits.bsg_max + kTorqueSlack;
}

}  // namespace

void ProblemConfig::Validate() const {
  Require(gamma >= 0.0 && gamma <= 1.0, "gamma outside [0, 1]");
  Require(fuel_norm > 0.0, "fuel_norm must be positive");
  Require(soc_min < soc_max, "soc_min must be below soc_max");
  Require(soc_initial >= soc_min && soc_initial <= soc_max,
          "soc_initial outside [soc_min, soc_max]");
  Require(soc_tolerance >= 0.0, "soc_tolerance must be non-negative");
  Require(accel_min < 0.0 && accel_max > 0.0,
          "acceleration bounds must bracket zero");
}

const char* ToString(ConstraintTag tag) {
  switch (tag) {
    case ConstraintTag::kNone:
      return "none";
    case ConstraintTag::kTorque:
      return "torque-limit";
    case ConstraintTag::kAcceleration:
      return "acceleration-limit";
    case ConstraintTag::kSpeedLimit:
      return "speed-limit";
    case ConstraintTag::kSpeedFloor:
      return "speed-floor";
    case ConstraintTag::kSoc:
      return "soc-window";
    case ConstraintTag::kBatteryPower:
      return "battery-power-limit";
    case ConstraintTag::kStall:
      return "vehicle-stall";
  }
  return "unknown";
}

StageContext MakeStageContext(double energy, int k, const Route& route,
                              const VehicleParams& params) {
  StageContext ctx;
  ctx.stage = k;
  ctx.stage_length = route.stage_length;
  ctx.energy = energy;
  ctx.speed = std::sqrt(energy);
  ctx.grade = route[k].grade;
  ctx.road_load = RoadLoad(ctx.speed, ctx.grade, params);
  const RoutePoint& next = route[k + 1];
  // The engine may shut off only while rolling into a stop.
  ctx.engine = EngineSpeed(ctx.speed, next.stop, params);
  ctx.limits = GetTorqueLimits(ctx.engine.speed, params);
  ctx.brake_capacity = BrakeTorqueCapacity(ctx.speed, params);
  ctx.next_energy_min = next.v_min * next.v_min;
  ctx.next_energy_max = next.v_max * next.v_max;
  return ctx;
}

CrankSplit SplitCrankTorque(double engine_command, const TorqueLimits& limits) {
  CrankSplit split;
  split.engine_torque = std::max(engine_command, limits.engine_min);
  split.brake_torque = split.engine_torque - engine_command;
  return split;
}

double EngineCommandMin(const StageContext& ctx) {
  return ctx.limits.engine_min - ctx.brake_capacity;
}

double EngineCommandMax(const StageContext& ctx) {
  return ctx.limits.engine_max;
}

double PowertrainTorqueMin(const StageContext& ctx,
                           const VehicleParams& params) {
  return EngineCommandMin(ctx) + params.belt_ratio * ctx.limits.bsg_min;
}

double PowertrainTorqueMax(const StageContext& ctx,
                           const VehicleParams& params) {
  return EngineCommandMax(ctx) + params.belt_ratio * ctx.limits.bsg_max;
}

Motion MotionStep(const StageContext& ctx, double powertrain_torque,
                  const ProblemConfig& cfg, const VehicleParams& params) {
  Motion m;
  m.tractive_force =
      DrivelineForce(ctx.speed, powertrain_torque, params).tractive_force;
  double next = ctx.energy + 2.0 * ctx.stage_length *
                                 (m.tractive_force - ctx.road_load) /
                                 params.mass;
  if (std::abs(next - ctx.next_energy_min) <= kEnergySnap) {
    next = ctx.next_energy_min;
  } else if (std::abs(next - ctx.next_energy_max) <= kEnergySnap) {
    next = ctx.next_energy_max;
  }
  m.next_energy = next;
  m.accel = (next - ctx.energy) / (2.0 * ctx.stage_length);
  if (!(next > 0.0)) {
    m.mean_speed = 0.0;
    m.travel_time = std::numeric_limits<double>::infinity();
    m.tag = ConstraintTag::kStall;
    return m;
  }
  m.mean_speed = 0.5 * (ctx.speed + std::sqrt(next));
  m.travel_time = ctx.stage_length / m.mean_speed;
  if (m.accel < cfg.accel_min || m.accel > cfg.accel_max) {
    m.tag = ConstraintTag::kAcceleration;
  } else if (next > ctx.next_energy_max) {
    m.tag = ConstraintTag::kSpeedLimit;
  } else if (next < ctx.next_energy_min) {
    m.tag = ConstraintTag::kSpeedFloor;
  }
  return m;
}

SocStep SocTransition(double soc, double bsg_power, double travel_time,
                      const VehicleParams& params) {
  const BatteryOutput battery = BatteryStep(soc, bsg_power, params);
  SocStep step;
  step.current = battery.current;
  step.total_current = battery.total_current;
  step.next_soc = soc - travel_time * battery.total_current /
                            params.nominal_capacity;
  return step;
}

ConstraintTag CheckConstraints(const StateVector& next, double accel,
                               const ControlBenchmark& u,
                               const StageContext& ctx,
                               const ProblemConfig& cfg) {
  if (!TorqueFeasible(u, ctx)) return ConstraintTag::kTorque;
  if (!(next.energy > 0.0)) return ConstraintTag::kStall;
  if (accel < cfg.accel_min || accel > cfg.accel_max) {
    return ConstraintTag::kAcceleration;
  }
  if (next.energy > ctx.next_energy_max) return ConstraintTag::kSpeedLimit;
  if (next.energy < ctx.next_energy_min) return ConstraintTag::kSpeedFloor;
  if (next.soc < cfg.soc_min || next.soc > cfg.soc_max) {
    return ConstraintTag::kSoc;
  }
  return ConstraintTag::kNone;
}

StageOutput Transition(const StateVector& x, const ControlBenchmark& u, int k,
                       const Route& route, const ProblemConfig& cfg,
                       const VehicleParams& params) {
  const StageContext ctx = MakeStageContext(x.energy, k, route, params);
  StageOutput out;
  out.powertrain_torque = u.engine_command + params.belt_ratio * u.bsg_torque;
  if (!TorqueFeasible(u, ctx)) {
    out.tag = ConstraintTag::kTorque;
    return out;
  }
  const CrankSplit split = SplitCrankTorque(u.engine_command, ctx.limits);
  out.engine_torque = split.engine_torque;
  out.brake_torque = split.brake_torque;
  out.fuel_rate = FuelRate(split.engine_torque, ctx.engine.speed, params);
  out.bsg_power = BsgElectricalPower(u.bsg_torque, ctx.engine.speed, params);

  const Motion motion = MotionStep(ctx, out.powertrain_torque, cfg, params);
  out.accel = motion.accel;
  out.next.energy = motion.next_energy;
  out.travel_time = motion.travel_time;
  if (motion.tag == ConstraintTag::kStall) {
    out.tag = motion.tag;
    out.next.soc = x.soc;
    return out;
  }
  const SocStep soc = SocTransition(x.soc, out.bsg_power, motion.travel_time,
                                    params);
  out.next.soc = soc.next_soc;
  out.battery_current = soc.total_current;
  out.fuel_mass = out.fuel_rate * out.travel_time;
  out.tag = CheckConstraints(out.next, motion.accel, u, ctx, cfg);
  return out;
}

double StageCost(const StageOutput& out, double gamma, double fuel_norm) {
  return StageCostValue(out.fuel_rate, out.travel_time, gamma, fuel_norm);
}

std::vector<double> Linspace(double lo, double hi, int n) {
  if (n <= 0) return {};
  const double span = hi - lo;
  if (!(span > 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)}))) {
    return {lo};
  }
  if (n == 1) return {lo + 0.5 * span};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = lo + span * i / (n - 1);
  }
  out.back() = hi;
  return out;
}

double LandingTorque(const StageContext& ctx, double target_energy,
                     const VehicleParams& params) {
  const double force = params.mass * (target_energy - ctx.energy) /
                           (2.0 * ctx.stage_length) +
                       ctx.road_load;
  const double ratio =
      params.final_drive * GearRatio(SelectGear(ctx.speed, params), params);
  const double turbine = ratio * ctx.speed / params.wheel_radius;
  const double output_torque = force * params.wheel_radius;
  // The efficiency map may depend on torque; a few fixed-point passes are
  // plenty since it varies slowly.
  double torque = output_torque / ratio;
  for (int pass = 0; pass < 4; ++pass) {
    const double eta = params.transmission_efficiency(turbine, torque);
    torque = output_torque >= 0.0 ? output_torque / (ratio * eta)
                                  : output_torque * eta / ratio;
  }
  return torque;
}

namespace {

std::vector<double> LandingTargets(const StageContext& ctx) {
  std::vector<double> targets{ctx.next_energy_min};
  if (ctx.next_energy_max - ctx.next_energy_min > kEnergySnap) {
    targets.push_back(ctx.next_energy_max);
  }
  return targets;
}

}  // namespace

std::vector<ControlBenchmark> BenchmarkControls(const StageContext& ctx,
                                                const ControlGrid& grid,
                                                const VehicleParams& params) {
  const double cmd_lo = EngineCommandMin(ctx);
  const double cmd_hi = EngineCommandMax(ctx);
  std::vector<double> engine;
  if (grid.brake_points > 0) {
    engine = Linspace(cmd_lo, ctx.limits.engine_min, grid.brake_points + 1);
    engine.pop_back();
  }
  for (double t : Linspace(ctx.limits.engine_min, cmd_hi, grid.engine_points)) {
    engine.push_back(t);
  }
  const std::vector<double> bsg =
      Linspace(ctx.limits.bsg_min, ctx.limits.bsg_max, grid.bsg_points);
  std::vector<ControlBenchmark> out;
  out.reserve(engine.size() * bsg.size() + 2 * bsg.size());
  for (double e : engine) {
    for (double b : bsg) out.push_back({e, b});
  }
  if (!grid.landing_controls) return out;
  for (double target : LandingTargets(ctx)) {
    const double torque = LandingTorque(ctx, target, params);
    for (double b : bsg) {
      const double cmd = torque - params.belt_ratio * b;
      if (cmd >= cmd_lo && cmd <= cmd_hi) out.push_back({cmd, b});
    }
  }
  return out;
}

std::vector<double> PowertrainTorqueCandidates(const StageContext& ctx,
                                               const ControlGrid& grid,
                                               const VehicleParams& params) {
  const double lo = PowertrainTorqueMin(ctx, params);
  const double hi = PowertrainTorqueMax(ctx, params);
  // Friction braking below the drive range, as in BenchmarkControls.
  const double drive_lo =
      ctx.limits.engine_min + params.belt_ratio * ctx.limits.bsg_min;
  std::vector<double> out;
  if (grid.brake_points > 0) {
    out = Linspace(lo, drive_lo, grid.brake_points + 1);
    out.pop_back();
  }
  for (double t : Linspace(drive_lo, hi, grid.powertrain_points)) {
    out.push_back(t);
  }
  if (!grid.landing_controls) return out;
  for (double target : LandingTargets(ctx)) {
    const double torque = LandingTorque(ctx, target, params);
    if (torque >= lo && torque <= hi) out.push_back(torque);
  }
  return out;
}

}  // namespace ecodrive
