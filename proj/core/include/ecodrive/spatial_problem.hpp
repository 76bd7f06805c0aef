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

// Spatial-domain stage model: state transition, stage cost and constraint
// checks between grid points k and k+1.
//
// The transition is split into pieces (MotionStep, SocTransition, fuel and
// BSG power) so that the solvers can evaluate the SoC-independent parts once per
// (speed node, control) and reuse them across the SoC axis. Transition()
// composes exactly the same pieces, so solver tables and a direct Transition()
// call agree bit for bit.

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ecodrive/powertrain.hpp"
#include "ecodrive/route.hpp"

namespace ecodrive {

struct ProblemConfig {
  double gamma = 0.65;
  double fuel_norm = 1e-3;  // kg/s
  double soc_min = 0.3;
  double soc_max = 0.8;
  double soc_initial = 0.55;
  double soc_tolerance = 0.005;
  double accel_min = -3.0;  // m/s^2
  double accel_max = 3.0;

  void Validate() const;
};

// (E, xi) with E = v^2.
struct StateVector {
  double energy = 0.0;  // m^2/s^2
  double soc = 0.0;

  double speed() const { return std::sqrt(energy); }
};

// Benchmark control. `engine_command` below the engine's minimum torque is
// served by the engine at its minimum plus friction braking for the rest.
struct ControlBenchmark {
  double engine_command = 0.0;  // Nm at the crank
  double bsg_torque = 0.0;      // Nm at the BSG shaft
};

struct ControlDpEcms {
  double powertrain_torque = 0.0;  // Nm at the turbine
};

enum class ConstraintTag : std::uint8_t {
  kNone,
  kTorque,
  kAcceleration,
  kSpeedLimit,
  kSpeedFloor,
  kSoc,
  kBatteryPower,
  kStall,
};

const char* ToString(ConstraintTag tag);

// Control- and SoC-independent quantities of stage k at a given entry energy.
struct StageContext {
  int stage = 0;
  double stage_length = 0.0;
  double energy = 0.0;
  double speed = 0.0;
  double grade = 0.0;
  double road_load = 0.0;
  EngineOperatingPoint engine;
  TorqueLimits limits;
  double brake_capacity = 0.0;  // crank-referred
  double next_energy_min = 0.0;
  double next_energy_max = 0.0;
};

StageContext MakeStageContext(double energy, int k, const Route& route,
                              const VehicleParams& params);

struct CrankSplit {
  double engine_torque = 0.0;
  double brake_torque = 0.0;  // >= 0, crank-referred
};

CrankSplit SplitCrankTorque(double engine_command, const TorqueLimits& limits);

double EngineCommandMin(const StageContext& ctx);
double EngineCommandMax(const StageContext& ctx);
double PowertrainTorqueMin(const StageContext& ctx, const VehicleParams& params);
double PowertrainTorqueMax(const StageContext& ctx, const VehicleParams& params);

struct Motion {
  double tractive_force = 0.0;
  double next_energy = 0.0;
  double mean_speed = 0.0;
  double travel_time = 0.0;
  double accel = 0.0;
  ConstraintTag tag = ConstraintTag::kNone;

  bool feasible() const { return tag == ConstraintTag::kNone; }
};

// Longitudinal row of the stage transition. Checks acceleration and the
// speed envelope at k+1; next energies within kEnergySnap of an envelope
// bound are snapped onto it.
inline constexpr double kEnergySnap = 1e-9;
Motion MotionStep(const StageContext& ctx, double powertrain_torque,
                  const ProblemConfig& cfg, const VehicleParams& params);

struct SocStep {
  double current = 0.0;
  double total_current = 0.0;
  double next_soc = 0.0;
};

// Battery row of the stage transition. Throws BatteryPowerLimitError.
SocStep SocTransition(double soc, double bsg_power, double travel_time,
                      const VehicleParams& params);

// Per-stage cost in seconds-equivalent.
inline double StageCostValue(double fuel_rate, double travel_time,
                             double gamma, double fuel_norm) {
  return (gamma * fuel_rate / fuel_norm + (1.0 - gamma)) * travel_time;
}

struct StageOutput {
  StateVector next;
  double travel_time = 0.0;
  double fuel_rate = 0.0;
  double fuel_mass = 0.0;
  double battery_current = 0.0;  // including auxiliaries
  double bsg_power = 0.0;
  double powertrain_torque = 0.0;
  double engine_torque = 0.0;
  double brake_torque = 0.0;
  double accel = 0.0;
  ConstraintTag tag = ConstraintTag::kNone;

  bool feasible() const { return tag == ConstraintTag::kNone; }
};

// Full plant evaluation of one stage. Infeasibility is reported through the
// tag; a battery request above V_oc^2/(4 R0) throws BatteryPowerLimitError.
StageOutput Transition(const StateVector& x, const ControlBenchmark& u, int k,
                       const Route& route, const ProblemConfig& cfg,
                       const VehicleParams& params);

double StageCost(const StageOutput& out, double gamma, double fuel_norm);

// First violated constraint for the move into point k+1, kNone if feasible.
// All bounds are inclusive.
ConstraintTag CheckConstraints(const StateVector& next, double accel,
                               const ControlBenchmark& u,
                               const StageContext& ctx,
                               const ProblemConfig& cfg);

// Candidate control grids.
struct ControlGrid {
  // Engine torque points over the engine's own range [T_min, T_max].
  int engine_points = 15;
  // Friction braking commands, uniform over [T_min - brake capacity, T_min)
  // for the benchmark and the matching powertrain-torque range for DP-ECMS.
  int brake_points = 5;
  int bsg_points = 11;
  int powertrain_points = 25;
  // Adds controls that land exactly on the next speed envelope bounds, so
  // stops and speed-limit cruising are reachable from any node.
  bool landing_controls = true;
};

// n uniform points over [lo, hi]; a single point when the range collapses.
std::vector<double> Linspace(double lo, double hi, int n);

// Powertrain torque that moves the vehicle from ctx.energy to `target`.
double LandingTorque(const StageContext& ctx, double target_energy,
                     const VehicleParams& params);

std::vector<ControlBenchmark> BenchmarkControls(const StageContext& ctx,
                                                const ControlGrid& grid,
                                                const VehicleParams& params);

std::vector<double> PowertrainTorqueCandidates(const StageContext& ctx,
                                               const ControlGrid& grid,
                                               const VehicleParams& params);

}  // namespace ecodrive
