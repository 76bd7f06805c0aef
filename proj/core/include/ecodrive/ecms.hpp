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

// Equivalent consumption minimization of the engine/BSG torque split for a
// given powertrain torque request.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ecodrive/powertrain.hpp"
#include "ecodrive/route.hpp"
#include "ecodrive/spatial_problem.hpp"

namespace ecodrive {

// Plant evaluation counts. `full_plant` counts (state, control) transitions,
// `reduced_plant` counts torque split candidate evaluations.
struct EvalCounters {
  std::uint64_t full_plant = 0;
  std::uint64_t reduced_plant = 0;

  EvalCounters& operator+=(const EvalCounters& other) {
    full_plant += other.full_plant;
    reduced_plant += other.reduced_plant;
    return *this;
  }
};

struct EcmsConfig {
  double lambda0 = 2.87;
  double lambda1 = 5.0;
  double soc_target = 0.55;
  int split_points = 21;
  // Keeps the tan argument this far inside (-pi/2, pi/2).
  double tan_margin = 0.01;

  // soc_target must lie strictly inside (soc_min, soc_max).
  void Validate(double soc_min, double soc_max) const;
};

// lambda0 + tan(-(soc - soc_target) * lambda1), with the tan argument clamped
// to [-pi/2 + tan_margin, pi/2 - tan_margin].
double EquivalenceFactor(double soc, double lambda0, const EcmsConfig& cfg);

// Battery power interval [min, max] (W) that keeps the next SoC inside
// [soc_min, soc_max] over `travel_time`; max is also capped by the battery
// power limit. Empty (min > max) when no request works.
struct PowerWindow {
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
};
PowerWindow SocPowerWindow(double soc, double travel_time,
                           const ProblemConfig& cfg,
                           const VehicleParams& params);

struct SplitCandidate {
  double bsg_torque = 0.0;
  double engine_command = 0.0;
  double engine_torque = 0.0;
  double fuel_rate = 0.0;     // kg/s
  double bsg_power = 0.0;     // W electrical
  double battery_term = 0.0;  // bsg_power / fuel_lhv, kg/s
};

// Uniform candidates over the admissible BSG interval for `powertrain_torque`.
// Empty if no split reaches the request.
std::vector<SplitCandidate> EnumerateSplits(const StageContext& ctx,
                                            double powertrain_torque,
                                            int split_points,
                                            const VehicleParams& params,
                                            EvalCounters* counters = nullptr);

inline double SplitCost(const SplitCandidate& c, double factor) {
  return c.fuel_rate + factor * c.battery_term;
}

// Index of the cheapest candidate whose battery power lies in `window`, or
// -1. Exact ties go to the smaller |bsg_torque|.
int SelectSplit(std::span<const SplitCandidate> candidates, double factor,
                const PowerWindow& window);

struct SplitResult {
  bool feasible = false;
  SplitCandidate best;
  double cost = 0.0;
};

// `window` defaults to the battery power limit at x.soc.
SplitResult OptimalSplit(const StateVector& x, double powertrain_torque,
                         double factor, int k, const Route& route,
                         const EcmsConfig& cfg, const VehicleParams& params,
                         EvalCounters* counters = nullptr,
                         const PowerWindow* window = nullptr);

// Same result as calling OptimalSplit once per factor, but the plant terms
// are evaluated only once.
std::vector<SplitResult> BatchSplitLambdaGrid(
    const StateVector& x, double powertrain_torque,
    std::span<const double> factors, int k, const Route& route,
    const EcmsConfig& cfg, const VehicleParams& params,
    EvalCounters* counters = nullptr, const PowerWindow* window = nullptr);

// Stage output for a powertrain torque served by `split`.
StageOutput ApplySplit(const StateVector& x,
                       double powertrain_torque, const Motion& motion,
                       const SplitCandidate& split, const ProblemConfig& cfg,
                       const VehicleParams& params);

}  // namespace ecodrive
