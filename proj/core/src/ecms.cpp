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

#include "ecodrive/ecms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ecodrive/errors.hpp"

namespace ecodrive {

namespace {
constexpr double kInfinity = std::numeric_limits<double>::infinity();
}  // namespace

void EcmsConfig::Validate(double soc_min, double soc_max) const {
  if (split_points < 2) {
    throw ValidationError("ecms: split_points must be at least 2");
  }
  if (!(lambda0 > 0.0)) throw ValidationError("ecms: lambda0 must be positive");
  if (!(lambda1 >= 0.0)) {
    throw ValidationError("ecms: lambda1 must be non-negative");
  }
  if (!(tan_margin > 0.0 && tan_margin < std::numbers::pi / 2)) {
    throw ValidationError("ecms: tan_margin outside (0, pi/2)");
  }
  if (!(soc_target > soc_min && soc_target < soc_max)) {
    throw ValidationError("ecms: soc_target outside the SoC window");
  }
}

double EquivalenceFactor(double soc, double lambda0, const EcmsConfig& cfg) {
  const double bound = std::numbers::pi / 2 - cfg.tan_margin;
  const double arg = std::clamp(-(soc - cfg.soc_target) * cfg.lambda1, -bound,
                                bound);
  return lambda0 + std::tan(arg);
}

PowerWindow SocPowerWindow(double soc, double travel_time,
                           const ProblemConfig& cfg,
                           const VehicleParams& params) {
  const double voc = params.open_circuit_voltage(soc);
  const double r0 = params.internal_resistance;
  const double q = params.nominal_capacity / travel_time;
  // Terminal current bounds from soc - t (I + I_bias) / C in the window.
  const double i_max = (soc - cfg.soc_min) * q - params.bias_current;
  const double i_min = (soc - cfg.soc_max) * q - params.bias_current;
  const double i_peak = voc / (2.0 * r0);
  auto power = [&](double i) { return voc * i - r0 * i * i; };
  PowerWindow w;
  w.max = i_max >= i_peak ? BatteryPowerLimit(soc, params) : power(i_max);
  w.min = i_min >= i_peak ? kInfinity : power(i_min);
  return w;
}

std::vector<SplitCandidate> EnumerateSplits(const StageContext& ctx,
                                            double powertrain_torque,
                                            int split_points,
                                            const VehicleParams& params,
                                            EvalCounters* counters) {
  const double r = params.belt_ratio;
  const double cmd_lo = EngineCommandMin(ctx);
  const double cmd_hi = EngineCommandMax(ctx);
  const double lo = std::max(ctx.limits.bsg_min, (powertrain_torque - cmd_hi) / r);
  const double hi = std::min(ctx.limits.bsg_max, (powertrain_torque - cmd_lo) / r);
  std::vector<SplitCandidate> out;
  if (lo > hi + 1e-9) return out;
  const std::vector<double> bsg = Linspace(lo, std::max(lo, hi), split_points);
  out.reserve(bsg.size());
  for (double b : bsg) {
    SplitCandidate c;
    c.bsg_torque = std::clamp(b, ctx.limits.bsg_min, ctx.limits.bsg_max);
    c.engine_command = std::clamp(powertrain_torque - r * c.bsg_torque, cmd_lo,
                                  cmd_hi);
    c.engine_torque = SplitCrankTorque(c.engine_command, ctx.limits).engine_torque;
    c.fuel_rate = FuelRate(c.engine_torque, ctx.engine.speed, params);
    c.bsg_power = BsgElectricalPower(c.bsg_torque, ctx.engine.speed, params);
    c.battery_term = c.bsg_power / params.fuel_lhv;
    out.push_back(c);
  }
  if (counters != nullptr) counters->reduced_plant += out.size();
  return out;
}

int SelectSplit(std::span<const SplitCandidate> candidates, double factor,
                const PowerWindow& window) {
  int best = -1;
  double best_cost = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const SplitCandidate& c = candidates[i];
    if (c.bsg_power > window.max || c.bsg_power < window.min) continue;
    const double cost = SplitCost(c, factor);
    if (best < 0 || cost < best_cost ||
        (cost == best_cost &&
         std::abs(c.bsg_torque) <
             std::abs(candidates[static_cast<std::size_t>(best)].bsg_torque))) {
      best = static_cast<int>(i);
      best_cost = cost;
    }
  }
  return best;
}

std::vector<SplitResult> BatchSplitLambdaGrid(
    const StateVector& x, double powertrain_torque,
    std::span<const double> factors, int k, const Route& route,
    const EcmsConfig& cfg, const VehicleParams& params,
    EvalCounters* counters, const PowerWindow* window) {
  const StageContext ctx = MakeStageContext(x.energy, k, route, params);
  const std::vector<SplitCandidate> candidates =
      EnumerateSplits(ctx, powertrain_torque, cfg.split_points, params, counters);
  PowerWindow limit;
  limit.max = BatteryPowerLimit(x.soc, params);
  if (window != nullptr) limit = *window;
  std::vector<SplitResult> out(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const int idx = SelectSplit(candidates, factors[i], limit);
    if (idx < 0) continue;
    out[i].feasible = true;
    out[i].best = candidates[static_cast<std::size_t>(idx)];
    out[i].cost = SplitCost(out[i].best, factors[i]);
  }
  return out;
}

SplitResult OptimalSplit(const StateVector& x, double powertrain_torque,
                         double factor, int k, const Route& route,
                         const EcmsConfig& cfg, const VehicleParams& params,
                         EvalCounters* counters, const PowerWindow* window) {
  const double factors[] = {factor};
  return BatchSplitLambdaGrid(x, powertrain_torque, factors, k, route, cfg,
                              params, counters, window)
      .front();
}

StageOutput ApplySplit(const StateVector& x,
                       double powertrain_torque, const Motion& motion,
                       const SplitCandidate& split, const ProblemConfig& cfg,
                       const VehicleParams& params) {
  StageOutput out;
  out.powertrain_torque = powertrain_torque;
  out.engine_torque = split.engine_torque;
  out.brake_torque = split.engine_torque - split.engine_command;
  out.fuel_rate = split.fuel_rate;
  out.bsg_power = split.bsg_power;
  out.accel = motion.accel;
  out.next.energy = motion.next_energy;
  out.travel_time = motion.travel_time;
  out.next.soc = x.soc;
  out.tag = motion.tag;
  if (motion.tag == ConstraintTag::kStall) return out;
  if (!BatteryRequestFeasible(x.soc, split.bsg_power, params)) {
    out.tag = ConstraintTag::kBatteryPower;
    return out;
  }
  const SocStep soc =
      SocTransition(x.soc, split.bsg_power, motion.travel_time, params);
  out.next.soc = soc.next_soc;
  out.battery_current = soc.total_current;
  out.fuel_mass = out.fuel_rate * out.travel_time;
  if (out.tag == ConstraintTag::kNone &&
      (out.next.soc < cfg.soc_min || out.next.soc > cfg.soc_max)) {
    out.tag = ConstraintTag::kSoc;
  }
  return out;
}

}  // namespace ecodrive
