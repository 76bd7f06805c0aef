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

#include "ecodrive/dp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "ecodrive/errors.hpp"
#include "ecodrive/parallel.hpp"

namespace ecodrive {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSocHullSlack = 1e-12;

double EnergyHullSlack(double e) { return 1e-9 * std::max(1.0, std::abs(e)); }

struct AxisLocation {
  int index = 0;
  double weight = 0.0;
};

// Bracketing interval of x on an ascending axis with at least two nodes.
AxisLocation LocateOnAxis(std::span<const double> axis, double x) {
  const int n = static_cast<int>(axis.size());
  auto it = std::upper_bound(axis.begin(), axis.end(), x);
  int i = static_cast<int>(it - axis.begin()) - 1;
  i = std::clamp(i, 0, n - 2);
  const double a = axis[static_cast<std::size_t>(i)];
  const double b = axis[static_cast<std::size_t>(i) + 1];
  AxisLocation loc;
  loc.index = i;
  loc.weight = std::clamp((x - a) / (b - a), 0.0, 1.0);
  return loc;
}

int NearestOnAxis(std::span<const double> axis, double x) {
  if (axis.size() == 1) return 0;
  const AxisLocation loc = LocateOnAxis(axis, x);
  return loc.weight <= 0.5 ? loc.index : loc.index + 1;
}

std::vector<ControlBenchmark> BenchmarkControlSet(const StageContext& ctx,
                                                  const SolverConfig& cfg,
                                                  const VehicleParams& params) {
  if (cfg.benchmark_split_pairs <= 0) {
    return BenchmarkControls(ctx, cfg.controls, params);
  }
  std::vector<ControlBenchmark> out;
  for (double t : PowertrainTorqueCandidates(ctx, cfg.controls, params)) {
    for (const SplitCandidate& c :
         EnumerateSplits(ctx, t, cfg.benchmark_split_pairs, params)) {
      out.push_back({c.engine_command, c.bsg_torque});
    }
  }
  return out;
}

}  // namespace

const char* ToString(SolverKind kind) {
  return kind == SolverKind::kBenchmark ? "benchmark" : "dp-ecms";
}

double TerminalCost(double soc, double soc_target, double tolerance) {
  return std::abs(soc - soc_target) <= tolerance ? 0.0 : kInf;
}

double TerminalCost(double soc, const TerminalSpec& spec) {
  switch (spec.mode) {
    case TerminalMode::kHard:
      return TerminalCost(soc, spec.soc_target, spec.tolerance);
    case TerminalMode::kPenalty:
      return spec.penalty_weight * std::abs(soc - spec.soc_target);
    case TerminalMode::kFree:
      return 0.0;
    case TerminalMode::kEquivalent:
      return spec.penalty_weight * (spec.soc_target - soc);
  }
  return kInf;
}

double SocEquivalentWeight(double lambda0, double soc_target,
                           const ProblemConfig& cfg, const VehicleParams& params) {
  return cfg.gamma / cfg.fuel_norm * lambda0 * params.nominal_capacity *
         params.open_circuit_voltage(soc_target) / params.fuel_lhv;
}

Grid2D Grid2D::ForRoute(const Route& route, int energy_points, int soc_points,
                        double soc_min, double soc_max) {
  Grid2D grid;
  grid.energy.reserve(route.points.size());
  for (const RoutePoint& p : route.points) {
    grid.energy.push_back(
        Linspace(p.v_min * p.v_min, p.v_max * p.v_max, energy_points));
  }
  grid.soc = Linspace(soc_min, soc_max, soc_points);
  return grid;
}

void SolverConfig::Validate() const {
  problem.Validate();
  if (energy_points < 1 || soc_points < 2) {
    throw ValidationError("solver: need >= 1 energy node and >= 2 SoC nodes");
  }
  if (controls.engine_points < 1 || controls.bsg_points < 1 ||
      controls.powertrain_points < 1) {
    throw ValidationError("solver: control grids must be non-empty");
  }
  if (forward_refine < 1) throw ValidationError("solver: forward_refine must be >= 1");
  if (terminal.tolerance < 0.0 || !(terminal.penalty_weight > 0.0)) {
    throw ValidationError("solver: bad terminal settings");
  }
}

SolverConfig DefaultBenchmarkConfig(double gamma) {
  SolverConfig cfg;
  cfg.problem.gamma = gamma;
  cfg.soc_points = 51;
  cfg.terminal.soc_target = cfg.problem.soc_initial;
  cfg.terminal.tolerance = cfg.problem.soc_tolerance;
  cfg.forward_refine = 2;
  return cfg;
}

SolverConfig DefaultDpEcmsConfig(double gamma) {
  SolverConfig cfg = DefaultBenchmarkConfig(gamma);
  cfg.soc_points = 11;
  // Neutrality comes from lambda0. A heavy |dxi| kink on the 0.05-wide SoC
  // grid biased the final SoC; pricing the deficit at lambda0 keeps the
  // value table consistent with the split rule, which the lookahead needs.
  cfg.terminal.mode = TerminalMode::kEquivalent;
  return cfg;
}

ValueLookup ValueLookup::Table(std::span<const double> energy,
                               std::span<const double> soc,
                               std::span<const double> values,
                               Interpolation mode) {
  ValueLookup v;
  v.energy_ = energy;
  v.soc_ = soc;
  v.values_ = values;
  v.mode_ = mode;
  return v;
}

ValueLookup ValueLookup::Terminal(const TerminalSpec& spec,
                                  std::span<const double> energy,
                                  std::span<const double> soc,
                                  Interpolation mode) {
  ValueLookup v;
  v.terminal_ = true;
  v.spec_ = spec;
  v.energy_ = energy;
  v.soc_ = soc;
  v.mode_ = mode;
  return v;
}

ValueLookup::EnergyLocation ValueLookup::LocateEnergy(double energy) const {
  EnergyLocation loc;
  const double lo = energy_.front();
  const double hi = energy_.back();
  if (energy < lo - EnergyHullSlack(lo) || energy > hi + EnergyHullSlack(hi)) {
    return loc;
  }
  loc.valid = true;
  if (energy_.size() == 1) return loc;
  const AxisLocation a = LocateOnAxis(energy_, energy);
  loc.index = a.index;
  loc.weight = a.weight;
  if (mode_ == Interpolation::kNearestNode) {
    if (loc.weight > 0.5) ++loc.index;
    loc.weight = 0.0;
  }
  return loc;
}

namespace {

bool SocInHull(std::span<const double> axis, double soc) {
  return soc >= axis.front() - kSocHullSlack && soc <= axis.back() + kSocHullSlack;
}

int NearestSoc(const AxisLocation& s) {
  return s.weight <= 0.5 ? s.index : s.index + 1;
}

}  // namespace

double ValueLookup::Evaluate(const EnergyLocation& loc, double soc) const {
  if (!loc.valid) return kInf;
  if (!SocInHull(soc_, soc)) return kInf;
  const AxisLocation s = LocateOnAxis(soc_, soc);
  if (terminal_) {
    if (mode_ == Interpolation::kNearestNode) {
      return TerminalCost(soc_[static_cast<std::size_t>(NearestSoc(s))], spec_);
    }
    return TerminalCost(soc, spec_);
  }
  const std::size_t ns = soc_.size();
  if (mode_ == Interpolation::kNearestNode) {
    const int j = NearestSoc(s);
    return values_[static_cast<std::size_t>(loc.index) * ns +
                   static_cast<std::size_t>(j)];
  }
  const double we = loc.weight;
  const double ws = s.weight;
  const double w[4] = {(1 - we) * (1 - ws), we * (1 - ws), (1 - we) * ws,
                       we * ws};
  const int di[4] = {0, 1, 0, 1};
  const int dj[4] = {0, 0, 1, 1};
  double sum = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (w[c] == 0.0) continue;
    const double v = values_[static_cast<std::size_t>(loc.index + di[c]) * ns +
                             static_cast<std::size_t>(s.index + dj[c])];
    if (v == kInf) return kInf;
    sum += w[c] * v;
  }
  return sum;
}

NodeIndex NearestNode(std::span<const double> energy,
                      std::span<const double> soc, const StateVector& x) {
  NodeIndex out;
  const ValueLookup lookup =
      ValueLookup::Table(energy, soc, {}, Interpolation::kNearestNode);
  const ValueLookup::EnergyLocation loc = lookup.LocateEnergy(x.energy);
  if (!loc.valid || !SocInHull(soc, x.soc)) return out;
  out.valid = true;
  out.energy = loc.index;
  out.soc = NearestSoc(LocateOnAxis(soc, x.soc));
  return out;
}

double InterpolateValue(const Grid2D& grid, const ValueTable& table, int k,
                        const StateVector& x, Interpolation mode) {
  const auto& e = grid.energy[static_cast<std::size_t>(k)];
  const auto& v = table.values[static_cast<std::size_t>(k)];
  return ValueLookup::Table(e, grid.soc, v, mode)(x.energy, x.soc);
}

StageBatch BuildBenchmarkBatch(int k, std::span<const double> energies,
                               std::span<const double> socs, const Route& route,
                               const SolverConfig& cfg,
                               const VehicleParams& params,
                               EvalCounters* counters) {
  const int ne = static_cast<int>(energies.size());
  const int ns = static_cast<int>(socs.size());
  std::vector<StageContext> ctx(static_cast<std::size_t>(ne));
  std::vector<std::vector<ControlBenchmark>> controls(ctx.size());
  int nc = 0;
  std::uint64_t evaluated = 0;
  for (int e = 0; e < ne; ++e) {
    ctx[e] = MakeStageContext(energies[e], k, route, params);
    controls[e] = BenchmarkControlSet(ctx[e], cfg, params);
    nc = std::max(nc, static_cast<int>(controls[e].size()));
    evaluated += controls[e].size() * static_cast<std::uint64_t>(ns);
  }
  StageBatch b;
  b.stage = k;
  b.energy_size = ne;
  b.soc_size = ns;
  b.control_size = nc;
  const std::size_t cells = static_cast<std::size_t>(ne) * ns * nc;
  b.next_energy.assign(static_cast<std::size_t>(ne) * nc, kNaN);
  b.next_soc.assign(cells, kNaN);
  b.cost.assign(cells, kInf);
  b.controls.assign(cells, PolicyEntry{});
  const ProblemConfig& pc = cfg.problem;

  ParallelFor(ne, cfg.threads, [&](int e) {
    const StageContext& c = ctx[e];
    for (int q = 0; q < static_cast<int>(controls[e].size()); ++q) {
      const ControlBenchmark& u = controls[e][q];
      const double t_pt = u.engine_command + params.belt_ratio * u.bsg_torque;
      const CrankSplit split = SplitCrankTorque(u.engine_command, c.limits);
      const double fuel = FuelRate(split.engine_torque, c.engine.speed, params);
      const double power = BsgElectricalPower(u.bsg_torque, c.engine.speed, params);
      const Motion m = MotionStep(c, t_pt, pc, params);
      const PolicyEntry entry{u.engine_command, u.bsg_torque, t_pt};
      for (int s = 0; s < ns; ++s) b.controls[b.Index(e, s, q)] = entry;
      if (!m.feasible()) continue;
      b.next_energy[static_cast<std::size_t>(e) * nc + q] = m.next_energy;
      const double g = StageCostValue(fuel, m.travel_time, pc.gamma, pc.fuel_norm);
      for (int s = 0; s < ns; ++s) {
        if (!BatteryRequestFeasible(socs[s], power, params)) continue;
        const SocStep st = SocTransition(socs[s], power, m.travel_time, params);
        if (st.next_soc < pc.soc_min || st.next_soc > pc.soc_max) continue;
        const std::size_t idx = b.Index(e, s, q);
        b.next_soc[idx] = st.next_soc;
        b.cost[idx] = g;
      }
    }
  });
  if (counters != nullptr) counters->full_plant += evaluated;
  return b;
}

EcmsStageModel BuildEcmsStageModel(int k, std::span<const double> energies,
                                   const Route& route, const SolverConfig& cfg,
                                   const EcmsConfig& ecms,
                                   const VehicleParams& params,
                                   EvalCounters* counters) {
  const int ne = static_cast<int>(energies.size());
  std::vector<StageContext> ctx(static_cast<std::size_t>(ne));
  std::vector<std::vector<double>> torques(ctx.size());
  int nc = 0;
  for (int e = 0; e < ne; ++e) {
    ctx[e] = MakeStageContext(energies[e], k, route, params);
    torques[e] = PowertrainTorqueCandidates(ctx[e], cfg.controls, params);
    nc = std::max(nc, static_cast<int>(torques[e].size()));
  }
  EcmsStageModel model;
  model.stage = k;
  model.energy_size = ne;
  model.control_size = nc;
  model.energies.assign(energies.begin(), energies.end());
  const std::size_t n = static_cast<std::size_t>(ne) * nc;
  model.powertrain_torque.assign(n, kNaN);
  model.motion.assign(n, Motion{});
  model.splits.assign(n, {});
  ParallelFor(ne, cfg.threads, [&](int e) {
    for (int q = 0; q < static_cast<int>(torques[e].size()); ++q) {
      const std::size_t idx = static_cast<std::size_t>(e) * nc + q;
      const double t_pt = torques[e][q];
      model.powertrain_torque[idx] = t_pt;
      model.motion[idx] = MotionStep(ctx[e], t_pt, cfg.problem, params);
      if (!model.motion[idx].feasible()) continue;
      model.splits[idx] = EnumerateSplits(ctx[e], t_pt, ecms.split_points, params);
    }
  });
  if (counters != nullptr) {
    for (const auto& s : model.splits) counters->reduced_plant += s.size();
  }
  return model;
}

StageBatch ApplyLambda(const EcmsStageModel& model, std::span<const double> socs,
                       double lambda0, const SolverConfig& cfg,
                       const EcmsConfig& ecms, const VehicleParams& params,
                       EvalCounters* counters) {
  const int ne = model.energy_size;
  const int ns = static_cast<int>(socs.size());
  const int nc = model.control_size;
  StageBatch b;
  b.stage = model.stage;
  b.energy_size = ne;
  b.soc_size = ns;
  b.control_size = nc;
  const std::size_t cells = static_cast<std::size_t>(ne) * ns * nc;
  b.next_energy.assign(static_cast<std::size_t>(ne) * nc, kNaN);
  b.next_soc.assign(cells, kNaN);
  b.cost.assign(cells, kInf);
  b.controls.assign(cells, PolicyEntry{});
  std::vector<double> factor(static_cast<std::size_t>(ns));
  for (int s = 0; s < ns; ++s) factor[s] = EquivalenceFactor(socs[s], lambda0, ecms);
  const ProblemConfig& pc = cfg.problem;
  std::uint64_t evaluated = 0;
  for (int e = 0; e < ne; ++e) {
    for (int q = 0; q < nc; ++q) {
      const std::size_t mq = static_cast<std::size_t>(e) * nc + q;
      const double t_pt = model.powertrain_torque[mq];
      if (std::isnan(t_pt)) continue;
      evaluated += static_cast<std::uint64_t>(ns);
      const Motion& m = model.motion[mq];
      if (!m.feasible()) continue;
      b.next_energy[mq] = m.next_energy;
      const auto& splits = model.splits[mq];
      for (int s = 0; s < ns; ++s) {
        const PowerWindow window = SocPowerWindow(socs[s], m.travel_time, pc, params);
        const int pick = SelectSplit(splits, factor[s], window);
        if (pick < 0) continue;
        const SplitCandidate& c = splits[static_cast<std::size_t>(pick)];
        const std::size_t idx = b.Index(e, s, q);
        b.controls[idx] = PolicyEntry{c.engine_command, c.bsg_torque, t_pt};
        if (!BatteryRequestFeasible(socs[s], c.bsg_power, params)) continue;
        const SocStep st = SocTransition(socs[s], c.bsg_power, m.travel_time, params);
        if (st.next_soc < pc.soc_min || st.next_soc > pc.soc_max) continue;
        b.next_soc[idx] = st.next_soc;
        b.cost[idx] =
            StageCostValue(c.fuel_rate, m.travel_time, pc.gamma, pc.fuel_norm);
      }
    }
  }
  if (counters != nullptr) counters->full_plant += evaluated;
  return b;
}

void Backup(const StageBatch& batch, const ValueLookup& next,
            std::span<double> values, std::span<PolicyEntry> policy) {
  const int ne = batch.energy_size;
  const int ns = batch.soc_size;
  const int nc = batch.control_size;
  std::fill(values.begin(), values.end(), kInf);
  const bool with_policy = !policy.empty() && !batch.controls.empty();
  for (int e = 0; e < ne; ++e) {
    for (int q = 0; q < nc; ++q) {
      const double ep = batch.next_energy[static_cast<std::size_t>(e) * nc + q];
      if (std::isnan(ep)) continue;
      const ValueLookup::EnergyLocation loc = next.LocateEnergy(ep);
      if (!loc.valid) continue;
      for (int s = 0; s < ns; ++s) {
        const std::size_t idx = batch.Index(e, s, q);
        const double g = batch.cost[idx];
        if (g == kInf) continue;
        const double total = g + next.Evaluate(loc, batch.next_soc[idx]);
        const std::size_t cell = static_cast<std::size_t>(e) * ns + s;
        if (total < values[cell]) {
          values[cell] = total;
          if (with_policy) policy[cell] = batch.controls[idx];
        }
      }
    }
  }
}

namespace {

Solution Solve(SolverKind kind, const Route& route, const SolverConfig& cfg,
               const EcmsConfig& ecms, const VehicleParams& params) {
  cfg.Validate();
  if (kind == SolverKind::kDpEcms) {
    ecms.Validate(cfg.problem.soc_min, cfg.problem.soc_max);
  }
  if (route.size() < 2) throw ValidationError("route needs at least two points");
  Solution sol;
  sol.kind = kind;
  sol.config = cfg;
  if (cfg.terminal.mode == TerminalMode::kEquivalent) {
    if (kind != SolverKind::kDpEcms) {
      throw ValidationError("solver: equivalent terminal needs an equivalence factor");
    }
    sol.config.terminal.penalty_weight = SocEquivalentWeight(
        ecms.lambda0, cfg.terminal.soc_target, cfg.problem, params);
  }
  sol.ecms = ecms;
  sol.grid = Grid2D::ForRoute(route, cfg.energy_points, cfg.soc_points,
                              cfg.problem.soc_min, cfg.problem.soc_max);
  const int n = route.size();
  const int ns = sol.grid.soc_size();
  sol.values.values.resize(static_cast<std::size_t>(n));
  sol.policy.entries.resize(static_cast<std::size_t>(n));
  {
    const int ne = sol.grid.energy_size(n - 1);
    auto& last = sol.values.values.back();
    last.resize(static_cast<std::size_t>(ne) * ns);
    for (int i = 0; i < ne; ++i) {
      for (int j = 0; j < ns; ++j) {
        last[static_cast<std::size_t>(i) * ns + j] =
            TerminalCost(sol.grid.soc[static_cast<std::size_t>(j)],
                         sol.config.terminal);
      }
    }
    sol.policy.entries.back().resize(last.size());
  }
  for (int k = n - 2; k >= 0; --k) {
    const auto& energies = sol.grid.energy[static_cast<std::size_t>(k)];
    StageBatch batch =
        kind == SolverKind::kBenchmark
            ? BuildBenchmarkBatch(k, energies, sol.grid.soc, route, cfg, params,
                                  &sol.counters)
            : ApplyLambda(BuildEcmsStageModel(k, energies, route, cfg, ecms,
                                              params, &sol.counters),
                          sol.grid.soc, ecms.lambda0, cfg, ecms, params,
                          &sol.counters);
    auto& values = sol.values.values[static_cast<std::size_t>(k)];
    auto& policy = sol.policy.entries[static_cast<std::size_t>(k)];
    values.resize(energies.size() * static_cast<std::size_t>(ns));
    policy.resize(values.size());
    Backup(batch, NextStageLookup(sol, k), values, policy);
  }
  return sol;
}

}  // namespace

Solution SolveBenchmark(const Route& route, const SolverConfig& cfg,
                        const VehicleParams& params) {
  return Solve(SolverKind::kBenchmark, route, cfg, EcmsConfig{}, params);
}

Solution SolveDpEcms(const Route& route, const SolverConfig& cfg,
                     const EcmsConfig& ecms, const VehicleParams& params) {
  return Solve(SolverKind::kDpEcms, route, cfg, ecms, params);
}

ValueLookup NextStageLookup(const Solution& sol, int k) {
  const int last = sol.grid.points() - 1;
  const auto& energy = sol.grid.energy[static_cast<std::size_t>(k + 1)];
  if (k + 1 == last) {
    return ValueLookup::Terminal(sol.config.terminal, energy, sol.grid.soc,
                                 sol.config.interpolation);
  }
  return ValueLookup::Table(energy, sol.grid.soc,
                            sol.values.values[static_cast<std::size_t>(k + 1)],
                            sol.config.interpolation);
}

StateVector InitialState(const Route& route, const ProblemConfig& cfg) {
  const double v = route[0].v_min;
  return StateVector{v * v, cfg.soc_initial};
}

double QueryValue(const Solution& sol, const StateVector& x) {
  const double v =
      InterpolateValue(sol.grid, sol.values, 0, x, sol.config.interpolation);
  if (v == kInf) {
    throw NoFeasiblePathError("no feasible path from the initial state");
  }
  return v;
}

StageOutput ExecuteControl(SolverKind kind, const StateVector& x,
                           const PolicyEntry& control, int k, const Route& route,
                           const SolverConfig& cfg, const EcmsConfig& ecms,
                           double lambda0, const VehicleParams& params) {
  if (kind == SolverKind::kBenchmark) {
    return Transition(x, ControlBenchmark{control.engine_command,
                                          control.bsg_torque},
                      k, route, cfg.problem, params);
  }
  const StageContext ctx = MakeStageContext(x.energy, k, route, params);
  const Motion m = MotionStep(ctx, control.powertrain_torque, cfg.problem, params);
  const std::vector<SplitCandidate> splits =
      EnumerateSplits(ctx, control.powertrain_torque, ecms.split_points, params);
  const int pick = SelectSplit(
      splits, EquivalenceFactor(x.soc, lambda0, ecms),
      m.feasible() ? SocPowerWindow(x.soc, m.travel_time, cfg.problem, params)
                   : PowerWindow{});
  if (pick < 0) {
    StageOutput out;
    out.powertrain_torque = control.powertrain_torque;
    out.tag = ConstraintTag::kTorque;
    return out;
  }
  return ApplySplit(x, control.powertrain_torque, m,
                    splits[static_cast<std::size_t>(pick)], cfg.problem, params);
}

namespace {

int Refine(int n, int r) { return n <= 1 ? n : (n - 1) * r + 1; }

}  // namespace

SolverConfig RefinedConfig(const SolverConfig& cfg) {
  SolverConfig out = cfg;
  const int r = cfg.forward_refine;
  out.controls.engine_points = Refine(cfg.controls.engine_points, r);
  out.controls.brake_points = cfg.controls.brake_points * r;
  out.controls.bsg_points = Refine(cfg.controls.bsg_points, r);
  out.controls.powertrain_points = Refine(cfg.controls.powertrain_points, r);
  out.benchmark_split_pairs = Refine(cfg.benchmark_split_pairs, r);
  out.forward_refine = 1;
  return out;
}

EcmsConfig RefinedEcms(const EcmsConfig& ecms, const SolverConfig& cfg) {
  EcmsConfig out = ecms;
  out.split_points = Refine(ecms.split_points, cfg.forward_refine);
  return out;
}

StepChoice BestStep(SolverKind kind, const StateVector& x, int k,
                    const Route& route, const SolverConfig& cfg,
                    const EcmsConfig& ecms, double lambda0,
                    const ValueLookup& next, const VehicleParams& params,
                    EvalCounters* counters) {
  SolverConfig one = RefinedConfig(cfg);
  one.threads = 1;
  const EcmsConfig fine = RefinedEcms(ecms, cfg);
  const double energies[] = {x.energy};
  const double socs[] = {x.soc};
  const StageBatch batch =
      kind == SolverKind::kBenchmark
          ? BuildBenchmarkBatch(k, energies, socs, route, one, params, counters)
          : ApplyLambda(BuildEcmsStageModel(k, energies, route, one, fine, params,
                                            counters),
                        socs, lambda0, one, fine, params, counters);
  double value = kInf;
  PolicyEntry control;
  Backup(batch, next, std::span<double>(&value, 1),
         std::span<PolicyEntry>(&control, 1));
  StepChoice choice;
  if (value == kInf) return choice;
  choice.control = control;
  choice.value = value;
  choice.output =
      ExecuteControl(kind, x, control, k, route, one, fine, lambda0, params);
  choice.feasible = choice.output.feasible();
  choice.stage_cost =
      StageCost(choice.output, cfg.problem.gamma, cfg.problem.fuel_norm);
  return choice;
}

namespace {

// Weighted blend of the finite neighbouring policy entries of stage k.
bool BlendPolicy(const Solution& sol, int k, const StateVector& x,
                 PolicyEntry* out) {
  const auto& energy = sol.grid.energy[static_cast<std::size_t>(k)];
  const auto& soc = sol.grid.soc;
  const auto& values = sol.values.values[static_cast<std::size_t>(k)];
  const auto& policy = sol.policy.entries[static_cast<std::size_t>(k)];
  AxisLocation le;
  if (energy.size() > 1) le = LocateOnAxis(energy, x.energy);
  const AxisLocation ls = LocateOnAxis(soc, x.soc);
  const std::size_t ns = soc.size();
  double wsum = 0.0;
  PolicyEntry acc;
  for (int di = 0; di < 2; ++di) {
    for (int dj = 0; dj < 2; ++dj) {
      const double w = (di ? le.weight : 1 - le.weight) *
                       (dj ? ls.weight : 1 - ls.weight);
      if (w == 0.0) continue;
      const std::size_t cell =
          static_cast<std::size_t>(le.index + di) * ns + (ls.index + dj);
      if (values[cell] == kInf) continue;
      acc.engine_command += w * policy[cell].engine_command;
      acc.bsg_torque += w * policy[cell].bsg_torque;
      acc.powertrain_torque += w * policy[cell].powertrain_torque;
      wsum += w;
    }
  }
  if (wsum == 0.0) return false;
  out->engine_command = acc.engine_command / wsum;
  out->bsg_torque = acc.bsg_torque / wsum;
  out->powertrain_torque = acc.powertrain_torque / wsum;
  return true;
}

}  // namespace

Trajectory ForwardSimulate(const Solution& sol, const Route& route,
                           const StateVector& x1, const VehicleParams& params,
                           ReplayMode mode) {
  QueryValue(sol, x1);
  const SolverConfig& cfg = sol.config;
  const double lambda0 = sol.ecms.lambda0;
  Trajectory traj;
  traj.initial_state = x1;
  StateVector x = x1;
  const int n = route.size();
  for (int k = 0; k < n - 1; ++k) {
    TrajectoryStage st;
    st.k = k;
    st.distance = route[k].distance;
    if (mode == ReplayMode::kReoptimize) {
      const StepChoice choice = BestStep(sol.kind, x, k, route, cfg, sol.ecms,
                                         lambda0, NextStageLookup(sol, k), params);
      if (!choice.feasible) {
        throw SimulationDivergenceError(k, "no-feasible-control");
      }
      st.state = x;
      st.control = choice.control;
      st.output = choice.output;
    } else if (mode == ReplayMode::kNearestNode) {
      const auto& energy = sol.grid.energy[static_cast<std::size_t>(k)];
      const int i = NearestOnAxis(energy, x.energy);
      const int j = NearestOnAxis(sol.grid.soc, x.soc);
      const std::size_t cell =
          static_cast<std::size_t>(i) * sol.grid.soc_size() + j;
      if (sol.values.values[static_cast<std::size_t>(k)][cell] == kInf) {
        throw SimulationDivergenceError(k, "infeasible-node");
      }
      st.state = StateVector{energy[static_cast<std::size_t>(i)],
                             sol.grid.soc[static_cast<std::size_t>(j)]};
      st.control = sol.policy.entries[static_cast<std::size_t>(k)][cell];
      st.output = ExecuteControl(sol.kind, st.state, st.control, k, route, cfg,
                                 sol.ecms, lambda0, params);
    } else {
      PolicyEntry u;
      if (!BlendPolicy(sol, k, x, &u)) {
        throw SimulationDivergenceError(k, "infeasible-node");
      }
      const StageContext ctx = MakeStageContext(x.energy, k, route, params);
      if (sol.kind == SolverKind::kBenchmark) {
        u.engine_command = std::clamp(u.engine_command, EngineCommandMin(ctx),
                                      EngineCommandMax(ctx));
        u.bsg_torque =
            std::clamp(u.bsg_torque, ctx.limits.bsg_min, ctx.limits.bsg_max);
        u.powertrain_torque = u.engine_command + params.belt_ratio * u.bsg_torque;
      } else {
        u.powertrain_torque =
            std::clamp(u.powertrain_torque, PowertrainTorqueMin(ctx, params),
                       PowertrainTorqueMax(ctx, params));
      }
      st.state = x;
      st.control = u;
      st.output = ExecuteControl(sol.kind, x, u, k, route, cfg, sol.ecms,
                                 lambda0, params);
    }
    if (!st.output.feasible()) {
      throw SimulationDivergenceError(k, ToString(st.output.tag));
    }
    st.cost = StageCost(st.output, cfg.problem.gamma, cfg.problem.fuel_norm);
    st.lambda = sol.kind == SolverKind::kDpEcms ? lambda0 : kNaN;
    x = st.output.next;
    traj.stages.push_back(st);
  }
  traj.final_state = x;
  traj.final_distance = route[n - 1].distance;
  return traj;
}

double Trajectory::total_fuel() const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.output.fuel_mass;
  return sum;
}

double Trajectory::total_time() const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.output.travel_time;
  return sum;
}

double Trajectory::total_cost() const {
  double sum = 0.0;
  for (const auto& s : stages) sum += s.cost;
  return sum;
}

void WriteTrajectoryCsv(std::ostream& os, const Trajectory& traj,
                        bool with_lambda) {
  os << "k,d_m,v_mps,soc,T_eng_Nm,T_bsg_Nm,T_pt_Nm,fuel_kg,t_s,cost";
  if (with_lambda) os << ",lambda";
  os << '\n';
  os << std::setprecision(10);
  double fuel = 0.0;
  double time = 0.0;
  double cost = 0.0;
  for (const auto& s : traj.stages) {
    os << s.k << ',' << s.distance << ',' << s.state.speed() << ','
       << s.state.soc << ',' << s.control.engine_command << ','
       << s.control.bsg_torque << ',' << s.control.powertrain_torque << ','
       << fuel << ',' << time << ',' << cost;
    if (with_lambda) os << ',' << s.lambda;
    os << '\n';
    fuel += s.output.fuel_mass;
    time += s.output.travel_time;
    cost += s.cost;
  }
  os << traj.stages.size() << ',' << traj.final_distance << ','
     << traj.final_state.speed() << ',' << traj.final_state.soc
     << ",0,0,0," << fuel << ',' << time << ',' << cost;
  if (with_lambda) os << ",";
  os << '\n';
}

}  // namespace ecodrive
