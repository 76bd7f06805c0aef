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

// Backward dynamic programming over the spatial grid, with two control
// parameterizations:
//
//   benchmark  u = (T_eng, T_bsg) on a 2-D grid
//   DP-ECMS    u = T_pt, with the split chosen online by ECMS
//
// Infeasible cells carry +inf. Value functions are stored on a per-point
// (E, xi) grid; the E axis follows the speed envelope at each point.

#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ecodrive/ecms.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/route.hpp"
#include "ecodrive/spatial_problem.hpp"

namespace ecodrive {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolverKind { kBenchmark, kDpEcms };
const char* ToString(SolverKind kind);

enum class Interpolation { kBilinear, kNearestNode };

enum class TerminalMode {
  kHard,     // 0 inside the SoC tolerance band, +inf outside
  kPenalty,  // weight * |xi - target|
  kFree,     // 0 everywhere
  // weight * (target - xi): the SoC deficit priced as fuel at the ECMS
  // equivalence factor. DP-ECMS only; the weight is resolved at solve time
  // from lambda0 (see SocEquivalentWeight).
  kEquivalent,
};

struct TerminalSpec {
  TerminalMode mode = TerminalMode::kPenalty;
  double soc_target = 0.55;
  double tolerance = 0.005;
  double penalty_weight = 1000.0;  // s per unit SoC
};

// Cost per unit SoC of the stored energy at lambda0:
// gamma / mdot_norm * lambda0 * C_nom * V_oc(target) / Q_lhv.
double SocEquivalentWeight(double lambda0, double soc_target,
                           const ProblemConfig& cfg, const VehicleParams& params);

// Hard rule: 0 if |soc - target| <= tolerance, else +inf.
double TerminalCost(double soc, double soc_target, double tolerance);
double TerminalCost(double soc, const TerminalSpec& spec);

struct Grid2D {
  std::vector<std::vector<double>> energy;  // per point, ascending
  std::vector<double> soc;                  // shared by all points

  int points() const { return static_cast<int>(energy.size()); }
  int energy_size(int k) const {
    return static_cast<int>(energy[static_cast<std::size_t>(k)].size());
  }
  int soc_size() const { return static_cast<int>(soc.size()); }

  // Uniform in E over [v_min^2, v_max^2] at every point (one node when the
  // envelope collapses, e.g. at stops) and uniform in xi.
  static Grid2D ForRoute(const Route& route, int energy_points, int soc_points,
                         double soc_min, double soc_max);
};

// Control stored per cell. For DP-ECMS the split is the one ECMS picked.
struct PolicyEntry {
  double engine_command = 0.0;
  double bsg_torque = 0.0;
  double powertrain_torque = 0.0;
};

// Per-point arrays indexed [i * soc_size + j].
struct ValueTable {
  std::vector<std::vector<double>> values;
};
struct PolicyTable {
  std::vector<std::vector<PolicyEntry>> entries;
};

struct SolverConfig {
  ProblemConfig problem;
  ControlGrid controls;
  int energy_points = 25;
  int soc_points = 51;
  Interpolation interpolation = Interpolation::kBilinear;
  TerminalSpec terminal;
  // When > 0 the benchmark control set is every (T_pt candidate, split
  // candidate) pair instead of the (T_eng, T_bsg) grid.
  int benchmark_split_pairs = 0;
  // The one-state minimization at the actual state (BestStep) uses
  // (n - 1) * forward_refine + 1 points on every control axis. Cheap, since
  // only one state is evaluated; the backward pass keeps the base grids.
  int forward_refine = 1;
  int threads = 1;

  void Validate() const;
};

// Default grids: benchmark 25 x 51 with a 15 x 11 control grid; DP-ECMS
// 25 x 11 with 25 powertrain torques and 21 split candidates.
SolverConfig DefaultBenchmarkConfig(double gamma);
SolverConfig DefaultDpEcmsConfig(double gamma);

// Transitions out of a set of states at one stage, for every candidate
// control. Motion is shared across the SoC axis.
struct StageBatch {
  int stage = 0;
  int energy_size = 0;
  int soc_size = 0;
  int control_size = 0;
  std::vector<double> next_energy;  // [e * nc + c], NaN if infeasible
  std::vector<double> next_soc;     // [(e * ns + s) * nc + c]
  std::vector<double> cost;         // [(e * ns + s) * nc + c], +inf if infeasible
  std::vector<PolicyEntry> controls;  // same layout as cost; may be dropped

  std::size_t Index(int e, int s, int c) const {
    return (static_cast<std::size_t>(e) * soc_size + s) * control_size + c;
  }
};

// Evaluates J_{k+1} at a continuous next state.
class ValueLookup {
 public:
  // Interpolated table on (energy, soc). Values outside the hull are +inf.
  static ValueLookup Table(std::span<const double> energy,
                           std::span<const double> soc,
                           std::span<const double> values, Interpolation mode);
  // Terminal cost of the final point. In nearest mode the SoC is snapped to
  // `soc` nodes first.
  static ValueLookup Terminal(const TerminalSpec& spec,
                              std::span<const double> energy,
                              std::span<const double> soc, Interpolation mode);

  struct EnergyLocation {
    bool valid = false;
    int index = 0;
    double weight = 0.0;  // toward index + 1
  };

  EnergyLocation LocateEnergy(double energy) const;
  double Evaluate(const EnergyLocation& loc, double soc) const;
  double operator()(double energy, double soc) const {
    return Evaluate(LocateEnergy(energy), soc);
  }

 private:
  bool terminal_ = false;
  TerminalSpec spec_;
  Interpolation mode_ = Interpolation::kBilinear;
  std::span<const double> energy_;
  std::span<const double> soc_;
  std::span<const double> values_;
};

// Nearest node of `x` with the hull rules of ValueLookup; invalid when x is
// outside the hull.
struct NodeIndex {
  bool valid = false;
  int energy = 0;
  int soc = 0;
};
NodeIndex NearestNode(std::span<const double> energy,
                      std::span<const double> soc, const StateVector& x);

double InterpolateValue(const Grid2D& grid, const ValueTable& table, int k,
                        const StateVector& x, Interpolation mode);

StageBatch BuildBenchmarkBatch(int k, std::span<const double> energies,
                               std::span<const double> socs, const Route& route,
                               const SolverConfig& cfg,
                               const VehicleParams& params,
                               EvalCounters* counters = nullptr);

// SoC- and lambda-independent part of a DP-ECMS stage: motion and split
// candidates per (energy node, powertrain torque).
struct EcmsStageModel {
  int stage = 0;
  int energy_size = 0;
  int control_size = 0;
  std::vector<double> energies;
  std::vector<double> powertrain_torque;  // [e * nc + c], NaN for padding
  std::vector<Motion> motion;             // [e * nc + c]
  std::vector<std::vector<SplitCandidate>> splits;  // [e * nc + c]
};

EcmsStageModel BuildEcmsStageModel(int k, std::span<const double> energies,
                                   const Route& route, const SolverConfig& cfg,
                                   const EcmsConfig& ecms,
                                   const VehicleParams& params,
                                   EvalCounters* counters = nullptr);

StageBatch ApplyLambda(const EcmsStageModel& model, std::span<const double> socs,
                       double lambda0, const SolverConfig& cfg,
                       const EcmsConfig& ecms, const VehicleParams& params,
                       EvalCounters* counters = nullptr);

// Minimizes cost + next over controls for every (e, s) of the batch.
// `values` and `policy` are indexed [e * soc_size + s]. The policy is skipped
// when `policy` is empty or the batch carries no controls.
void Backup(const StageBatch& batch, const ValueLookup& next,
            std::span<double> values, std::span<PolicyEntry> policy);

struct Solution {
  SolverKind kind = SolverKind::kBenchmark;
  SolverConfig config;
  EcmsConfig ecms;  // DP-ECMS only
  Grid2D grid;
  ValueTable values;
  PolicyTable policy;
  EvalCounters counters;
};

Solution SolveBenchmark(const Route& route, const SolverConfig& cfg,
                        const VehicleParams& params);
Solution SolveDpEcms(const Route& route, const SolverConfig& cfg,
                     const EcmsConfig& ecms, const VehicleParams& params);

// Lookup of J_{k+1} as used by the backward pass at stage k.
ValueLookup NextStageLookup(const Solution& sol, int k);

// Initial state at the first point of the route.
StateVector InitialState(const Route& route, const ProblemConfig& cfg);

// J_1 at `x`; throws NoFeasiblePathError when it is +inf.
double QueryValue(const Solution& sol, const StateVector& x);

struct StepChoice {
  bool feasible = false;
  PolicyEntry control;
  double value = kInf;  // stage cost + next value
  double stage_cost = kInf;
  StageOutput output;
};

// Control grids of `cfg` refined by cfg.forward_refine, and the matching
// split grid of `ecms`.
SolverConfig RefinedConfig(const SolverConfig& cfg);
EcmsConfig RefinedEcms(const EcmsConfig& ecms, const SolverConfig& cfg);

// Best control at an arbitrary state of stage k against `next`, over the
// refined control grids.
StepChoice BestStep(SolverKind kind, const StateVector& x, int k,
                    const Route& route, const SolverConfig& cfg,
                    const EcmsConfig& ecms, double lambda0,
                    const ValueLookup& next, const VehicleParams& params,
                    EvalCounters* counters = nullptr);

// Re-evaluates `control` at `x` through the plant.
StageOutput ExecuteControl(SolverKind kind, const StateVector& x,
                           const PolicyEntry& control, int k, const Route& route,
                           const SolverConfig& cfg, const EcmsConfig& ecms,
                           double lambda0, const VehicleParams& params);

enum class ReplayMode {
  kReoptimize,         // one-step minimization at the actual state
  kNearestNode,        // snap to the nearest node, replay its control
  kInterpolatePolicy,  // bilinear blend of the neighbouring controls
};

struct TrajectoryStage {
  int k = 0;
  double distance = 0.0;
  StateVector state;
  PolicyEntry control;
  StageOutput output;
  double cost = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::vector<TrajectoryStage> stages;
  StateVector initial_state;
  StateVector final_state;
  double final_distance = 0.0;

  double total_fuel() const;
  double total_time() const;
  double total_cost() const;
};

// Throws NoFeasiblePathError when J_1(x1) is +inf and
// SimulationDivergenceError when the replay leaves the feasible set.
Trajectory ForwardSimulate(const Solution& sol, const Route& route,
                           const StateVector& x1, const VehicleParams& params,
                           ReplayMode mode = ReplayMode::kReoptimize);

// Columns k,d_m,v_mps,soc,T_eng_Nm,T_bsg_Nm,T_pt_Nm,fuel_kg,t_s,cost
// (+ lambda). Fuel, time and cost are cumulative up to point k.
void WriteTrajectoryCsv(std::ostream& os, const Trajectory& traj,
                        bool with_lambda = false);

}  // namespace ecodrive
