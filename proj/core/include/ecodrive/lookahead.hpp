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

// Receding-horizon DP-ECMS. Each replanning step solves N_H stages once per
// candidate equivalence factor, with the full-route DP-ECMS value table as
// terminal cost, and applies the first control of the cheapest candidate.

#pragma once

#include <map>
#include <span>
#include <vector>

#include "ecodrive/dp.hpp"

namespace ecodrive {

struct LookaheadConfig {
  int horizon = 20;             // N_H, stages
  std::vector<double> lambdas;  // ascending candidate grid
  int stride = 1;               // stages applied per plan
  int soc_points = 0;           // horizon SoC nodes, 0 = those of the base
  int threads = 1;              // horizon solves in parallel, 0 = all cores
  // Horizons that reach the route end close on weight * |xi - target|
  // instead of an equivalent (linear) base terminal, so surplus charge is
  // spent rather than carried to the end.
  bool neutral_close = true;

  void Validate(int stage_count) const;
};

// n uniform values over [center - below, center + above]. When the grid
// can hold `center` on a node it holds it exactly; n == 1 gives {center}.
std::vector<double> LambdaGrid(double center, int n, double below = 1.0,
                               double above = 2.0);

struct HorizonResult {
  double lambda = 0.0;
  double value = kInf;  // J~ at x_j, +inf when infeasible
  StepChoice first;     // first-step control at x_j
};

struct HorizonSolution {
  int stage = 0;
  std::vector<HorizonResult> results;  // one per lambda, grid order
  int selected = -1;
};

// Argmin of the horizon values, ties toward the smaller index.
// Throws NoFeasiblePathError when every value is +inf.
int SelectLambda(std::span<const double> values);

// Horizon solves against a fixed base solution. Stage models and per-lambda
// stage batches are cached while they stay inside the moving horizon.
class HorizonSolver {
 public:
  HorizonSolver(const Solution& base, const Route& route,
                const LookaheadConfig& cfg, const VehicleParams& params);

  // Swaps in a modified route (e.g. after a speed cap) and flushes caches.
  void SetRoute(const Route& route);
  const Route& route() const { return route_; }

  // Solves every lambda of the grid at stage j from state x.
  HorizonSolution Solve(int j, const StateVector& x);

  // After Solve(j, ...), the best control at stage k in [j, end) against
  // the horizon tables of lambda index i.
  StepChoice Step(int i, int k, const StateVector& x);

  // Horizon value table of lambda i at point k in (j, end), [e * ns + s].
  std::span<const double> Table(int i, int k) const;

  int plan_stage() const { return plan_stage_; }
  int plan_end() const { return plan_end_; }
  const EvalCounters& counters() const { return counters_; }
  int flushes() const { return flushes_; }

 private:
  struct LambdaState {
    std::map<int, StageBatch> batches;
    std::vector<std::vector<double>> tables;  // point plan_stage_ + 1 + t
    EvalCounters counters;
  };

  void Prepare(int j);
  void BackwardPass(int i);
  ValueLookup NextLookup(int i, int k) const;
  TerminalSpec ClosingTerminal() const;
  EcmsConfig EcmsFor(int i) const;

  const Solution& base_;
  Route route_;
  LookaheadConfig cfg_;
  VehicleParams params_;
  Grid2D grid_;
  TerminalSpec closing_;
  std::map<int, EcmsStageModel> models_;
  std::vector<LambdaState> lambdas_;
  int plan_stage_ = -1;
  int plan_end_ = -1;
  EvalCounters counters_;
  int flushes_ = 0;
};

struct LookaheadRun {
  Trajectory trajectory;  // stage lambda holds the selected factor
  std::vector<double> lambda_trace;
  std::vector<int> replan_stages;
  EvalCounters counters;
  int cache_flushes = 0;
};

// Throws ValidationError when `gamma` differs from the base solution's,
// NoFeasiblePathError when every horizon is infeasible at some stage and
// SimulationDivergenceError when a selected control fails in the plant.
LookaheadRun RunRecedingHorizon(const Solution& base, const Route& route,
                                const StateVector& x1, double gamma,
                                const LookaheadConfig& cfg,
                                const VehicleParams& params,
                                const std::vector<SpeedCap>& caps = {});

}  // namespace ecodrive
