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

#include "ecodrive/lookahead.hpp"

#include <algorithm>
#include <cmath>

#include "ecodrive/errors.hpp"
#include "ecodrive/parallel.hpp"

namespace ecodrive {

void LookaheadConfig::Validate(int stage_count) const {
  if (horizon < 2) throw ValidationError("lookahead: horizon must be >= 2");
  if (stage_count < 1) throw ValidationError("lookahead: route has no stages");
  if (lambdas.empty()) throw ValidationError("lookahead: empty lambda grid");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !std::isfinite(lambdas[i])) {
      throw ValidationError("lookahead: lambda values must be positive");
    }
    if (i > 0 && !(lambdas[i] > lambdas[i - 1])) {
      throw ValidationError("lookahead: lambda grid must be strictly ascending");
    }
  }
  if (stride < 1 || stride > horizon) {
    throw ValidationError("lookahead: stride must be in [1, horizon]");
  }
}

std::vector<double> LambdaGrid(double center, int n, double below,
                               double above) {
  if (n < 1) throw ValidationError("lambda grid: need n >= 1");
  if (n == 1) return {center};
  if (!(below >= 0.0) || !(above >= 0.0) || !(below + above > 0.0)) {
    throw ValidationError("lambda grid: bad extent");
  }
  if (!(center - below > 0.0)) {
    throw ValidationError("lambda grid: lower end must stay positive");
  }
  const double step = (below + above) / (n - 1);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = center - below + i * step;
  const double k = std::round(below / step);
  if (std::abs(k * step - below) <= 1e-9 * step && k >= 0 && k < n) {
    out[static_cast<std::size_t>(k)] = center;
  }
  return out;
}

int SelectLambda(std::span<const double> values) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(values.size()); ++i) {
    if (values[i] == kInf) continue;
    if (best < 0 || values[i] < values[best]) best = i;
  }
  if (best < 0) {
    throw NoFeasiblePathError("lookahead: every horizon solve is infeasible");
  }
  return best;
}

HorizonSolver::HorizonSolver(const Solution& base, const Route& route,
                             const LookaheadConfig& cfg,
                             const VehicleParams& params)
    : base_(base), cfg_(cfg), params_(params) {
  if (base.kind != SolverKind::kDpEcms) {
    throw ValidationError("lookahead: base solution must be DP-ECMS");
  }
  if (route.size() != base.grid.points()) {
    throw ValidationError("lookahead: route does not match the base grid");
  }
  cfg_.Validate(route.stage_count());
  closing_ = ClosingTerminal();
  lambdas_.resize(cfg_.lambdas.size());
  route_ = route;
  grid_ = Grid2D::ForRoute(route_, base_.config.energy_points,
                           cfg_.soc_points > 0 ? cfg_.soc_points
                                               : base_.config.soc_points,
                           base_.config.problem.soc_min,
                           base_.config.problem.soc_max);
}

void HorizonSolver::SetRoute(const Route& route) {
  if (route.size() != base_.grid.points()) {
    throw ValidationError("lookahead: route does not match the base grid");
  }
  route_ = route;
  grid_ = Grid2D::ForRoute(route_, base_.config.energy_points,
                           cfg_.soc_points > 0 ? cfg_.soc_points
                                               : base_.config.soc_points,
                           base_.config.problem.soc_min,
                           base_.config.problem.soc_max);
  models_.clear();
  for (auto& ls : lambdas_) {
    ls.batches.clear();
    ls.tables.clear();
  }
  plan_stage_ = -1;
  plan_end_ = -1;
  ++flushes_;
}

TerminalSpec HorizonSolver::ClosingTerminal() const {
  TerminalSpec t = base_.config.terminal;
  if (cfg_.neutral_close && t.mode == TerminalMode::kEquivalent) {
    t.mode = TerminalMode::kPenalty;  // same weight, surplus now costs
  }
  return t;
}

EcmsConfig HorizonSolver::EcmsFor(int i) const {
  EcmsConfig e = base_.ecms;
  e.lambda0 = cfg_.lambdas[static_cast<std::size_t>(i)];
  return e;
}

void HorizonSolver::Prepare(int j) {
  const int last = route_.size() - 1;
  if (j < 0 || j >= last) throw ValidationError("lookahead: stage out of range");
  plan_stage_ = j;
  plan_end_ = std::min(j + cfg_.horizon, last);
  // Stage j itself is handled by BestStep at the actual state.
  models_.erase(models_.begin(), models_.lower_bound(j + 1));
  for (auto& ls : lambdas_) {
    ls.batches.erase(ls.batches.begin(), ls.batches.lower_bound(j + 1));
  }
  std::vector<int> missing;
  for (int k = j + 1; k < plan_end_; ++k) {
    if (models_.find(k) == models_.end()) missing.push_back(k);
  }
  SolverConfig one = base_.config;
  one.threads = 1;
  std::vector<EcmsStageModel> built(missing.size());
  std::vector<EvalCounters> counts(missing.size());
  ParallelFor(static_cast<int>(missing.size()), cfg_.threads, [&](int m) {
    const int k = missing[static_cast<std::size_t>(m)];
    built[m] = BuildEcmsStageModel(k, grid_.energy[static_cast<std::size_t>(k)],
                                   route_, one, base_.ecms, params_, &counts[m]);
  });
  for (std::size_t m = 0; m < missing.size(); ++m) {
    counters_ += counts[m];
    models_.emplace(missing[m], std::move(built[m]));
  }
}

ValueLookup HorizonSolver::NextLookup(int i, int k) const {
  // The base cost-to-go closes the horizon; at the route end that is the
  // base terminal cost, or its charge-sustaining variant.
  if (k + 1 == plan_end_) {
    if (plan_end_ == route_.size() - 1) {
      return ValueLookup::Terminal(closing_, grid_.energy[static_cast<std::size_t>(plan_end_)],
                                   grid_.soc, base_.config.interpolation);
    }
    return NextStageLookup(base_, k);
  }
  const auto& ls = lambdas_[static_cast<std::size_t>(i)];
  return ValueLookup::Table(
      grid_.energy[static_cast<std::size_t>(k + 1)], grid_.soc,
      ls.tables[static_cast<std::size_t>(k - plan_stage_)],
      base_.config.interpolation);
}

void HorizonSolver::BackwardPass(int i) {
  auto& ls = lambdas_[static_cast<std::size_t>(i)];
  const double lambda = cfg_.lambdas[static_cast<std::size_t>(i)];
  const EcmsConfig ecms = EcmsFor(i);
  SolverConfig one = base_.config;
  one.threads = 1;
  const int ns = grid_.soc_size();
  ls.tables.assign(static_cast<std::size_t>(std::max(0, plan_end_ - plan_stage_ - 1)),
                   {});
  for (int k = plan_end_ - 1; k > plan_stage_; --k) {
    auto it = ls.batches.find(k);
    if (it == ls.batches.end()) {
      StageBatch b = ApplyLambda(models_.at(k), grid_.soc, lambda, one, ecms,
                                 params_, &ls.counters);
      // Only values are needed past the first stage.
      b.controls.clear();
      b.controls.shrink_to_fit();
      it = ls.batches.emplace(k, std::move(b)).first;
    }
    auto& table = ls.tables[static_cast<std::size_t>(k - plan_stage_ - 1)];
    table.resize(static_cast<std::size_t>(grid_.energy_size(k)) * ns);
    Backup(it->second, NextLookup(i, k), table, {});
  }
}

HorizonSolution HorizonSolver::Solve(int j, const StateVector& x) {
  Prepare(j);
  const int n = static_cast<int>(cfg_.lambdas.size());
  HorizonSolution out;
  out.stage = j;
  out.results.resize(static_cast<std::size_t>(n));
  ParallelFor(n, cfg_.threads, [&](int i) {
    BackwardPass(i);
    auto& ls = lambdas_[static_cast<std::size_t>(i)];
    const double lambda = cfg_.lambdas[static_cast<std::size_t>(i)];
    HorizonResult& r = out.results[static_cast<std::size_t>(i)];
    r.lambda = lambda;
    r.first = BestStep(SolverKind::kDpEcms, x, j, route_, base_.config,
                       EcmsFor(i), lambda, NextLookup(i, j), params_,
                       &ls.counters);
    r.value = r.first.feasible ? r.first.value : kInf;
  });
  std::vector<double> values(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    values[i] = out.results[static_cast<std::size_t>(i)].value;
    auto& ls = lambdas_[static_cast<std::size_t>(i)];
    counters_ += ls.counters;
    ls.counters = EvalCounters{};
  }
  out.selected = SelectLambda(values);
  return out;
}

StepChoice HorizonSolver::Step(int i, int k, const StateVector& x) {
  if (plan_stage_ < 0 || k < plan_stage_ || k >= plan_end_) {
    throw ValidationError("lookahead: step outside the current plan");
  }
  if (i < 0 || i >= static_cast<int>(cfg_.lambdas.size())) {
    throw ValidationError("lookahead: lambda index out of range");
  }
  auto& ls = lambdas_[static_cast<std::size_t>(i)];
  StepChoice c = BestStep(SolverKind::kDpEcms, x, k, route_, base_.config,
                          EcmsFor(i), cfg_.lambdas[static_cast<std::size_t>(i)],
                          NextLookup(i, k), params_, &ls.counters);
  counters_ += ls.counters;
  ls.counters = EvalCounters{};
  return c;
}

std::span<const double> HorizonSolver::Table(int i, int k) const {
  if (plan_stage_ < 0 || k <= plan_stage_ || k >= plan_end_) {
    throw ValidationError("lookahead: table outside the current plan");
  }
  return lambdas_[static_cast<std::size_t>(i)]
      .tables[static_cast<std::size_t>(k - plan_stage_ - 1)];
}

LookaheadRun RunRecedingHorizon(const Solution& base, const Route& route,
                                const StateVector& x1, double gamma,
                                const LookaheadConfig& cfg,
                                const VehicleParams& params,
                                const std::vector<SpeedCap>& caps) {
  if (gamma != base.config.problem.gamma) {
    throw ValidationError("lookahead: base table was solved for another gamma");
  }
  auto active = [&](int j) {
    int count = 0;
    for (const SpeedCap& c : caps) count += c.activate_at_stage <= j ? 1 : 0;
    return count;
  };
  int known = active(0);
  HorizonSolver solver(base, ApplySpeedCaps(route, caps, 0), cfg, params);
  LookaheadRun run;
  Trajectory& traj = run.trajectory;
  traj.initial_state = x1;
  StateVector x = x1;
  const int last = route.size() - 1;
  const ProblemConfig& pc = base.config.problem;
  int j = 0;
  while (j < last) {
    if (active(j) != known) {
      known = active(j);
      solver.SetRoute(ApplySpeedCaps(route, caps, j));
    }
    const HorizonSolution plan = solver.Solve(j, x);
    run.replan_stages.push_back(j);
    const int i = plan.selected;
    const double lambda = plan.results[static_cast<std::size_t>(i)].lambda;
    for (int m = 0; m < cfg.stride && j < last; ++m) {
      if (m > 0 && active(j) != known) break;  // replan on new information
      const StepChoice c = m == 0 ? plan.results[static_cast<std::size_t>(i)].first
                                  : solver.Step(i, j, x);
      if (!c.feasible) {
        if (m > 0) break;
        throw SimulationDivergenceError(
            j, c.value == kInf ? "no-feasible-control" : ToString(c.output.tag));
      }
      TrajectoryStage st;
      st.k = j;
      st.distance = solver.route()[j].distance;
      st.state = x;
      st.control = c.control;
      st.output = c.output;
      st.cost = StageCost(c.output, pc.gamma, pc.fuel_norm);
      st.lambda = lambda;
      traj.stages.push_back(st);
      run.lambda_trace.push_back(lambda);
      x = c.output.next;
      ++j;
    }
  }
  traj.final_state = x;
  traj.final_distance = route[last].distance;
  run.counters = solver.counters();
  run.cache_flushes = solver.flushes();
  return run;
}

}  // namespace ecodrive
