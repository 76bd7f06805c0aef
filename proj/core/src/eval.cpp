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

#include "ecodrive/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <stdexcept>

#include "ecodrive/errors.hpp"

namespace ecodrive {

CostReport CumulativeCost(const Trajectory& traj, double gamma,
                          double fuel_norm, const std::string& solver,
                          double soc_tolerance) {
  CostReport r;
  r.gamma = gamma;
  r.solver = solver;
  double stage_sum = 0.0;
  for (const TrajectoryStage& s : traj.stages) {
    stage_sum += s.cost;
    r.fuel_kg += s.output.fuel_mass;
    r.time_s += s.output.travel_time;
  }
  const double closed = gamma * r.fuel_kg / fuel_norm + (1.0 - gamma) * r.time_s;
  // Each stage cost is (gamma mdot / norm + 1 - gamma) t; the sums differ
  // only by rounding.
  const double slack =
      1e-12 * static_cast<double>(traj.stages.size() + 1) * std::max(1.0, std::abs(closed));
  if (std::abs(stage_sum - closed) > slack) {
    throw std::logic_error("cumulative cost: stage sum and closed form disagree");
  }
  r.cost = stage_sum;
  r.soc_initial = traj.initial_state.soc;
  r.soc_final = traj.final_state.soc;
  r.soc_neutral = std::abs(r.soc_final - r.soc_initial) <= soc_tolerance;
  r.route_length_m = traj.final_distance;
  return r;
}

double CostIncrement(const CostReport& a, const CostReport& b) {
  if (a.gamma != b.gamma) {
    throw ComparisonRefusedError("cost increment: gamma differs");
  }
  if (a.route_length_m != b.route_length_m) {
    throw ComparisonRefusedError("cost increment: routes differ");
  }
  if (!a.soc_neutral || !b.soc_neutral) {
    throw ComparisonRefusedError("cost increment: run is not SoC-neutral");
  }
  return 100.0 * (b.cost - a.cost) / a.cost;
}

void ExperimentConfig::Sync() {
  benchmark.problem.gamma = gamma;
  dp_ecms.problem.gamma = gamma;
  benchmark.threads = threads;
  dp_ecms.threads = threads;
  lookahead.threads = threads;
}

ExperimentConfig ExperimentConfig::Defaults(double gamma) {
  ExperimentConfig c;
  c.gamma = gamma;
  c.benchmark = DefaultBenchmarkConfig(gamma);
  c.dp_ecms = DefaultDpEcmsConfig(gamma);
  c.ecms.soc_target = c.dp_ecms.problem.soc_initial;
  // Finer SoC nodes inside the horizons; on the base 11 the replanned
  // trajectory drifts by a quarter spacing or more.
  c.lookahead.soc_points = 51;
  c.Sync();
  return c;
}

namespace {

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

RunOutput RunBenchmark(const Route& route, const ExperimentConfig& cfg_in,
                       const VehicleParams& params) {
  ExperimentConfig cfg = cfg_in;
  cfg.Sync();
  const auto t0 = std::chrono::steady_clock::now();
  const Solution sol = SolveBenchmark(route, cfg.benchmark, params);
  const StateVector x1 = InitialState(route, cfg.benchmark.problem);
  RunOutput out;
  out.solver = ToString(SolverChoice::kBenchmark);
  out.trajectory = ForwardSimulate(sol, route, x1, params);
  out.counters = sol.counters;
  const ProblemConfig& pc = cfg.benchmark.problem;
  out.report = CumulativeCost(out.trajectory, cfg.gamma, pc.fuel_norm,
                              out.solver, pc.soc_tolerance);
  out.seconds = Seconds(t0);
  return out;
}

RunOutput RunFullRouteDpEcms(const Route& route, const ExperimentConfig& cfg_in,
                             const VehicleParams& params, Solution* solution) {
  ExperimentConfig cfg = cfg_in;
  cfg.Sync();
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  out.solver = ToString(SolverChoice::kDpEcms);
  EcmsConfig ecms = cfg.ecms;
  if (cfg.fixed_lambda) {
    ecms.lambda0 = *cfg.fixed_lambda;
  } else {
    out.shooting = Shoot(route, cfg.dp_ecms, cfg.ecms, cfg.shooting, params);
    ecms.lambda0 = out.shooting->lambda0;
  }
  out.lambda0 = ecms.lambda0;
  Solution sol = SolveDpEcms(route, cfg.dp_ecms, ecms, params);
  const StateVector x1 = InitialState(route, cfg.dp_ecms.problem);
  out.trajectory = ForwardSimulate(sol, route, x1, params);
  out.counters = sol.counters;
  const ProblemConfig& pc = cfg.dp_ecms.problem;
  out.report = CumulativeCost(out.trajectory, cfg.gamma, pc.fuel_norm,
                              out.solver, pc.soc_tolerance);
  if (solution != nullptr) *solution = std::move(sol);
  out.seconds = Seconds(t0);
  return out;
}

RunOutput RunLookahead(const Route& route, const ExperimentConfig& cfg_in,
                       const VehicleParams& params,
                       const std::vector<SpeedCap>& caps, const Solution* base,
                       std::vector<double>* lambda_trace) {
  ExperimentConfig cfg = cfg_in;
  cfg.Sync();
  const auto t0 = std::chrono::steady_clock::now();
  Solution own;
  RunOutput out;
  if (base == nullptr) {
    const RunOutput full = RunFullRouteDpEcms(route, cfg, params, &own);
    out.shooting = full.shooting;
    base = &own;
  }
  out.solver = ToString(SolverChoice::kLookahead);
  out.lambda0 = base->ecms.lambda0;
  LookaheadConfig lc = cfg.lookahead;
  lc.lambdas = LambdaGrid(out.lambda0, cfg.lambda_points, cfg.lambda_below,
                          cfg.lambda_above);
  const StateVector x1 = InitialState(route, base->config.problem);
  LookaheadRun run =
      RunRecedingHorizon(*base, route, x1, cfg.gamma, lc, params, caps);
  out.trajectory = std::move(run.trajectory);
  out.counters = run.counters;
  const ProblemConfig& pc = base->config.problem;
  // Charge sustainability inside horizons is approximate: twice the band.
  out.report = CumulativeCost(out.trajectory, cfg.gamma, pc.fuel_norm,
                              out.solver, 2.0 * pc.soc_tolerance);
  if (lambda_trace != nullptr) *lambda_trace = std::move(run.lambda_trace);
  out.seconds = Seconds(t0);
  return out;
}

const char* ToString(SolverChoice s) {
  switch (s) {
    case SolverChoice::kBenchmark:
      return "benchmark";
    case SolverChoice::kDpEcms:
      return "full-route-dpecms";
    case SolverChoice::kLookahead:
      return "lookahead";
  }
  return "?";
}

SolverChoice ParseSolverChoice(const std::string& name) {
  if (name == "benchmark") return SolverChoice::kBenchmark;
  if (name == "full-route-dpecms" || name == "dp-ecms") return SolverChoice::kDpEcms;
  if (name == "lookahead") return SolverChoice::kLookahead;
  throw ValidationError("unknown solver '" + name + "'");
}

std::vector<SweepEntry> ParetoSweep(const Route& route,
                                    const std::vector<double>& gammas_in,
                                    const std::vector<SolverChoice>& solvers_in,
                                    const ExperimentConfig& base,
                                    const VehicleParams& params) {
  std::vector<double> gammas = gammas_in;
  std::sort(gammas.begin(), gammas.end());
  std::vector<SolverChoice> solvers = solvers_in;
  std::sort(solvers.begin(), solvers.end());
  solvers.erase(std::unique(solvers.begin(), solvers.end()), solvers.end());
  std::vector<SweepEntry> out;
  for (double gamma : gammas) {
    ExperimentConfig cfg = base;
    cfg.gamma = gamma;
    cfg.Sync();
    Solution dp_solution;
    bool have_dp = false;
    for (SolverChoice s : solvers) {
      SweepEntry e;
      e.gamma = gamma;
      e.solver = s;
      try {
        if (!(gamma > 0.0 && gamma < 1.0)) {
          throw ValidationError("pareto: gamma must be in (0, 1)");
        }
        RunOutput r;
        if (s == SolverChoice::kBenchmark) {
          r = RunBenchmark(route, cfg, params);
        } else if (s == SolverChoice::kDpEcms) {
          r = RunFullRouteDpEcms(route, cfg, params, &dp_solution);
          have_dp = true;
        } else {
          r = RunLookahead(route, cfg, params, {}, have_dp ? &dp_solution : nullptr);
        }
        e.ok = true;
        e.report = r.report;
        e.lambda0 = r.lambda0;
      } catch (const Error& err) {
        e.error = std::string(ToString(err.category())) + ": " + err.what();
      }
      out.push_back(e);
    }
  }
  return out;
}

void WriteParetoCsv(std::ostream& os, const std::vector<SweepEntry>& entries) {
  os << "gamma,fuel_kg,time_s,cost,solver,soc_neutral\n";
  os << std::setprecision(12);
  for (const SweepEntry& e : entries) {
    if (!e.ok) continue;
    os << e.gamma << ',' << e.report.fuel_kg << ',' << e.report.time_s << ','
       << e.report.cost << ',' << ToString(e.solver) << ','
       << (e.report.soc_neutral ? "true" : "false") << '\n';
  }
}

void WriteIncrementsCsv(std::ostream& os, const std::vector<SweepEntry>& entries,
                        SolverChoice reference) {
  os << "gamma,reference,reference_cost,solver,cost,increment_pct\n";
  os << std::setprecision(12);
  std::map<double, const SweepEntry*> refs;
  for (const SweepEntry& e : entries) {
    if (e.ok && e.solver == reference) refs[e.gamma] = &e;
  }
  for (const SweepEntry& e : entries) {
    if (!e.ok || e.solver == reference) continue;
    auto it = refs.find(e.gamma);
    if (it == refs.end()) continue;
    const SweepEntry& r = *it->second;
    os << e.gamma << ',' << ToString(reference) << ',' << r.report.cost << ','
       << ToString(e.solver) << ',' << e.report.cost << ',';
    try {
      os << CostIncrement(r.report, e.report);
    } catch (const ComparisonRefusedError&) {
      os << "refused";
    }
    os << '\n';
  }
}

// Oracle -------------------------------------------------------------------

namespace {

struct OracleSearch {
  const TinyProblem& p;
  Grid2D grid;
  int last = 0;
  std::vector<double> stage_cost;
  std::vector<PolicyEntry> controls;
  OracleResult best;

  // Terminal value at the snapped final node, as the DP looks it up.
  double Leaf(const NodeIndex& node) const {
    return TerminalCost(grid.soc[static_cast<std::size_t>(node.soc)],
                        p.config.terminal);
  }

  void Visit(int k, const NodeIndex& node) {
    if (k == last) {
      ++best.sequences;
      // Backward association, same as the DP recursion.
      double total = Leaf(node);
      for (int s = last - 1; s >= 0; --s) total = stage_cost[s] + total;
      if (total < best.cost) {
        best.cost = total;
        best.controls = controls;
        best.feasible = total != kInf;
      }
      return;
    }
    const StateVector x{
        grid.energy[static_cast<std::size_t>(k)][static_cast<std::size_t>(node.energy)],
        grid.soc[static_cast<std::size_t>(node.soc)]};
    const StageContext ctx = MakeStageContext(x.energy, k, p.route, p.params);
    for (const ControlBenchmark& u : BenchmarkControls(ctx, p.config.controls, p.params)) {
      const StageOutput out = Transition(x, u, k, p.route, p.config.problem, p.params);
      if (!out.feasible()) continue;
      const NodeIndex next =
          NearestNode(grid.energy[static_cast<std::size_t>(k + 1)], grid.soc, out.next);
      if (!next.valid) continue;
      stage_cost[static_cast<std::size_t>(k)] =
          StageCost(out, p.config.problem.gamma, p.config.problem.fuel_norm);
      controls[static_cast<std::size_t>(k)] =
          PolicyEntry{u.engine_command, u.bsg_torque,
                      u.engine_command + p.params.belt_ratio * u.bsg_torque};
      Visit(k + 1, next);
    }
  }
};

}  // namespace

OracleResult BruteForceOracle(const TinyProblem& problem,
                              std::uint64_t max_sequences) {
  const SolverConfig& cfg = problem.config;
  cfg.Validate();
  if (cfg.interpolation != Interpolation::kNearestNode) {
    throw ValidationError("oracle: problem must use nearest-node snapping");
  }
  if (cfg.benchmark_split_pairs > 0) {
    throw ValidationError("oracle: only the (T_eng, T_bsg) grid is supported");
  }
  const int n = problem.route.size();
  if (n < 2 || n > 6) throw ValidationError("oracle: need 2 <= N <= 6 points");
  OracleSearch search{problem, Grid2D::ForRoute(problem.route, cfg.energy_points,
                                                cfg.soc_points, cfg.problem.soc_min,
                                                cfg.problem.soc_max),
                      n - 1, {}, {}, {}};
  // Bound on the sequence count: product of the largest control set per
  // stage.
  double bound = 1.0;
  for (int k = 0; k < n - 1; ++k) {
    std::size_t most = 0;
    for (double e : search.grid.energy[static_cast<std::size_t>(k)]) {
      const StageContext ctx = MakeStageContext(e, k, problem.route, problem.params);
      most = std::max(most, BenchmarkControls(ctx, cfg.controls, problem.params).size());
    }
    bound *= static_cast<double>(most);
  }
  if (bound > static_cast<double>(max_sequences)) {
    throw SizeGuardError("oracle: up to " + std::to_string(bound) +
                         " sequences exceeds the limit");
  }
  search.stage_cost.assign(static_cast<std::size_t>(n - 1), 0.0);
  search.controls.assign(static_cast<std::size_t>(n - 1), PolicyEntry{});
  const StateVector x1 = InitialState(problem.route, cfg.problem);
  const NodeIndex start = NearestNode(search.grid.energy[0], search.grid.soc, x1);
  if (start.valid) search.Visit(0, start);
  if (!search.best.feasible) search.best.controls.clear();
  return search.best;
}

TinyProblem MakeTinyProblem(std::mt19937_64& rng, int max_points) {
  if (max_points < 3 || max_points > 6) {
    throw ValidationError("tiny problem: max_points must be in [3, 6]");
  }
  auto uniform = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  auto pick = [&](int a, int b) {
    return std::uniform_int_distribution<int>(a, b)(rng);
  };
  TinyProblem t;
  const int n = pick(3, max_points);
  t.route.stage_length = uniform(20.0, 50.0);
  for (int k = 0; k < n; ++k) {
    RoutePoint p;
    p.distance = k * t.route.stage_length;
    p.v_max = uniform(8.0, 16.0);
    p.v_min = uniform(t.route.speed_floor, p.v_max - 2.0);
    p.grade = uniform(-0.03, 0.03);
    t.route.points.push_back(p);
  }
  SolverConfig& c = t.config;
  c.problem.gamma = uniform(0.2, 0.9);
  c.energy_points = pick(2, 4);
  c.soc_points = pick(2, 3);
  c.controls.engine_points = pick(3, 5);
  c.controls.brake_points = 0;
  c.controls.bsg_points = pick(2, 3);
  c.controls.landing_controls = false;
  c.interpolation = Interpolation::kNearestNode;
  c.terminal.mode = TerminalMode::kPenalty;
  c.terminal.soc_target = c.problem.soc_initial;
  c.terminal.tolerance = c.problem.soc_tolerance;
  c.forward_refine = 1;
  return t;
}

namespace {

// Walks the snapped path; `pick` supplies the control at (k, node).
template <typename Pick>
double SnappedWalk(const TinyProblem& p, const Grid2D& grid, Pick pick) {
  const int last = p.route.size() - 1;
  const StateVector x1 = InitialState(p.route, p.config.problem);
  NodeIndex node = NearestNode(grid.energy[0], grid.soc, x1);
  if (!node.valid) return kInf;
  std::vector<double> cost(static_cast<std::size_t>(last), 0.0);
  for (int k = 0; k < last; ++k) {
    const StateVector x{
        grid.energy[static_cast<std::size_t>(k)][static_cast<std::size_t>(node.energy)],
        grid.soc[static_cast<std::size_t>(node.soc)]};
    const PolicyEntry e = pick(k, node);
    const StageOutput out = Transition(x, ControlBenchmark{e.engine_command, e.bsg_torque},
                                       k, p.route, p.config.problem, p.params);
    if (!out.feasible()) return kInf;
    node = NearestNode(grid.energy[static_cast<std::size_t>(k + 1)], grid.soc, out.next);
    if (!node.valid) return kInf;
    cost[static_cast<std::size_t>(k)] =
        StageCost(out, p.config.problem.gamma, p.config.problem.fuel_norm);
  }
  double total = TerminalCost(grid.soc[static_cast<std::size_t>(node.soc)],
                              p.config.terminal);
  for (int k = last - 1; k >= 0; --k) total = cost[static_cast<std::size_t>(k)] + total;
  return total;
}

Grid2D TinyGrid(const TinyProblem& p) {
  return Grid2D::ForRoute(p.route, p.config.energy_points, p.config.soc_points,
                          p.config.problem.soc_min, p.config.problem.soc_max);
}

}  // namespace

double SnappedReplayCost(const TinyProblem& problem,
                         const std::vector<PolicyEntry>& controls) {
  if (static_cast<int>(controls.size()) != problem.route.stage_count()) return kInf;
  return SnappedWalk(problem, TinyGrid(problem), [&](int k, const NodeIndex&) {
    return controls[static_cast<std::size_t>(k)];
  });
}

std::vector<PolicyEntry> SnappedPolicyControls(const TinyProblem& problem,
                                               const Solution& sol) {
  std::vector<PolicyEntry> out;
  const int ns = sol.grid.soc_size();
  SnappedWalk(problem, sol.grid, [&](int k, const NodeIndex& n) {
    out.push_back(sol.policy.entries[static_cast<std::size_t>(k)]
                                    [static_cast<std::size_t>(n.energy * ns + n.soc)]);
    return out.back();
  });
  return out;
}

OracleCheck CheckOracle(const TinyProblem& problem) {
  OracleCheck c;
  c.oracle = BruteForceOracle(problem);
  const Solution sol = SolveBenchmark(problem.route, problem.config, problem.params);
  c.dp_value = InterpolateValue(sol.grid, sol.values, 0,
                                InitialState(problem.route, problem.config.problem),
                                Interpolation::kNearestNode);
  c.value_equal = c.oracle.cost == c.dp_value;
  if (c.oracle.feasible) {
    c.dp_replay = SnappedReplayCost(problem, SnappedPolicyControls(problem, sol));
    c.oracle_replay = SnappedReplayCost(problem, c.oracle.controls);
    c.replay_equal = c.dp_replay == c.dp_value && c.oracle_replay == c.dp_value;
  } else {
    // Nothing to replay; both sides agree there is no path.
    c.replay_equal = c.dp_value == kInf;
  }
  return c;
}

bool OracleSuite::passed() const {
  if (checks.empty()) return false;
  for (const OracleCheck& c : checks) {
    if (!c.value_equal || !c.replay_equal) return false;
  }
  return true;
}

OracleSuite RunOracleSuite(std::uint64_t seed, int fixtures, int max_points) {
  if (fixtures < 1) throw ValidationError("oracle suite: need at least one fixture");
  const auto t0 = std::chrono::steady_clock::now();
  OracleSuite suite;
  suite.seed = seed;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < fixtures; ++i) {
    suite.checks.push_back(CheckOracle(MakeTinyProblem(rng, max_points)));
    suite.feasible += suite.checks.back().oracle.feasible ? 1 : 0;
  }
  suite.seconds = Seconds(t0);
  return suite;
}

// Operation counts ----------------------------------------------------------

ComplexityReport ComplexityEstimate(int points, const SolverConfig& benchmark,
                                    const SolverConfig& dp_ecms,
                                    const EcmsConfig& ecms) {
  ComplexityReport r;
  r.points = points;
  const std::uint64_t stages = points > 1 ? static_cast<std::uint64_t>(points - 1) : 0;
  r.benchmark_ops = stages * static_cast<std::uint64_t>(benchmark.energy_points) *
                    static_cast<std::uint64_t>(benchmark.soc_points) *
                    static_cast<std::uint64_t>(benchmark.controls.engine_points) *
                    static_cast<std::uint64_t>(benchmark.controls.bsg_points);
  r.dp_ecms_ops = stages * static_cast<std::uint64_t>(dp_ecms.energy_points) *
                  static_cast<std::uint64_t>(dp_ecms.soc_points) *
                  static_cast<std::uint64_t>(dp_ecms.controls.powertrain_points) *
                  static_cast<std::uint64_t>(ecms.split_points);
  r.ratio = r.dp_ecms_ops == 0 ? 0.0
                               : static_cast<double>(r.benchmark_ops) /
                                     static_cast<double>(r.dp_ecms_ops);
  return r;
}

}  // namespace ecodrive
