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

// Cost reports, full runs of each solver, Pareto sweeps, the brute-force
// oracle for tiny instances and operation-count accounting.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ecodrive/dp.hpp"
#include "ecodrive/lambda_tuning.hpp"
#include "ecodrive/lookahead.hpp"

namespace ecodrive {

struct CostReport {
  double gamma = 0.0;
  double fuel_kg = 0.0;
  double time_s = 0.0;
  double cost = 0.0;  // gamma * m_f / mdot_norm + (1 - gamma) * tau
  std::string solver;
  bool soc_neutral = false;
  double soc_initial = 0.0;
  double soc_final = 0.0;
  double route_length_m = 0.0;
};

// Sums the stage costs and checks them against the closed form; throws
// std::logic_error if the two disagree beyond rounding.
CostReport CumulativeCost(const Trajectory& traj, double gamma,
                          double fuel_norm, const std::string& solver,
                          double soc_tolerance);

// 100 * (b - a) / a. Throws ComparisonRefusedError when gamma or route
// differ or either run is not SoC-neutral.
double CostIncrement(const CostReport& a, const CostReport& b);

// Everything needed to run any of the three solvers on one route.
struct ExperimentConfig {
  double gamma = 0.65;
  SolverConfig benchmark = DefaultBenchmarkConfig(0.65);
  SolverConfig dp_ecms = DefaultDpEcmsConfig(0.65);
  EcmsConfig ecms;
  ShootingConfig shooting;
  std::optional<double> fixed_lambda;  // skips shooting when set
  LookaheadConfig lookahead;           // lambdas filled from the grid below
  int lambda_points = 10;              // n_i
  double lambda_below = 1.0;           // grid spans [l0 - below, l0 + above]
  double lambda_above = 2.0;
  int threads = 1;

  // Copies gamma and threads into the solver configs.
  void Sync();
  static ExperimentConfig Defaults(double gamma);
};

struct RunOutput {
  std::string solver;
  Trajectory trajectory;
  CostReport report;
  EvalCounters counters;
  double lambda0 = std::numeric_limits<double>::quiet_NaN();
  std::optional<ShootingResult> shooting;
  double seconds = 0.0;
};

RunOutput RunBenchmark(const Route& route, const ExperimentConfig& cfg,
                       const VehicleParams& params);

// Tunes lambda0 (unless fixed) and replays the solve at that value. When
// `solution` is given it receives the final DP-ECMS solution.
RunOutput RunFullRouteDpEcms(const Route& route, const ExperimentConfig& cfg,
                             const VehicleParams& params,
                             Solution* solution = nullptr);

// Full-route DP-ECMS as base, then the receding-horizon run with the lambda
// grid centred on the base lambda0. `base` reuses an earlier full-route run.
RunOutput RunLookahead(const Route& route, const ExperimentConfig& cfg,
                       const VehicleParams& params,
                       const std::vector<SpeedCap>& caps = {},
                       const Solution* base = nullptr,
                       std::vector<double>* lambda_trace = nullptr);

enum class SolverChoice { kBenchmark, kDpEcms, kLookahead };
const char* ToString(SolverChoice s);
SolverChoice ParseSolverChoice(const std::string& name);

struct SweepEntry {
  double gamma = 0.0;
  SolverChoice solver = SolverChoice::kBenchmark;
  bool ok = false;
  CostReport report;
  double lambda0 = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // category: message, when !ok
};

// One run per (gamma, solver); failures are recorded and the sweep goes on.
// Sorted by gamma, then solver.
std::vector<SweepEntry> ParetoSweep(const Route& route,
                                    const std::vector<double>& gammas,
                                    const std::vector<SolverChoice>& solvers,
                                    const ExperimentConfig& base,
                                    const VehicleParams& params);

// Header gamma,fuel_kg,time_s,cost,solver,soc_neutral. Failed entries are
// skipped.
void WriteParetoCsv(std::ostream& os, const std::vector<SweepEntry>& entries);

// Header gamma,reference,reference_cost,solver,cost,increment_pct. One row
// per gamma and non-reference solver; increments that are refused are
// written as "refused".
void WriteIncrementsCsv(std::ostream& os, const std::vector<SweepEntry>& entries,
                        SolverChoice reference = SolverChoice::kBenchmark);

// Oracle ------------------------------------------------------------------

struct TinyProblem {
  Route route;
  SolverConfig config;  // nearest-node interpolation
  VehicleParams params;
};

inline constexpr std::uint64_t kOracleMaxSequences = 10'000'000;

struct OracleResult {
  bool feasible = false;
  double cost = kInf;    // includes the terminal cost
  std::vector<PolicyEntry> controls;  // per stage
  std::uint64_t sequences = 0;     // complete sequences evaluated
};

// Exhaustive search over control sequences with next states snapped to the
// nearest node. Throws SizeGuardError when the sequence count, bounded by
// the product of per-stage maximum control counts, exceeds the limit.
OracleResult BruteForceOracle(const TinyProblem& problem,
                              std::uint64_t max_sequences = kOracleMaxSequences);

// Random instance with at most `max_points` points, a <= 4 x 3 state grid
// and <= 5 x 3 benchmark controls.
TinyProblem MakeTinyProblem(std::mt19937_64& rng, int max_points = 5);

// Replays a control sequence from the initial node with every next state
// snapped to the nearest node, summed as the DP sums it. +inf when a step
// is infeasible or leaves the grid.
double SnappedReplayCost(const TinyProblem& problem,
                         const std::vector<PolicyEntry>& controls);

// The DP policy read off along the snapped path from the initial node.
std::vector<PolicyEntry> SnappedPolicyControls(const TinyProblem& problem,
                                               const Solution& sol);

struct OracleCheck {
  OracleResult oracle;
  double dp_value = kInf;       // benchmark value at the initial node
  double dp_replay = kInf;      // SnappedReplayCost of the DP policy
  double oracle_replay = kInf;  // SnappedReplayCost of the oracle controls
  bool value_equal = false;     // oracle.cost == dp_value, bit for bit
  bool replay_equal = false;    // both replays equal dp_value
};

OracleCheck CheckOracle(const TinyProblem& problem);

struct OracleSuite {
  std::uint64_t seed = 0;
  std::vector<OracleCheck> checks;
  int feasible = 0;
  double seconds = 0.0;

  bool passed() const;
};

// `fixtures` problems from MakeTinyProblem seeded with `seed`.
OracleSuite RunOracleSuite(std::uint64_t seed, int fixtures, int max_points = 5);

// Operation counts -------------------------------------------------------

struct ComplexityReport {
  int points = 0;
  std::uint64_t benchmark_ops = 0;  // n_c = (N - 1) * nE * nS * nTeng * nTbsg
  std::uint64_t dp_ecms_ops = 0;    // (N - 1) * nE * nS * nTpt * nsplit
  double ratio = 0.0;               // benchmark / dp_ecms, 0 when empty
  std::optional<EvalCounters> measured_benchmark;
  std::optional<EvalCounters> measured_dp_ecms;
};

// Counts per grid definitions only; brake and landing extras are not part
// of the formula.
ComplexityReport ComplexityEstimate(int points, const SolverConfig& benchmark,
                                    const SolverConfig& dp_ecms,
                                    const EcmsConfig& ecms);

}  // namespace ecodrive
