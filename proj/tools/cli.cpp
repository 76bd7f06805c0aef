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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecodrive/errors.hpp"
#include "ecodrive/eval.hpp"
#include "ecodrive/powertrain.hpp"
#include "ecodrive/route.hpp"
#include "json.hpp"
#include "json_io.hpp"

#ifndef ECODRIVE_DEFAULT_ROUTE
#define ECODRIVE_DEFAULT_ROUTE "data/routes/mixed_7km.csv"
#endif

namespace ecodrive::cli {

using nlohmann::ordered_json;

namespace {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct Options {
  std::string route = ECODRIVE_DEFAULT_ROUTE;
  std::string params;
  double stage_length = kDefaultStageLength;
  double gamma = 0.65;
  std::string out = "out";
  int threads = 1;

  // Grids; filled from the library defaults.
  int energy_points = 0;
  int bench_soc_points = 0;
  int dp_soc_points = 0;
  int engine_points = 0;
  int brake_points = 0;
  int bsg_points = 0;
  int tpt_points = 0;
  int split_points = 0;
  int refine = 0;

  double lambda = kUnset;  // fixed lambda0; shooting when unset
  double lambda1 = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  double shoot_tol = 0.0;
  int max_iter = 0;

  int nh = 20;
  int ni = 10;
  double lambda_below = 1.0;
  double lambda_above = 2.0;
  int stride = 1;
  int horizon_soc_points = 0;
  bool no_neutral_close = false;
  std::string perturbation;

  std::string solver = "benchmark";
  std::vector<double> gammas{0.3, 0.4, 0.5, 0.65, 0.7, 0.75, 0.8, 0.82};
  std::vector<std::string> solvers{"benchmark", "full-route-dpecms"};

  int fixtures = 30;
  std::uint64_t seed = 1;
  int max_points = 5;

  int points = 0;
  bool measure = false;

  Options() {
    const ExperimentConfig d = ExperimentConfig::Defaults(gamma);
    energy_points = d.dp_ecms.energy_points;
    bench_soc_points = d.benchmark.soc_points;
    dp_soc_points = d.dp_ecms.soc_points;
    engine_points = d.benchmark.controls.engine_points;
    brake_points = d.benchmark.controls.brake_points;
    bsg_points = d.benchmark.controls.bsg_points;
    tpt_points = d.dp_ecms.controls.powertrain_points;
    horizon_soc_points = d.lookahead.soc_points;
    split_points = d.ecms.split_points;
    refine = d.dp_ecms.forward_refine;
    lambda1 = d.ecms.lambda1;
    lambda_lo = d.shooting.lambda_lo;
    lambda_hi = d.shooting.lambda_hi;
    shoot_tol = d.shooting.tolerance;
    max_iter = d.shooting.max_iter;
    nh = d.lookahead.horizon;
    ni = d.lambda_points;
    lambda_below = d.lambda_below;
    lambda_above = d.lambda_above;
    stride = d.lookahead.stride;
  }
};

void AddIo(CLI::App* app, Options& o) {
  app->add_option("--route", o.route, "route CSV")->capture_default_str();
  app->add_option("--params", o.params, "vehicle parameter JSON (defaults if omitted)");
  app->add_option("--stage-length", o.stage_length, "resampling step, m")
      ->capture_default_str();
  app->add_option("--out", o.out, "output directory")
      ->envname("ECODRIVE_OUT_DIR")
      ->capture_default_str();
  app->add_option("--threads", o.threads, "worker cap, 0 = all cores")
      ->capture_default_str();
}

void AddGrids(CLI::App* app, Options& o) {
  app->add_option("--gamma", o.gamma, "fuel/time weight in (0, 1)")->capture_default_str();
  app->add_option("--energy-points", o.energy_points)->capture_default_str();
  app->add_option("--bench-soc-points", o.bench_soc_points)->capture_default_str();
  app->add_option("--dpecms-soc-points", o.dp_soc_points)->capture_default_str();
  app->add_option("--engine-points", o.engine_points)->capture_default_str();
  app->add_option("--brake-points", o.brake_points)->capture_default_str();
  app->add_option("--bsg-points", o.bsg_points)->capture_default_str();
  app->add_option("--tpt-points", o.tpt_points)->capture_default_str();
  app->add_option("--split-points", o.split_points)->capture_default_str();
  app->add_option("--refine", o.refine, "forward control refinement factor")
      ->capture_default_str();
}

void AddLambda(CLI::App* app, Options& o) {
  app->add_option("--lambda", o.lambda, "fixed lambda0 (skips shooting)");
  app->add_option("--lambda1", o.lambda1)->capture_default_str();
  app->add_option("--lambda-lo", o.lambda_lo, "shooting bracket")->capture_default_str();
  app->add_option("--lambda-hi", o.lambda_hi, "shooting bracket")->capture_default_str();
  app->add_option("--shoot-tol", o.shoot_tol)->capture_default_str();
  app->add_option("--max-iter", o.max_iter)->capture_default_str();
}

void AddLookahead(CLI::App* app, Options& o) {
  app->add_option("--nh", o.nh, "horizon length, stages")->capture_default_str();
  app->add_option("--ni", o.ni, "lambda grid points")->capture_default_str();
  app->add_option("--lambda-below", o.lambda_below)->capture_default_str();
  app->add_option("--lambda-above", o.lambda_above)->capture_default_str();
  app->add_option("--stride", o.stride)->capture_default_str();
  app->add_option("--horizon-soc-points", o.horizon_soc_points,
                  "0 = the base SoC grid")
      ->capture_default_str();
  app->add_flag("--no-neutral-close", o.no_neutral_close,
                "close end-of-route horizons on the base terminal as is");
  app->add_option("--perturbation", o.perturbation,
                  "CSV d_m,v_max_mps,activate_at_stage");
}

ExperimentConfig Resolve(const Options& o) {
  ExperimentConfig c = ExperimentConfig::Defaults(o.gamma);
  for (SolverConfig* s : {&c.benchmark, &c.dp_ecms}) {
    s->energy_points = o.energy_points;
    s->controls.engine_points = o.engine_points;
    s->controls.brake_points = o.brake_points;
    s->controls.bsg_points = o.bsg_points;
    s->controls.powertrain_points = o.tpt_points;
    s->forward_refine = o.refine;
  }
  c.benchmark.soc_points = o.bench_soc_points;
  c.dp_ecms.soc_points = o.dp_soc_points;
  c.ecms.split_points = o.split_points;
  c.ecms.lambda1 = o.lambda1;
  if (!std::isnan(o.lambda)) {
    c.fixed_lambda = o.lambda;
    c.ecms.lambda0 = o.lambda;
  }
  c.shooting.lambda_lo = o.lambda_lo;
  c.shooting.lambda_hi = o.lambda_hi;
  c.shooting.tolerance = o.shoot_tol;
  c.shooting.max_iter = o.max_iter;
  c.lookahead.horizon = o.nh;
  c.lookahead.stride = o.stride;
  c.lookahead.soc_points = o.horizon_soc_points;
  c.lookahead.neutral_close = !o.no_neutral_close;
  c.lambda_points = o.ni;
  c.lambda_below = o.lambda_below;
  c.lambda_above = o.lambda_above;
  c.threads = o.threads;
  c.Sync();
  if (!(o.gamma > 0.0 && o.gamma < 1.0)) {
    throw ValidationError("gamma must be in (0, 1)");
  }
  if (o.threads < 0) throw ValidationError("threads must be >= 0");
  c.benchmark.Validate();
  c.dp_ecms.Validate();
  c.ecms.Validate(c.dp_ecms.problem.soc_min, c.dp_ecms.problem.soc_max);
  return c;
}

// Per-run context: where artifacts go and the manifest being built.
struct Run {
  std::filesystem::path dir;
  ordered_json manifest;

  std::string Path(const std::string& name) {
    manifest["outputs"].push_back(name);
    return (dir / name).string();
  }
  void Flush() const { WriteJson((dir / "manifest.json").string(), manifest); }
};

Run OpenRun(const std::string& command, const Options& o,
            const std::vector<std::string>& argv) {
  Run r;
  r.dir = o.out;
  std::error_code ec;
  std::filesystem::create_directories(r.dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + o.out);
  r.manifest["tool"] = "ecodrive";
  r.manifest["command"] = command;
  r.manifest["argv"] = argv;
  r.manifest["status"] = "running";
  r.manifest["outputs"] = ordered_json::array();
  // Fails early when the directory is not writable.
  r.Flush();
  return r;
}

void RecordInputs(Run& r, const Options& o, const VehicleParams& params,
                  const Route* route) {
  ordered_json in;
  in["route"] = route != nullptr ? ordered_json(o.route) : ordered_json();
  in["route_points"] = route != nullptr ? route->size() : 0;
  in["stage_length_m"] = o.stage_length;
  in["params"] = o.params.empty() ? ordered_json("defaults") : ordered_json(o.params);
  r.manifest["inputs"] = in;
  r.manifest["vehicle_params"] = ordered_json::parse(DumpVehicleParams(params));
}

VehicleParams LoadParams(const Options& o) {
  return o.params.empty() ? DefaultVehicleParams() : LoadVehicleParams(o.params);
}

Route LoadFixture(const Options& o) {
  return Resample(LoadRoute(o.route), o.stage_length);
}

int ExitFor(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kParse:
    case ErrorCategory::kValidation:
      return kExitUsage;
    case ErrorCategory::kInfeasibleControl:
    case ErrorCategory::kBatteryPowerLimit:
    case ErrorCategory::kNoFeasiblePath:
    case ErrorCategory::kSimulationDivergence:
      return kExitInfeasible;
    case ErrorCategory::kBracket:
    case ErrorCategory::kSizeGuard:
    case ErrorCategory::kComparisonRefused:
      return kExitSolver;
  }
  return kExitFailure;
}

ordered_json ErrorJson(const Error& e) {
  ordered_json j = {{"error", ToString(e.category())}, {"message", e.what()}};
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) j["line"] = p->line();
  if (const auto* p = dynamic_cast<const NoFeasiblePathError*>(&e)) j["tag"] = p->tag();
  if (const auto* p = dynamic_cast<const SimulationDivergenceError*>(&e)) {
    j["tag"] = p->tag();
    j["stage"] = p->stage();
  }
  if (const auto* p = dynamic_cast<const InfeasibleControlError*>(&e)) {
    j["bound"] = p->bound();
  }
  if (const auto* p = dynamic_cast<const BatteryPowerLimitError*>(&e)) {
    j["tag"] = "battery-power";
    j["requested_w"] = p->requested();
    j["limit_w"] = p->limit();
  }
  if (const auto* p = dynamic_cast<const BracketError*>(&e)) {
    j["residual_lo"] = p->residual_lo();
    j["residual_hi"] = p->residual_hi();
  }
  return j;
}

void PrintReport(std::ostream& out, const RunOutput& r) {
  out << r.solver << ": cost=" << r.report.cost << " fuel_kg=" << r.report.fuel_kg
      << " time_s=" << r.report.time_s << " soc_final=" << r.report.soc_final
      << " soc_neutral=" << (r.report.soc_neutral ? "yes" : "no");
  if (!std::isnan(r.lambda0)) out << " lambda0=" << r.lambda0;
  out << '\n';
}

int CmdSolve(const Options& o, SolverChoice s, Run& run, std::ostream& out) {
  const ExperimentConfig cfg = Resolve(o);
  const VehicleParams params = LoadParams(o);
  const Route route = LoadFixture(o);
  RecordInputs(run, o, params, &route);
  run.manifest["config"] = ToJson(cfg);
  run.manifest["solver"] = ToString(s);
  std::vector<SpeedCap> caps;
  if (!o.perturbation.empty()) {
    if (s != SolverChoice::kLookahead) {
      throw ValidationError("--perturbation needs the lookahead solver");
    }
    caps = LoadSpeedCaps(o.perturbation);
    run.manifest["inputs"]["perturbation"] = o.perturbation;
  }
  run.Flush();

  RunOutput r;
  std::vector<double> trace;
  switch (s) {
    case SolverChoice::kBenchmark:
      r = RunBenchmark(route, cfg, params);
      break;
    case SolverChoice::kDpEcms:
      r = RunFullRouteDpEcms(route, cfg, params);
      break;
    case SolverChoice::kLookahead:
      r = RunLookahead(route, cfg, params, caps, nullptr, &trace);
      break;
  }
  {
    std::ofstream os(run.Path("trajectory.csv"));
    WriteTrajectoryCsv(os, r.trajectory, s != SolverChoice::kBenchmark);
  }
  ordered_json rep = {{"report", ToJson(r.report)}, {"counters", ToJson(r.counters)}};
  rep["lambda0"] = std::isnan(r.lambda0) ? ordered_json() : ordered_json(r.lambda0);
  if (r.shooting) rep["shooting"] = ToJson(*r.shooting);
  if (!trace.empty()) {
    const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
    rep["lambda_trace"] = {{"min", *lo}, {"max", *hi}};
  }
  rep["seconds"] = r.seconds;
  WriteJson(run.Path("report.json"), rep);
  PrintReport(out, r);
  return kExitOk;
}

int CmdTune(const Options& o, Run& run, std::ostream& out) {
  const ExperimentConfig cfg = Resolve(o);
  const VehicleParams params = LoadParams(o);
  const Route route = LoadFixture(o);
  RecordInputs(run, o, params, &route);
  run.manifest["config"] = ToJson(cfg);
  run.Flush();
  const ShootingResult sr = Shoot(route, cfg.dp_ecms, cfg.ecms, cfg.shooting, params);
  WriteJson(run.Path("shooting.json"), ToJson(sr));
  out << "lambda0=" << sr.lambda0 << " iterations=" << sr.iterations
      << " converged=" << (sr.converged ? "yes" : "no") << '\n';
  for (const std::string& w : sr.warnings) out << "warning: " << w << '\n';
  return kExitOk;
}

int CmdPareto(const Options& o, Run& run, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = Resolve(o);
  const VehicleParams params = LoadParams(o);
  const Route route = LoadFixture(o);
  std::vector<SolverChoice> solvers;
  for (const std::string& s : o.solvers) solvers.push_back(ParseSolverChoice(s));
  RecordInputs(run, o, params, &route);
  run.manifest["config"] = ToJson(cfg);
  run.manifest["gammas"] = o.gammas;
  run.manifest["solvers"] = o.solvers;
  run.Flush();

  const std::vector<SweepEntry> entries = ParetoSweep(route, o.gammas, solvers, cfg, params);
  {
    std::ofstream os(run.Path("pareto.csv"));
    WriteParetoCsv(os, entries);
  }
  {
    std::ofstream os(run.Path("increments.csv"));
    WriteIncrementsCsv(os, entries, solvers.front());
  }
  ordered_json all = ordered_json::array();
  int failed = 0;
  for (const SweepEntry& e : entries) {
    ordered_json j = {{"gamma", e.gamma}, {"solver", ToString(e.solver)}, {"ok", e.ok}};
    if (e.ok) {
      j["report"] = ToJson(e.report);
      j["lambda0"] = std::isnan(e.lambda0) ? ordered_json() : ordered_json(e.lambda0);
      out << "gamma=" << e.gamma << ' ' << ToString(e.solver) << " cost=" << e.report.cost
          << '\n';
    } else {
      j["error"] = e.error;
      err << ordered_json{{"error", "sweep-entry"}, {"gamma", e.gamma},
                          {"solver", ToString(e.solver)}, {"message", e.error}}
                 .dump()
          << '\n';
      ++failed;
    }
    all.push_back(j);
  }
  WriteJson(run.Path("pareto.json"), all);
  return failed == 0 ? kExitOk : kExitInfeasible;
}

int CmdOracle(const Options& o, Run& run, std::ostream& out, std::ostream& err) {
  run.manifest["oracle"] = {{"fixtures", o.fixtures},
                            {"seed", o.seed},
                            {"max_points", o.max_points},
                            {"max_sequences", kOracleMaxSequences}};
  run.Flush();
  const OracleSuite suite = RunOracleSuite(o.seed, o.fixtures, o.max_points);
  ordered_json rows = ordered_json::array();
  for (const OracleCheck& c : suite.checks) {
    auto num = [](double v) { return v == kInf ? ordered_json("inf") : ordered_json(v); };
    rows.push_back({{"feasible", c.oracle.feasible},
                    {"sequences", c.oracle.sequences},
                    {"oracle_cost", num(c.oracle.cost)},
                    {"dp_value", num(c.dp_value)},
                    {"dp_replay", num(c.dp_replay)},
                    {"oracle_replay", num(c.oracle_replay)},
                    {"value_equal", c.value_equal},
                    {"replay_equal", c.replay_equal}});
  }
  WriteJson(run.Path("oracle.json"),
            {{"passed", suite.passed()}, {"feasible", suite.feasible},
             {"seconds", suite.seconds}, {"fixtures", rows}});
  out << "oracle-check: " << suite.checks.size() << " fixtures, " << suite.feasible
      << " feasible, " << (suite.passed() ? "all equal" : "MISMATCH") << '\n';
  if (!suite.passed()) {
    err << ordered_json{{"error", "oracle-mismatch"}, {"message", "DP and oracle differ"}}
               .dump()
        << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int CmdComplexity(const Options& o, Run& run, std::ostream& out) {
  const ExperimentConfig cfg = Resolve(o);
  const VehicleParams params = LoadParams(o);
  std::optional<Route> route;
  if (o.points <= 0 || o.measure) route = LoadFixture(o);
  RecordInputs(run, o, params, route ? &*route : nullptr);
  run.manifest["config"] = ToJson(cfg);
  run.Flush();
  const int points = o.points > 0 ? o.points : route->size();
  ComplexityReport rep = ComplexityEstimate(points, cfg.benchmark, cfg.dp_ecms, cfg.ecms);
  if (o.measure) {
    if (route->size() != points) {
      throw ValidationError("--measure counts the route; drop --points");
    }
    rep.measured_benchmark = SolveBenchmark(*route, cfg.benchmark, params).counters;
    rep.measured_dp_ecms = SolveDpEcms(*route, cfg.dp_ecms, cfg.ecms, params).counters;
  }
  WriteJson(run.Path("complexity.json"), ToJson(rep));
  out << "n_c=" << rep.benchmark_ops << " n_c_dpecms=" << rep.dp_ecms_ops
      << " ratio=" << rep.ratio << '\n';
  if (rep.measured_benchmark) {
    out << "measured full-plant: benchmark=" << rep.measured_benchmark->full_plant
        << " dp-ecms=" << rep.measured_dp_ecms->full_plant << '\n';
  }
  return kExitOk;
}

}  // namespace

int Dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"ecodrive: spatial-domain DP for mild-hybrid eco-driving"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ecodrive 0.1.0");

  CLI::App* solve = app.add_subcommand("solve", "one run: trajectory CSV and cost report");
  AddIo(solve, o);
  AddGrids(solve, o);
  AddLambda(solve, o);
  AddLookahead(solve, o);
  solve->add_option("--solver", o.solver, "benchmark | full-route-dpecms | lookahead")
      ->capture_default_str();

  CLI::App* tune = app.add_subcommand("tune-lambda", "shoot lambda0 for SoC neutrality");
  AddIo(tune, o);
  AddGrids(tune, o);
  AddLambda(tune, o);

  CLI::App* pareto = app.add_subcommand("pareto", "gamma sweep: Pareto and increment CSVs");
  AddIo(pareto, o);
  AddGrids(pareto, o);
  AddLambda(pareto, o);
  AddLookahead(pareto, o);
  pareto->add_option("--gammas", o.gammas)->delimiter(',')->capture_default_str();
  pareto->add_option("--solvers", o.solvers, "first one is the increment reference")
      ->delimiter(',')
      ->capture_default_str();

  CLI::App* look = app.add_subcommand("lookahead", "receding-horizon DP-ECMS run");
  AddIo(look, o);
  AddGrids(look, o);
  AddLambda(look, o);
  AddLookahead(look, o);

  CLI::App* oracle = app.add_subcommand("oracle-check", "DP vs brute force on tiny fixtures");
  AddIo(oracle, o);
  oracle->add_option("--fixtures", o.fixtures)->capture_default_str();
  oracle->add_option("--seed", o.seed)->capture_default_str();
  oracle->add_option("--max-points", o.max_points)->capture_default_str();

  CLI::App* cx = app.add_subcommand("complexity", "operation-count report");
  AddIo(cx, o);
  AddGrids(cx, o);
  AddLambda(cx, o);
  cx->add_option("--points", o.points, "route points N; 0 = from --route")
      ->capture_default_str();
  cx->add_flag("--measure", o.measure, "also run both solvers and count evaluations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      // Subcommand help.
      for (CLI::App* sub : app.get_subcommands()) out << sub->help();
      if (app.get_subcommands().empty()) out << app.help();
      return kExitOk;
    }
    err << ordered_json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  std::vector<std::string> args(argv, argv + argc);
  std::optional<Run> run;
  try {
    run = OpenRun(name, o, args);
    int code = kExitOk;
    if (cmd == solve) {
      code = CmdSolve(o, ParseSolverChoice(o.solver), *run, out);
    } else if (cmd == look) {
      code = CmdSolve(o, SolverChoice::kLookahead, *run, out);
    } else if (cmd == tune) {
      code = CmdTune(o, *run, out);
    } else if (cmd == pareto) {
      code = CmdPareto(o, *run, out, err);
    } else if (cmd == oracle) {
      code = CmdOracle(o, *run, out, err);
    } else {
      code = CmdComplexity(o, *run, out);
    }
    run->manifest["status"] = code == kExitOk ? "ok" : "failed";
    run->manifest["exit_code"] = code;
    run->Flush();
    return code;
  } catch (const Error& e) {
    const ordered_json j = ErrorJson(e);
    err << j.dump() << '\n';
    const int code = ExitFor(e.category());
    if (run) {
      run->manifest["status"] = "error";
      run->manifest["exit_code"] = code;
      run->manifest["error"] = j;
      try {
        run->Flush();
      } catch (const Error&) {
      }
    }
    return code;
  } catch (const std::exception& e) {
    err << ordered_json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return kExitFailure;
  }
}

}  // namespace ecodrive::cli
