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

#include "json_io.hpp"

#include <fstream>

#include "ecodrive/errors.hpp"

namespace ecodrive::cli {

using nlohmann::ordered_json;

namespace {

const char* ModeName(TerminalMode m) {
  switch (m) {
    case TerminalMode::kHard:
      return "hard";
    case TerminalMode::kPenalty:
      return "penalty";
    case TerminalMode::kFree:
      return "free";
    case TerminalMode::kEquivalent:
      return "equivalent";
  }
  return "?";
}

}  // namespace

ordered_json ToJson(const ProblemConfig& c) {
  return {{"gamma", c.gamma},           {"fuel_norm_kg_s", c.fuel_norm},
          {"soc_min", c.soc_min},       {"soc_max", c.soc_max},
          {"soc_initial", c.soc_initial}, {"soc_tolerance", c.soc_tolerance},
          {"accel_min", c.accel_min},   {"accel_max", c.accel_max}};
}

ordered_json ToJson(const SolverConfig& c) {
  ordered_json controls = {{"engine_points", c.controls.engine_points},
                           {"brake_points", c.controls.brake_points},
                           {"bsg_points", c.controls.bsg_points},
                           {"powertrain_points", c.controls.powertrain_points},
                           {"landing_controls", c.controls.landing_controls}};
  ordered_json terminal = {{"mode", ModeName(c.terminal.mode)},
                           {"soc_target", c.terminal.soc_target},
                           {"tolerance", c.terminal.tolerance},
                           {"penalty_weight", c.terminal.penalty_weight}};
  return {{"problem", ToJson(c.problem)},
          {"controls", controls},
          {"energy_points", c.energy_points},
          {"soc_points", c.soc_points},
          {"interpolation", c.interpolation == Interpolation::kBilinear
                                ? "bilinear"
                                : "nearest-node"},
          {"terminal", terminal},
          {"benchmark_split_pairs", c.benchmark_split_pairs},
          {"forward_refine", c.forward_refine},
          {"threads", c.threads}};
}

ordered_json ToJson(const EcmsConfig& c) {
  return {{"lambda0", c.lambda0},
          {"lambda1", c.lambda1},
          {"soc_target", c.soc_target},
          {"split_points", c.split_points},
          {"tan_margin", c.tan_margin}};
}

ordered_json ToJson(const ShootingConfig& c) {
  return {{"lambda_lo", c.lambda_lo},
          {"lambda_hi", c.lambda_hi},
          {"tolerance", c.tolerance},
          {"max_iter", c.max_iter}};
}

ordered_json ToJson(const LookaheadConfig& c) {
  return {{"horizon", c.horizon},
          {"lambdas", c.lambdas},
          {"stride", c.stride},
          {"soc_points", c.soc_points},
          {"threads", c.threads}};
}

ordered_json ToJson(const ExperimentConfig& c) {
  ordered_json j = {{"gamma", c.gamma},
                    {"benchmark", ToJson(c.benchmark)},
                    {"dp_ecms", ToJson(c.dp_ecms)},
                    {"ecms", ToJson(c.ecms)},
                    {"shooting", ToJson(c.shooting)}};
  j["fixed_lambda"] = c.fixed_lambda ? ordered_json(*c.fixed_lambda) : ordered_json();
  j["lookahead"] = ToJson(c.lookahead);
  j["lambda_grid"] = {{"points", c.lambda_points},
                      {"below", c.lambda_below},
                      {"above", c.lambda_above}};
  j["threads"] = c.threads;
  return j;
}

ordered_json ToJson(const CostReport& r) {
  return {{"gamma", r.gamma},
          {"fuel_kg", r.fuel_kg},
          {"time_s", r.time_s},
          {"cost", r.cost},
          {"solver", r.solver},
          {"soc_neutral", r.soc_neutral},
          {"soc_initial", r.soc_initial},
          {"soc_final", r.soc_final},
          {"route_length_m", r.route_length_m}};
}

ordered_json ToJson(const EvalCounters& c) {
  return {{"full_plant", c.full_plant}, {"reduced_plant", c.reduced_plant}};
}

ordered_json ToJson(const ShootingResult& r) {
  return {{"lambda0", r.lambda0},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"non_monotone", r.non_monotone},
          {"lambdas", r.lambdas},
          {"residuals", r.residuals},
          {"warnings", r.warnings}};
}

ordered_json ToJson(const ComplexityReport& r) {
  ordered_json j = {{"points", r.points},
                    {"benchmark_ops", r.benchmark_ops},
                    {"dp_ecms_ops", r.dp_ecms_ops},
                    {"ratio", r.ratio}};
  if (r.measured_benchmark) j["measured_benchmark"] = ToJson(*r.measured_benchmark);
  if (r.measured_dp_ecms) j["measured_dp_ecms"] = ToJson(*r.measured_dp_ecms);
  return j;
}

void WriteJson(const std::string& path, const ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path);
  os << j.dump(2) << '\n';
}

}  // namespace ecodrive::cli
