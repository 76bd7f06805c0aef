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

// JSON views of resolved run configs and results, for manifests and
// machine-readable reports.

#pragma once

#include <string>
#include <vector>

#include "ecodrive/eval.hpp"
#include "json.hpp"

namespace ecodrive::cli {

nlohmann::ordered_json ToJson(const ProblemConfig& c);
nlohmann::ordered_json ToJson(const SolverConfig& c);
nlohmann::ordered_json ToJson(const EcmsConfig& c);
nlohmann::ordered_json ToJson(const ShootingConfig& c);
nlohmann::ordered_json ToJson(const LookaheadConfig& c);
nlohmann::ordered_json ToJson(const ExperimentConfig& c);
nlohmann::ordered_json ToJson(const CostReport& r);
nlohmann::ordered_json ToJson(const EvalCounters& c);
nlohmann::ordered_json ToJson(const ShootingResult& r);
nlohmann::ordered_json ToJson(const ComplexityReport& r);

// Writes `j` pretty-printed with a trailing newline; throws ValidationError
// when the file cannot be opened.
void WriteJson(const std::string& path, const nlohmann::ordered_json& j);

}  // namespace ecodrive::cli
