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

// Bisection on the constant equivalence factor so that a full-route DP-ECMS
// run ends with the SoC it started with.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecodrive/dp.hpp"

namespace ecodrive {

struct ShootingConfig {
  double lambda_lo = 0.5;
  double lambda_hi = 10.0;
  double tolerance = 0.005;  // on |xi_N - xi_1|
  int max_iter = 20;
};

struct ShootingResult {
  double lambda0 = 0.0;
  int iterations = 0;
  std::vector<double> lambdas;    // per residual evaluation
  std::vector<double> residuals;  // xi_N - xi_1 per evaluation, NaN if infeasible
  bool converged = false;
  bool non_monotone = false;
  std::vector<std::string> warnings;
};

// Residual r(lambda0) = xi_N - xi_1, or nullopt when no feasible path
// exists. The solve uses cfg.terminal as given; keep its weight light (or
// free) so that xi_N still moves with lambda0. A hard terminal on a coarse
// SoC grid leaves almost no feasible cells.
std::optional<double> ShootingResidual(double lambda0, const Route& route,
                        const SolverConfig& cfg, const EcmsConfig& ecms,
                        const VehicleParams& params);

// Throws BracketError when r does not change sign over the bracket.
ShootingResult Shoot(const Route& route, const SolverConfig& cfg,
                     const EcmsConfig& ecms, const ShootingConfig& shooting,
                     const VehicleParams& params);

// Generic driver over any residual, used by Shoot and by the tests.
//
// An infeasible iterate is taken to lie beyond the SoC window on the side of
// the bracket end that is itself infeasible: a too small lambda0 drains the
// battery, a too large one overcharges it. If neither or both ends are
// infeasible the iterate is placed on the low side and a warning recorded.
ShootingResult Bisect(
    const std::function<std::optional<double>(double)>& residual,
                      const ShootingConfig& shooting);

}  // namespace ecodrive
