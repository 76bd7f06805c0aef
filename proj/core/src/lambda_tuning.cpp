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

#include "ecodrive/lambda_tuning.hpp"

#include <algorithm>
#include <cmath>

#include "ecodrive/errors.hpp"

namespace ecodrive {

std::optional<double> ShootingResidual(double lambda0, const Route& route,
                                       const SolverConfig& cfg,
                                       const EcmsConfig& ecms,
                                       const VehicleParams& params) {
  EcmsConfig e = ecms;
  e.lambda0 = lambda0;
  const Solution sol = SolveDpEcms(route, cfg, e, params);
  const StateVector x1 = InitialState(route, cfg.problem);
  try {
    const Trajectory traj = ForwardSimulate(sol, route, x1, params);
    return traj.final_state.soc - x1.soc;
  } catch (const NoFeasiblePathError&) {
    return std::nullopt;
  } catch (const SimulationDivergenceError&) {
    return std::nullopt;
  }
}

ShootingResult Bisect(
    const std::function<std::optional<double>(double)>& residual,
    const ShootingConfig& shooting) {
  if (!(shooting.lambda_lo < shooting.lambda_hi) || shooting.max_iter < 1) {
    throw ValidationError("shooting: need lambda_lo < lambda_hi and max_iter >= 1");
  }
  ShootingResult out;
  auto eval = [&](double lambda) {
    const std::optional<double> r = residual(lambda);
    out.lambdas.push_back(lambda);
    out.residuals.push_back(r ? *r : std::nan(""));
    ++out.iterations;
    return r;
  };
  auto ok = [&](const std::optional<double>& r) {
    return r && std::abs(*r) <= shooting.tolerance;
  };
  auto finish = [&] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.residuals.size(); ++i) {
      const double r = std::abs(out.residuals[i]);
      const double b = std::abs(out.residuals[best]);
      if (!std::isnan(r) && (std::isnan(b) || r < b)) best = i;
    }
    out.lambda0 = out.lambdas[best];
    out.converged = std::abs(out.residuals[best]) <= shooting.tolerance;
    if (std::isnan(out.residuals[best])) {
      throw NoFeasiblePathError("shooting: no feasible iterate");
    }
    // Residual should not decrease as lambda grows.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < out.lambdas.size(); ++i) {
      if (!std::isnan(out.residuals[i])) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return out.lambdas[a] < out.lambdas[b];
    });
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (out.residuals[order[i]] < out.residuals[order[i - 1]]) {
        out.non_monotone = true;
        out.warnings.push_back("residual decreases between lambda0 = " +
                               std::to_string(out.lambdas[order[i - 1]]) +
                               " and " + std::to_string(out.lambdas[order[i]]));
        break;
      }
    }
    return out;
  };

  // Infeasible iterates sit beyond the SoC window: below the feasible
  // lambda0 range the battery drains, above it the battery overcharges.
  // Side: -1 low, +1 high, 0 unknown.
  auto side = [&](std::size_t i) {
    const double r = out.residuals[i];
    if (!std::isnan(r)) return r < 0.0 ? -1 : 1;
    double f_min = kInf;
    double f_max = -kInf;
    for (std::size_t j = 0; j < out.residuals.size(); ++j) {
      if (std::isnan(out.residuals[j])) continue;
      f_min = std::min(f_min, out.lambdas[j]);
      f_max = std::max(f_max, out.lambdas[j]);
    }
    const double l = out.lambdas[i];
    if (f_min <= f_max) {
      if (l < f_min) return -1;
      if (l > f_max) return 1;
      return 0;
    }
    if (l == shooting.lambda_lo) return -1;
    if (l == shooting.lambda_hi) return 1;
    return 0;
  };

  const std::optional<double> r_lo = eval(shooting.lambda_lo);
  if (ok(r_lo) || out.iterations >= shooting.max_iter) return finish();
  const std::optional<double> r_hi = eval(shooting.lambda_hi);
  if (ok(r_hi)) return finish();
  if (r_lo && r_hi && ((*r_lo < 0.0) == (*r_hi < 0.0))) {
    throw BracketError(*r_lo, *r_hi);
  }

  // Dyadic probe fractions used while no feasible iterate is known.
  std::vector<double> probes;
  for (int level = 1; level <= 5; ++level) {
    const int n = 1 << level;
    for (int m = 1; m < n; m += 2) probes.push_back(static_cast<double>(m) / n);
  }
  std::size_t next_probe = 0;
  while (out.iterations < shooting.max_iter) {
    double lo = shooting.lambda_lo;
    double hi = shooting.lambda_hi;
    bool unknown = false;
    for (std::size_t i = 0; i < out.lambdas.size(); ++i) {
      const int sd = side(i);
      if (sd < 0) lo = std::max(lo, out.lambdas[i]);
      if (sd > 0) hi = std::min(hi, out.lambdas[i]);
      if (sd == 0) unknown = true;
    }
    if (!(lo < hi)) {
      out.warnings.push_back("bracket collapsed; residual is not monotone");
      break;
    }
    double next = 0.5 * (lo + hi);
    if (unknown) {
      while (next_probe < probes.size()) {
        const double f = probes[next_probe++];
        const double l = shooting.lambda_lo +
                         f * (shooting.lambda_hi - shooting.lambda_lo);
        if (l > lo && l < hi &&
            std::find(out.lambdas.begin(), out.lambdas.end(), l) ==
                out.lambdas.end()) {
          next = l;
          break;
        }
      }
    }
    if (ok(eval(next))) break;
  }
  return finish();
}

ShootingResult Shoot(const Route& route, const SolverConfig& cfg,
                     const EcmsConfig& ecms, const ShootingConfig& shooting,
                     const VehicleParams& params) {
  return Bisect(
      [&](double lambda) {
        return ShootingResidual(lambda, route, cfg, ecms, params);
      },
      shooting);
}

}  // namespace ecodrive
