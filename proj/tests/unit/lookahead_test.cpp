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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ecodrive/errors.hpp"
#include "ecodrive/lambda_tuning.hpp"
#include "ecodrive/lookahead.hpp"
#include "test_util.hpp"

namespace ecodrive {
namespace {

using testing::RelEq;

// 400 m with a start stop, a 50 km/h section and an end stop.
Route LookRoute() {
  std::istringstream in(
      "d_m,v_min_mps,v_max_mps,grade_rad,stop\n"
      "0,1,1,0,1\n10,1,13.89,0,0\n200,1,13.89,0.02,0\n390,1,13.89,0,0\n400,1,1,0,1\n");
  return Resample(ParseRoute(in), 10.0);
}

class LookaheadFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    route_ = new Route(LookRoute());
    SolverConfig c = DefaultDpEcmsConfig(0.65);
    c.energy_points = 13;
    EcmsConfig e;
    e.soc_target = c.problem.soc_initial;
    e.lambda0 = Shoot(*route_, c, e, ShootingConfig{}, VehicleParams{}).lambda0;
    base_ = new Solution(SolveDpEcms(*route_, c, e, VehicleParams{}));
  }
  static void TearDownTestSuite() {
    delete route_;
    delete base_;
  }
  static StateVector X1() { return InitialState(*route_, base_->config.problem); }
  static double Gamma() { return base_->config.problem.gamma; }

  static Route* route_;
  static Solution* base_;
  VehicleParams p;
};
Route* LookaheadFixture::route_ = nullptr;
Solution* LookaheadFixture::base_ = nullptr;

TEST(SelectLambda, SingleValue) {
  const std::vector<double> v{7.0};
  EXPECT_EQ(SelectLambda(v), 0);
}

TEST(SelectLambda, Argmin) {
  const std::vector<double> v{5.0, 4.2, 4.9};
  EXPECT_EQ(SelectLambda(v), 1);
}

TEST(SelectLambda, TieTakesSmallerLambda) {
  const std::vector<double> v{4.2, 4.2};
  EXPECT_EQ(SelectLambda(v), 0);
  const std::vector<double> w{kInf, 3.0, 3.0};
  EXPECT_EQ(SelectLambda(w), 1);
}

TEST(SelectLambda, AllInfeasibleThrows) {
  const std::vector<double> v{kInf, kInf};
  EXPECT_THROW(SelectLambda(v), NoFeasiblePathError);
}

TEST(LambdaGrid, SingleCandidateIsCenter) {
  EXPECT_EQ(LambdaGrid(2.87, 1), std::vector<double>{2.87});
}

TEST(LambdaGrid, UniformAndHoldsCenter) {
  const std::vector<double> g = LambdaGrid(2.87, 4);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NE(std::find(g.begin(), g.end(), 2.87), g.end());
  EXPECT_DOUBLE_EQ(g.front(), 1.87);
  EXPECT_DOUBLE_EQ(g.back(), 4.87);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_NEAR(g[i] - g[i - 1], 1.0, 1e-12);
  }
}

TEST(LambdaGrid, Rejects) {
  EXPECT_THROW(LambdaGrid(2.0, 0), ValidationError);
  EXPECT_THROW(LambdaGrid(0.8, 5), ValidationError);  // lower end <= 0
}

TEST(LookaheadConfig, ValidateRejects) {
  LookaheadConfig c;
  c.lambdas = {2.0, 3.0};
  EXPECT_NO_THROW(c.Validate(40));
  LookaheadConfig h = c;
  h.horizon = 1;
  EXPECT_THROW(h.Validate(40), ValidationError);
  LookaheadConfig e = c;
  e.lambdas.clear();
  EXPECT_THROW(e.Validate(40), ValidationError);
  LookaheadConfig d = c;
  d.lambdas = {3.0, 2.0};
  EXPECT_THROW(d.Validate(40), ValidationError);
  LookaheadConfig s = c;
  s.stride = 0;
  EXPECT_THROW(s.Validate(40), ValidationError);
  s.stride = 21;
  EXPECT_THROW(s.Validate(40), ValidationError);
}

TEST_F(LookaheadFixture, FullLengthHorizonReproducesBaseTables) {
  LookaheadConfig c;
  c.horizon = route_->stage_count();
  c.lambdas = {base_->ecms.lambda0};
  c.neutral_close = false;
  HorizonSolver solver(*base_, *route_, c, p);
  solver.Solve(0, X1());
  for (int k = 1; k < solver.plan_end(); ++k) {
    const std::span<const double> t = solver.Table(0, k);
    const std::vector<double>& b = base_->values.values[k];
    ASSERT_EQ(t.size(), b.size());
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], b[i]) << k << ' ' << i;
  }
}

// |xi - target| >= target - xi, so closing on it can only raise the tables,
// and does so where the horizon would end with surplus charge.
TEST_F(LookaheadFixture, NeutralCloseChargesSurplus) {
  LookaheadConfig c;
  c.horizon = 4;
  c.lambdas = {base_->ecms.lambda0};
  const int j = route_->stage_count() - c.horizon;
  const Trajectory tr = ForwardSimulate(*base_, *route_, X1(), p);
  const StateVector xj = tr.stages[j].state;
  HorizonSolver closed(*base_, *route_, c, p);
  c.neutral_close = false;
  HorizonSolver open(*base_, *route_, c, p);
  closed.Solve(j, xj);
  open.Solve(j, xj);
  int raised = 0;
  for (int k = j + 1; k < closed.plan_end(); ++k) {
    const std::span<const double> a = closed.Table(0, k);
    const std::span<const double> b = open.Table(0, k);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_GE(a[i], b[i]) << k << ' ' << i;
      raised += a[i] > b[i] ? 1 : 0;
    }
  }
  EXPECT_GT(raised, 0);
}

TEST_F(LookaheadFixture, TwoStageHorizonMatchesEnumeration) {
  LookaheadConfig c;
  c.horizon = 2;
  c.lambdas = {2.0, 3.5};
  HorizonSolver solver(*base_, *route_, c, p);
  const int j = 12;
  // Any reachable state at j will do; take the base trajectory's.
  const Trajectory tr = ForwardSimulate(*base_, *route_, X1(), p);
  const StateVector xj = tr.stages[j].state;
  const HorizonSolution hs = solver.Solve(j, xj);
  const Grid2D& g = base_->grid;
  const int ns = g.soc_size();
  SolverConfig one = base_->config;
  for (int i = 0; i < 2; ++i) {
    EcmsConfig e = base_->ecms;
    e.lambda0 = c.lambdas[i];
    const EcmsStageModel m = BuildEcmsStageModel(j + 1, g.energy[j + 1], *route_, one, e, p);
    const StageBatch b = ApplyLambda(m, g.soc, e.lambda0, one, e, p);
    const ValueLookup base_next = NextStageLookup(*base_, j + 1);
    std::vector<double> table(static_cast<std::size_t>(b.energy_size) * ns, kInf);
    for (int ei = 0; ei < b.energy_size; ++ei) {
      for (int s = 0; s < ns; ++s) {
        for (int q = 0; q < b.control_size; ++q) {
          const std::size_t idx = b.Index(ei, s, q);
          if (b.cost[idx] == kInf) continue;
          const double v = b.cost[idx] +
                           base_next(b.next_energy[static_cast<std::size_t>(ei) * b.control_size + q],
                                     b.next_soc[idx]);
          table[ei * ns + s] = std::min(table[ei * ns + s], v);
        }
      }
    }
    const std::span<const double> t = solver.Table(i, j + 1);
    ASSERT_EQ(t.size(), table.size());
    for (std::size_t q = 0; q < t.size(); ++q) EXPECT_EQ(t[q], table[q]);
    const StepChoice first =
        BestStep(SolverKind::kDpEcms, xj, j, *route_, base_->config, e, e.lambda0,
                 ValueLookup::Table(g.energy[j + 1], g.soc, table, base_->config.interpolation),
                 p);
    EXPECT_EQ(hs.results[i].value, first.feasible ? first.value : kInf);
  }
}

TEST_F(LookaheadFixture, SingleBaseLambdaReproducesFullRoute) {
  LookaheadConfig c;
  c.horizon = 10;
  c.lambdas = {base_->ecms.lambda0};
  c.neutral_close = false;
  const LookaheadRun run = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  const Trajectory full = ForwardSimulate(*base_, *route_, X1(), p);
  ASSERT_EQ(run.trajectory.stages.size(), full.stages.size());
  EXPECT_TRUE(RelEq(run.trajectory.total_cost(), full.total_cost(), 1e-9));
  EXPECT_NEAR(run.trajectory.final_state.soc, full.final_state.soc, 1e-9);
  for (double l : run.lambda_trace) EXPECT_EQ(l, base_->ecms.lambda0);
}

TEST_F(LookaheadFixture, OpenLoopStrideCostsNoLess) {
  LookaheadConfig c;
  c.horizon = 8;
  c.lambdas = {base_->ecms.lambda0};
  const LookaheadRun step = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  c.stride = c.horizon;
  const LookaheadRun open = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  EXPECT_GE(open.trajectory.total_cost(), step.trajectory.total_cost() * (1.0 - 1e-9));
  EXPECT_LT(open.replan_stages.size(), step.replan_stages.size());
}

TEST_F(LookaheadFixture, SelectedValueIsArgminAndAppliedFirst) {
  LookaheadConfig c;
  c.horizon = 6;
  c.lambdas = LambdaGrid(base_->ecms.lambda0, 5);
  HorizonSolver solver(*base_, *route_, c, p);
  const HorizonSolution hs = solver.Solve(0, X1());
  for (const HorizonResult& r : hs.results) {
    EXPECT_GE(r.value, hs.results[hs.selected].value);
  }
}

TEST_F(LookaheadFixture, LargerGridNeverRaisesSelectedValue) {
  const Trajectory tr = ForwardSimulate(*base_, *route_, X1(), p);
  LookaheadConfig small;
  small.horizon = 6;
  small.lambdas = {1.8, 3.4};
  LookaheadConfig big = small;
  big.lambdas = {1.8, 2.2, 2.6, 3.0, 3.4, 4.2};
  HorizonSolver a(*base_, *route_, small, p);
  HorizonSolver b(*base_, *route_, big, p);
  for (int j : {0, 5, 17, 30}) {
    const StateVector x = tr.stages[j].state;
    const HorizonSolution ha = a.Solve(j, x);
    const HorizonSolution hb = b.Solve(j, x);
    EXPECT_LE(hb.results[hb.selected].value, ha.results[ha.selected].value) << j;
  }
}

// Base lambda0 from shooting, 13 E nodes. The horizons tend to end with extra
// charge; on a 25-node E grid the same run is 1.4% above the full route.
TEST_F(LookaheadFixture, CostWithinOnePercentOfFullRoute) {
  LookaheadConfig c;
  c.horizon = 10;
  c.lambdas = LambdaGrid(base_->ecms.lambda0, 4);
  const LookaheadRun run = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  const Trajectory full = ForwardSimulate(*base_, *route_, X1(), p);
  EXPECT_LE(run.trajectory.total_cost(), 1.01 * full.total_cost());
  EXPECT_EQ(run.lambda_trace.size(), full.stages.size());
}

TEST_F(LookaheadFixture, SpeedCapRespectedOnceActive) {
  LookaheadConfig c;
  c.horizon = 10;
  c.lambdas = LambdaGrid(base_->ecms.lambda0, 3);
  const SpeedCap cap{250.0, 8.0, 15};
  const LookaheadRun run = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p, {cap});
  EXPECT_EQ(run.cache_flushes, 1);
  int capped = 0;
  for (const TrajectoryStage& s : run.trajectory.stages) {
    const double d_next = s.distance + route_->stage_length;
    if (s.k + 1 > cap.activate_at_stage && d_next >= cap.distance &&
        !(*route_)[s.k + 1].stop) {
      EXPECT_LE(s.output.next.speed(), cap.v_max + 1e-9) << s.k;
      ++capped;
    }
  }
  EXPECT_GT(capped, 5);
}

TEST_F(LookaheadFixture, GammaMismatchRefused) {
  LookaheadConfig c;
  c.lambdas = {2.0};
  EXPECT_THROW(RunRecedingHorizon(*base_, *route_, X1(), 0.5, c, p), ValidationError);
}

TEST_F(LookaheadFixture, BenchmarkBaseRefused) {
  SolverConfig bc = DefaultBenchmarkConfig(0.65);
  bc.energy_points = 5;
  bc.soc_points = 11;
  bc.terminal.mode = TerminalMode::kFree;
  const Solution b = SolveBenchmark(*route_, bc, p);
  LookaheadConfig c;
  c.lambdas = {2.0};
  EXPECT_THROW(HorizonSolver(b, *route_, c, p), ValidationError);
}

TEST_F(LookaheadFixture, ThreadCountDoesNotChangeRun) {
  LookaheadConfig c;
  c.horizon = 5;
  c.lambdas = LambdaGrid(base_->ecms.lambda0, 3);
  c.threads = 1;
  const LookaheadRun a = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  c.threads = 3;
  const LookaheadRun b = RunRecedingHorizon(*base_, *route_, X1(), Gamma(), c, p);
  EXPECT_EQ(a.lambda_trace, b.lambda_trace);
  EXPECT_EQ(a.trajectory.total_cost(), b.trajectory.total_cost());
}

}  // namespace
}  // namespace ecodrive
