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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cli.hpp"
#include "nlohmann/json.hpp"

namespace ecodrive::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ecodrive_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    route_ = (dir_ / "route.csv").string();
    std::ofstream(route_) << "d_m,v_min_mps,v_max_mps,grade_rad,stop\n"
                             "0,1,1,0,1\n10,1,13.89,0,0\n190,1,13.89,0.01,0\n200,1,1,0,1\n";
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(std::vector<std::string> args) {
    args.insert(args.begin(), "ecodrive");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return Dispatch(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  // Small grids keep each solve well under a second.
  std::vector<std::string> Small(std::vector<std::string> args, const std::string& out) {
    for (const char* a : {"--energy-points", "9", "--engine-points", "7", "--bsg-points", "5",
                          "--tpt-points", "9", "--split-points", "7"}) {
      args.emplace_back(a);
    }
    args.insert(args.end(), {"--route", route_, "--out", (dir_ / out).string()});
    return args;
  }

  json ReadJson(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  }
  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  json ErrJson() { return json::parse(err_.str()); }

  fs::path dir_;
  std::string route_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(Run({"--help"}), kExitOk);
  EXPECT_NE(out_.str().find("solve"), std::string::npos);
}

TEST_F(CliTest, UnknownFlagIsUsage) {
  EXPECT_EQ(Run({"solve", "--no-such-flag"}), kExitUsage);
  EXPECT_EQ(ErrJson()["error"], "usage");
}

TEST_F(CliTest, MissingSubcommandIsUsage) { EXPECT_EQ(Run({}), kExitUsage); }

TEST_F(CliTest, GammaOutsideOpenIntervalIsValidationError) {
  EXPECT_EQ(Run(Small({"solve", "--gamma", "1.0"}, "g")), kExitUsage);
  EXPECT_EQ(ErrJson()["error"], "validation-error");
  const json m = ReadJson(dir_ / "g" / "manifest.json");
  EXPECT_EQ(m["status"], "error");
  EXPECT_EQ(m["exit_code"], kExitUsage);
}

TEST_F(CliTest, MissingRouteFileIsUsage) {
  EXPECT_EQ(Run({"solve", "--route", (dir_ / "nope.csv").string(), "--out",
                 (dir_ / "m").string()}),
            kExitUsage);
  EXPECT_TRUE(ErrJson().contains("error"));
}

TEST_F(CliTest, SolveBenchmarkWritesArtifacts) {
  ASSERT_EQ(Run(Small({"solve", "--solver", "benchmark"}, "b")), kExitOk) << err_.str();
  const fs::path d = dir_ / "b";
  const json m = ReadJson(d / "manifest.json");
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["command"], "solve");
  EXPECT_EQ(m["outputs"], json({"trajectory.csv", "report.json"}));
  const json r = ReadJson(d / "report.json");
  EXPECT_TRUE(r.dump().find("\"soc_neutral\":true") != std::string::npos) << r.dump();
  std::ifstream csv(d / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "k,d_m,v_mps,soc,T_eng_Nm,T_bsg_Nm,T_pt_Nm,fuel_kg,t_s,cost");
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(Run(Small({"solve", "--solver", "full-route-dpecms"}, "r1")), kExitOk) << err_.str();
  ASSERT_EQ(Run(Small({"solve", "--solver", "full-route-dpecms"}, "r2")), kExitOk) << err_.str();
  EXPECT_EQ(Slurp(dir_ / "r1" / "trajectory.csv"), Slurp(dir_ / "r2" / "trajectory.csv"));
  // Everything but the wall clock.
  json a = ReadJson(dir_ / "r1" / "report.json");
  json b = ReadJson(dir_ / "r2" / "report.json");
  a.erase("seconds");
  b.erase("seconds");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST_F(CliTest, LookaheadHasLambdaColumn) {
  ASSERT_EQ(Run(Small({"lookahead", "--nh", "5", "--ni", "3"}, "l")), kExitOk) << err_.str();
  std::ifstream csv(dir_ / "l" / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.substr(header.rfind(',') + 1), "lambda");
}

TEST_F(CliTest, InfeasibleRouteExitsThree) {
  std::ofstream(route_) << "d_m,v_min_mps,v_max_mps,grade_rad,stop\n"
                           "0,15,15,0,0\n10,15,15,0,0\n20,1,1.2,0,0\n";
  EXPECT_EQ(Run(Small({"solve", "--solver", "benchmark"}, "i")), kExitInfeasible);
  EXPECT_EQ(ErrJson()["error"], "no-feasible-path");
}

TEST_F(CliTest, TuneLambdaBracketErrorExitsFour) {
  ASSERT_EQ(Run(Small({"tune-lambda"}, "t")), kExitOk) << err_.str();
  const json s = ReadJson(dir_ / "t" / "shooting.json");
  EXPECT_TRUE(s["converged"].get<bool>());
  const double l0 = s["lambda0"].get<double>();
  // A bracket entirely above the neutral factor never changes sign.
  const std::string lo = std::to_string(l0 + 1.0);
  const std::string hi = std::to_string(l0 + 2.0);
  EXPECT_EQ(Run(Small({"tune-lambda", "--lambda-lo", lo, "--lambda-hi", hi}, "t2")),
            kExitSolver);
  EXPECT_EQ(ErrJson()["error"], "bracket-error");
}

TEST_F(CliTest, ParetoWritesOneRowPerRun) {
  ASSERT_EQ(Run(Small({"pareto", "--gammas", "0.4,0.7", "--solvers", "benchmark,full-route-dpecms"},
                      "p")),
            kExitOk)
      << err_.str();
  std::ifstream csv(dir_ / "p" / "pareto.csv");
  std::string line;
  int rows = -1;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4);
  std::ifstream inc(dir_ / "p" / "increments.csv");
  rows = -1;
  while (std::getline(inc, line)) ++rows;
  EXPECT_EQ(rows, 2);
}

TEST_F(CliTest, OracleCheckPasses) {
  ASSERT_EQ(Run({"oracle-check", "--fixtures", "10", "--out", (dir_ / "o").string()}), kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(dir_ / "o" / "oracle.json"));
}

TEST_F(CliTest, ComplexityHandValues) {
  ASSERT_EQ(Run({"complexity", "--points", "701", "--out", (dir_ / "c").string()}), kExitOk)
      << err_.str();
  const json c = ReadJson(dir_ / "c" / "complexity.json");
  EXPECT_EQ(c["benchmark_ops"].get<std::uint64_t>(), 147262500u);
  EXPECT_EQ(c["dp_ecms_ops"].get<std::uint64_t>(), 101062500u);
}

TEST_F(CliTest, OutputDirFromEnvironment) {
  const fs::path env = dir_ / "env";
  ::setenv("ECODRIVE_OUT_DIR", env.c_str(), 1);
  const int code = Run({"complexity", "--points", "11"});
  ::unsetenv("ECODRIVE_OUT_DIR");
  ASSERT_EQ(code, kExitOk) << err_.str();
  EXPECT_TRUE(fs::exists(env / "complexity.json"));
}

}  // namespace
}  // namespace ecodrive::cli
