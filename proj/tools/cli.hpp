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

// Command-line front end. Dispatch is a library function so the tests can
// drive it without spawning processes.

#pragma once

#include <ostream>

namespace ecodrive::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;     // oracle mismatch, internal error
inline constexpr int kExitUsage = 2;       // bad flags, bad config or input
inline constexpr int kExitInfeasible = 3;  // no feasible path or control
inline constexpr int kExitSolver = 4;      // bracket, size guard, refused

// Errors go to `err` as one JSON line {"error": category, "message", ...}.
int Dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace ecodrive::cli
