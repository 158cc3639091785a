//
// Copyright 2026 The Cactus Mechanism Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef CACTUS_TOOLS_COMMANDS_H_
#define CACTUS_TOOLS_COMMANDS_H_

#include <ostream>
#include <string>

namespace cactus::cli {

// Process exit codes.
enum ExitCode : int {
  kExitSuccess = 0,
  kExitNumericalFailure = 1,
  kExitUsage = 2,
  kExitInfeasible = 3,
};

// Relative output paths are placed under this directory when it is set.
inline constexpr char kOutputDirEnv[] = "CACTUS_OUTPUT_DIR";

std::string ResolveOutputPath(const std::string& path);

// Parses argv (argv[0] is the program name) and runs one subcommand:
// synth, compare-gaussian, account or sample. Returns an ExitCode.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace cactus::cli

#endif  // CACTUS_TOOLS_COMMANDS_H_
