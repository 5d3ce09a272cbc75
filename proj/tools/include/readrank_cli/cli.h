// Copyright 2026 The readrank Authors.
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

#ifndef READRANK_CLI_CLI_H_
#define READRANK_CLI_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace readrank::cli {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Runs one subcommand and returns the process exit code.
int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);
int Run(int argc, char **argv);

}  // namespace readrank::cli

#endif  // READRANK_CLI_CLI_H_
