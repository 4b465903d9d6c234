// Copyright 2026 The adapter3d Authors. All Rights Reserved.
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

#ifndef ADAPTER3D_TOOLS_CLI_HPP
#define ADAPTER3D_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace adapter3d::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kBadInput = 2,
  kDegenerate = 3,
  kNumerical = 4,
  kCheckpoint = 5,
};

// `args` excludes the program name, e.g. {"render", "--ckpt", "g.ckpt", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace adapter3d::cli

#endif  // ADAPTER3D_TOOLS_CLI_HPP
