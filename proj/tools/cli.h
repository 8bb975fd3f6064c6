// Copyright 2026 The Context Tracker Authors.
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

#ifndef CTRACK_TOOLS_CLI_H_
#define CTRACK_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace ctrack {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one `ctrack` invocation. `args` excludes the program name.
int RunCli(const std::vector<std::string> &args, std::istream &in,
           std::ostream &out, std::ostream &err);

// Directory holding the bundled word lists: $CTRACK_DATA_DIR when set,
// otherwise the source tree's data directory.
std::string DefaultDataDir();

}  // namespace ctrack

#endif  // CTRACK_TOOLS_CLI_H_
