// Copyright 2026 The Propminer Authors.
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

#ifndef PROPMINER_CLI_H_
#define PROPMINER_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace propminer::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;
inline constexpr int kUsage = 2;
inline constexpr int kIncomplete = 3;  // extraction stopped before the end

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Convenience for tests: args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace propminer::cli

#endif  // PROPMINER_CLI_H_
