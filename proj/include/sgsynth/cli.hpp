// Copyright 2026 The sgsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SGSYNTH_CLI_HPP_
#define SGSYNTH_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace sgsynth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailures = 1;
inline constexpr int kExitConfigOrIo = 2;

/// Runs one subcommand. `args` excludes the program name. The one-line JSON
/// summary goes to `out`, usage and help text to `out` as well; structured
/// logs go to stderr.
int run_cli(const std::vector<std::string>& args, std::ostream& out);

}  // namespace sgsynth

#endif  // SGSYNTH_CLI_HPP_
