// Copyright 2026 The groundrl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GROUNDRL_CLI_HPP_
#define GROUNDRL_CLI_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace groundrl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitSegmenterUnavailable = 3;

// Runs the command line `args` (without the program name). The summary goes
// to `out`, diagnostics to `err`; machine-readable results go to files.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Writes through a temporary file in the same directory and renames it
// into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace groundrl

#endif  // GROUNDRL_CLI_HPP_
