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

#ifndef GROUNDRL_CONFIG_HPP_
#define GROUNDRL_CONFIG_HPP_

#include <filesystem>
#include <string_view>
#include <vector>

#include "groundrl/grpo.hpp"
#include "groundrl/reward_engine.hpp"

namespace groundrl {

struct RunConfig {
  RewardConfig reward;
  GrpoConfig grpo;
};

// Sets one tunable by its field name, e.g. ("kl_coef", "0.01").
// Throws ConfigError naming the key when it is unknown or the value does
// not parse.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Flat `key = value` lines; '#' starts a comment.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

std::vector<std::string_view> config_keys();

}  // namespace groundrl

#endif  // GROUNDRL_CONFIG_HPP_
