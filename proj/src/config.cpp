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

#include "groundrl/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

using Setter = std::function<void(RunConfig&, std::string_view)>;

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for config key '" +
                    std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double(std::string_view key, std::string_view v) {
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v);
  return out;
}

template <typename Int>
Int parse_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v);
}

#define REAL(group, field) \
  {#field, [](RunConfig& c, std::string_view v) { c.group.field = parse_double(#field, v); }}
#define BOOL(group, field) \
  {#field, [](RunConfig& c, std::string_view v) { c.group.field = parse_bool(#field, v); }}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      REAL(reward, iou_weight),
      REAL(reward, neg_weight),
      REAL(reward, no_target_reward),
      REAL(reward, hallucination_penalty),
      REAL(reward, format_reward),
      REAL(reward, think_bonus),
      REAL(reward, box_iou_threshold),
      REAL(reward, box_l1_threshold),
      REAL(reward, point_dist_threshold),
      REAL(reward, neg_margin),
      REAL(reward, repetition_penalty_weight),
      BOOL(reward, think_required),
      BOOL(reward, sam_keep_distance_terms),
      {"sam_prompt_mode",
       [](RunConfig& c, std::string_view v) {
         const auto m = parse_prompt_mode(v);
         if (!m) bad_value("sam_prompt_mode", v);
         c.reward.sam_prompt_mode = *m;
       }},
      {"group_size",
       [](RunConfig& c, std::string_view v) { c.grpo.group_size = parse_int<int>("group_size", v); }},
      REAL(grpo, kl_coef),
      REAL(grpo, clip_range),
      BOOL(grpo, use_clipping),
      REAL(grpo, std_epsilon),
      REAL(grpo, learning_rate),
      REAL(grpo, max_grad_norm),
      {"seed",
       [](RunConfig& c, std::string_view v) { c.grpo.seed = parse_int<std::uint64_t>("seed", v); }},
      {"tasks_per_step",
       [](RunConfig& c, std::string_view v) {
         c.grpo.tasks_per_step = parse_int<int>("tasks_per_step", v);
       }},
      REAL(grpo, no_target_fraction),
  };
  return table;
}

#undef REAL
#undef BOOL

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, trim(value));
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(cfg, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  validate_reward_config(cfg.reward);
  validate_grpo_config(cfg.grpo);
}

std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> out;
  for (const auto& [k, v] : setters()) out.push_back(k);
  return out;
}

}  // namespace groundrl
