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

#ifndef GROUNDRL_REWARD_ENGINE_HPP_
#define GROUNDRL_REWARD_ENGINE_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groundrl/geometry.hpp"
#include "groundrl/mask.hpp"
#include "groundrl/response_parser.hpp"
#include "groundrl/segmenter.hpp"
#include "json.hpp"

namespace groundrl {

// Reference annotation for one query. Boxes and points are in the normalized
// [0, 1000] frame; masks are at native image resolution.
struct GroundTruth {
  std::string image_id;
  CoordSpace image;
  std::vector<Box> gt_boxes;
  std::vector<BinaryMask> gt_masks;
  // Per-instance positive point pairs, when annotated.
  std::optional<std::vector<std::array<Point2, 2>>> gt_points;
  bool is_no_target = false;
};

// Throws ConsistencyError if the invariants between fields do not hold.
void validate_ground_truth(const GroundTruth& gt);

struct RewardConfig {
  double iou_weight = 5.0;
  double neg_weight = 10.0;
  double no_target_reward = 10.0;
  double hallucination_penalty = -10.0;
  double format_reward = 1.0;
  double think_bonus = 0.25;
  double box_iou_threshold = 0.5;
  double box_l1_threshold = 50.0;      // [0, 1000] units
  double point_dist_threshold = 119.0;  // [0, 1000] units, strict <
  double neg_margin = 20.0;            // [0, 1000] units
  double repetition_penalty_weight = 1.0;
  // A missing think block fails the format gate instead of merely losing
  // the bonus.
  bool think_required = false;
  // The segmenter-in-the-loop reward keeps the box and point terms.
  bool sam_keep_distance_terms = true;
  PromptMode sam_prompt_mode = PromptMode::kBox2Pt;
};

// Throws ConfigError on non-positive thresholds or non-finite weights.
void validate_reward_config(const RewardConfig& cfg);

struct RewardComponents {
  double format = 0.0;
  double think = 0.0;
  double bbox = 0.0;
  double point = 0.0;
  double repetition = 0.0;
  double sam_iou = 0.0;
  double neg_validity = 0.0;
  double no_target = 0.0;

  // (name, value) in a fixed order.
  std::array<std::pair<std::string_view, double>, 8> named() const;
};

struct RewardBreakdown {
  double total = 0.0;  // sum of components in named() order
  RewardComponents components;
  std::vector<FormatFault> faults;
};

enum class RewardMode { kDistance, kSamLoop };
std::string_view reward_mode_name(RewardMode m);
std::optional<RewardMode> parse_reward_mode(std::string_view name);

// Greedy assignment: each predicted instance, in order, takes the still
// unmatched GT box with the highest IoU (lowest index on ties).
std::vector<std::optional<std::size_t>> match_instances(
    const std::vector<Instance>& instances, const std::vector<Box>& gt_boxes);

RewardBreakdown distance_reward(std::string_view raw, const ParsedResponse& pr,
                                const GroundTruth& gt, const RewardConfig& cfg);

// Adds the segmenter IoU and negative-point validity terms. Segmenter errors
// propagate.
RewardBreakdown sam_loop_reward(std::string_view raw, const ParsedResponse& pr,
                                const GroundTruth& gt, const Segmenter& seg,
                                const RewardConfig& cfg);

// Parses and scores each rollout independently; output order follows input.
std::vector<RewardBreakdown> score_group(const std::vector<std::string>& rollouts,
                                         const GroundTruth& gt, const RewardConfig& cfg,
                                         RewardMode mode, const Segmenter* seg = nullptr,
                                         int jobs = 1);

nlohmann::json breakdown_to_json(const RewardBreakdown& b);

}  // namespace groundrl

#endif  // GROUNDRL_REWARD_ENGINE_HPP_
