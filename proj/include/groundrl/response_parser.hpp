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

#ifndef GROUNDRL_RESPONSE_PARSER_HPP_
#define GROUNDRL_RESPONSE_PARSER_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "groundrl/geometry.hpp"

namespace groundrl {

// One referred object: a box and two interior keypoints, all in the
// normalized [0, 1000] frame. Negative (background) points are optional.
struct Instance {
  Box bbox;
  std::vector<Point2> points;      // exactly 2
  std::vector<Point2> neg_points;  // 0..2
};

// Either an abstention or at least one instance, never both.
struct GroundingPrediction {
  bool no_target = false;
  std::vector<Instance> instances;
};

enum class FormatFault {
  kMissingAnswerTag,
  kInvalidJson,
  kSchemaMismatch,
  kEmptyInstances,
  kWrongPointCount,
  kOutOfRangeCoordinate,
  kMultipleAnswerBlocks,
};

std::string_view fault_name(FormatFault f);

// Out-of-range coordinates and repeated answer blocks are recorded but do not
// invalidate the response; everything else does.
bool is_fatal(FormatFault f);

struct ParsedResponse {
  std::optional<std::string> think_text;
  std::optional<GroundingPrediction> prediction;
  bool format_ok = false;  // no fatal fault
  std::vector<FormatFault> format_faults;
};

// Accepted answer payloads:
//   {"no_target": true}
//   {"instances": [{"bbox": [x1,y1,x2,y2], "points": [[x,y],[x,y]],
//                   "neg_points": [[x,y], ...]}, ...]}
// Never throws.
ParsedResponse parse_response(std::string_view raw);

// Fraction of word 4-grams that repeat an earlier 4-gram.
double repetition_score(std::string_view raw);

bool has_nonempty_think(const ParsedResponse& pr);

// Renders a prediction in the answer grammar, wrapped in think/answer tags.
std::string render_response(const GroundingPrediction& pred,
                            std::string_view think = {});

}  // namespace groundrl

#endif  // GROUNDRL_RESPONSE_PARSER_HPP_
