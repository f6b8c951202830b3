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

#ifndef GROUNDRL_DATASET_IO_HPP_
#define GROUNDRL_DATASET_IO_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "groundrl/geometry.hpp"
#include "groundrl/mask.hpp"
#include "groundrl/metrics.hpp"
#include "groundrl/reward_engine.hpp"
#include "groundrl/segmenter.hpp"
#include "json.hpp"

namespace groundrl {

// One referring expression with its targets, all geometry in pixels.
// polygons[i] holds the rings of instance i, parallel to boxes_px.
struct AnnotationRecord {
  std::string sample_id;
  std::string image_id;
  CoordSpace image_size;
  std::string expression;
  std::vector<std::vector<Polygon>> polygons;
  std::vector<Box> boxes_px;
  std::optional<std::vector<std::array<Point2, 2>>> pos_points_px;
  std::optional<std::vector<std::vector<Point2>>> neg_points_px;
  bool is_no_target = false;
};

struct PredictionRecord {
  std::string sample_id;
  std::string raw_response;
};

struct RolloutRecord {
  std::string group_id;
  std::string rollout;
  std::string gt_ref;
  nlohmann::json source;  // the input line, echoed on output
};

// Annotation JSONL line:
//   {"sample_id", "image_id", "image_size": [h, w], "expression",
//    "polygons": [ring | [ring, ...], ...], "boxes": [[x1,y1,x2,y2], ...],
//    "pos_points": [[[x,y],[x,y]], ...] | null, "neg_points": ... | null,
//    "no_target": bool}
// A polygon entry is either one flat ring or a list of rings for one
// instance. Throws ParseError (with line), DuplicateSample or
// ConsistencyError.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
AnnotationRecord annotation_from_json(const nlohmann::json& j);
nlohmann::json annotation_to_json(const AnnotationRecord& rec);
void validate_annotation(const AnnotationRecord& rec);

// {"sample_id", "response"} per line.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
// {"group_id", "rollout", "gt_ref"} per line.
std::vector<RolloutRecord> load_rollouts(const std::filesystem::path& path);
// One id per line; blank lines ignored.
std::set<std::string> load_id_list(const std::filesystem::path& path);
std::vector<SampleEvaluation> load_evaluations(const std::filesystem::path& path);

// COCO-style {"images", "annotations", "categories"} with an optional
// "refs" array ({"ref_id", "image_id", "ann_ids", "sentences": [{"sent"}]}).
// Without refs each annotation becomes a record named after its category;
// a ref with no ann_ids becomes a no-target record.
std::vector<AnnotationRecord> import_coco(const std::filesystem::path& path);

// Rasterizes polygons at native resolution and rescales boxes and points
// into the [0, 1000] frame.
GroundTruth to_ground_truth(const AnnotationRecord& rec);

// Every annotated instance of each image, for the stub segmenter.
std::map<std::string, SyntheticScene> scenes_from_annotations(
    const std::vector<AnnotationRecord>& records);

// Trim plus ASCII lowercase.
std::string normalize_expression(std::string_view s);

struct TrainingSet {
  std::set<std::string> image_ids;
  std::set<std::string> expressions;  // already normalized
};

struct SubsetTotals {
  std::int64_t refs = 0;
  std::int64_t intersection = 0;
  std::int64_t uni = 0;
};

struct OverlapReport {
  std::int64_t n_val_images = 0;
  std::int64_t n_overlap_images = 0;
  double pct_overlap = 0.0;  // in percent
  std::int64_t n_verbatim_expressions = 0;
  std::int64_t total_refs = 0;
  std::int64_t clean_refs = 0;
  std::int64_t overlap_refs = 0;
  SubsetTotals full_totals, clean_totals, overlap_totals;
  std::optional<MetricReport> full, clean, overlap;
};

// Splits validation refs by whether their image occurs in the training set
// and evaluates each side. Throws AlignmentError unless every record has
// exactly one evaluation.
OverlapReport overlap_analysis(const TrainingSet& train,
                               const std::vector<AnnotationRecord>& val_records,
                               const std::vector<SampleEvaluation>& val_evals);
nlohmann::json overlap_to_json(const OverlapReport& r);

}  // namespace groundrl

#endif  // GROUNDRL_DATASET_IO_HPP_
