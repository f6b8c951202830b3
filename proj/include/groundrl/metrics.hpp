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

#ifndef GROUNDRL_METRICS_HPP_
#define GROUNDRL_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groundrl/geometry.hpp"
#include "groundrl/mask.hpp"
#include "json.hpp"

namespace groundrl {

struct SampleEvaluation {
  std::string sample_id;
  std::int64_t intersection = 0;
  std::int64_t uni = 0;
  double iou = 0.0;
  bool is_no_target_gt = false;
  bool predicted_no_target = false;
  std::optional<double> box_iou_best;

  bool operator==(const SampleEvaluation&) const = default;
};

// IoU is 1.0 when both masks are empty.
SampleEvaluation evaluate_sample(std::string sample_id, const BinaryMask& predicted,
                                 const BinaryMask& gt, bool is_no_target_gt,
                                 bool predicted_no_target);

// Cumulative IoU: sum of intersections over sum of unions.
double ciou(std::span<const SampleEvaluation> samples);
double miou(std::span<const SampleEvaluation> samples);
// Fraction of samples with IoU >= tau.
double precision_at(std::span<const SampleEvaluation> samples, double tau);

struct SampleBoxes {
  std::string sample_id;
  std::vector<Box> boxes;
};

struct BoxApResult {
  double ap = 0.0;    // mean over IoU thresholds 0.50:0.05:0.95
  double ap50 = 0.0;
  double ap75 = 0.0;
};

// Predictions carry no scores, so the precision/recall curve collapses to a
// single point and AP at threshold t is precision_t * recall_t. Matching is
// one-to-one within a sample, highest IoU first, accepting IoU >= t.
// Throws AlignmentError unless preds and gts list the same ids in order.
BoxApResult box_ap(std::span<const SampleBoxes> preds, std::span<const SampleBoxes> gts);
double box_ap_at(std::span<const SampleBoxes> preds, std::span<const SampleBoxes> gts,
                 double threshold);

struct NoTargetMetrics {
  std::optional<double> no_target_acc;  // correct abstentions / no-target samples
  std::optional<double> false_negative_rate;  // abstentions / target samples
};
NoTargetMetrics no_target_metrics(std::span<const SampleEvaluation> samples);

struct MetricReport {
  std::optional<double> ciou, miou;
  std::optional<double> p50, p70, p90;
  std::optional<double> ap, ap50, ap75;
  std::optional<double> no_target_acc, fnr;
  // Only filled when requested: no-target samples included, abstentions at
  // IoU 1 and hallucinations at IoU 0.
  std::optional<double> overall_ciou, overall_miou;
  std::int64_t n_samples = 0, n_target = 0, n_no_target = 0;
};

struct ReportOptions {
  bool overall = false;
};

// Mask metrics cover target samples only; abstention metrics are reported
// separately.
MetricReport build_report(std::span<const SampleEvaluation> samples,
                          const std::optional<BoxApResult>& boxes = std::nullopt,
                          ReportOptions opts = {});

nlohmann::json report_to_json(const MetricReport& r);
// Header line plus one data line; absent values are written as NA.
std::string report_to_tsv(const MetricReport& r);

nlohmann::json evaluation_to_json(const SampleEvaluation& e);
SampleEvaluation evaluation_from_json(const nlohmann::json& j);

}  // namespace groundrl

#endif  // GROUNDRL_METRICS_HPP_
