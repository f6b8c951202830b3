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

#include "groundrl/reward_engine.hpp"

#include <cmath>
#include <limits>

#include "groundrl/errors.hpp"
#include "groundrl/parallel.hpp"

namespace groundrl {

namespace {

double sum_components(const RewardComponents& c) {
  double total = 0.0;
  for (const auto& [name, value] : c.named()) total += value;
  return total;
}

std::vector<Point2> gt_point_set(const GroundTruth& gt, std::size_t j) {
  if (gt.gt_points && j < gt.gt_points->size()) {
    const auto& pair = (*gt.gt_points)[j];
    return {pair[0], pair[1]};
  }
  return {gt.gt_boxes[j].center()};
}

bool gate_open(const ParsedResponse& pr, const RewardConfig& cfg) {
  if (!pr.format_ok || !pr.prediction) return false;
  return !cfg.think_required || has_nonempty_think(pr);
}

// Fills format, think, bbox, point, repetition and no_target.
RewardComponents distance_components(std::string_view raw, const ParsedResponse& pr,
                                     const GroundTruth& gt, const RewardConfig& cfg,
                                     const std::vector<std::optional<std::size_t>>& match) {
  RewardComponents c;
  if (const double rep = repetition_score(raw); rep > 0.0) {
    c.repetition = -cfg.repetition_penalty_weight * rep;
  }
  if (!gate_open(pr, cfg)) return c;

  c.format = cfg.format_reward;
  if (has_nonempty_think(pr)) c.think = cfg.think_bonus;

  const GroundingPrediction& pred = *pr.prediction;
  if (gt.is_no_target) {
    c.no_target = pred.no_target ? cfg.no_target_reward : cfg.hallucination_penalty;
    return c;
  }
  if (pred.no_target) return c;

  double bbox_hits = 0.0, point_hits = 0.0;
  for (std::size_t i = 0; i < pred.instances.size(); ++i) {
    if (!match[i]) continue;
    const Instance& inst = pred.instances[i];
    const Box& gt_box = gt.gt_boxes[*match[i]];
    if (box_iou(inst.bbox, gt_box) > cfg.box_iou_threshold &&
        box_l1(inst.bbox, gt_box) < cfg.box_l1_threshold) {
      bbox_hits += 1.0;
    }
    bool inside = true;
    double nearest = std::numeric_limits<double>::infinity();
    const auto targets = gt_point_set(gt, *match[i]);
    for (const auto& p : inst.points) {
      inside = inside && point_in_box(p, inst.bbox);
      for (const auto& q : targets) nearest = std::min(nearest, point_distance(p, q));
    }
    if (inside && nearest < cfg.point_dist_threshold) point_hits += 1.0;
  }
  const auto n = static_cast<double>(pred.instances.size());
  c.bbox = bbox_hits / n;
  c.point = point_hits / n;
  return c;
}

Point2 to_pixels(const Point2& p, const CoordSpace& image) {
  return rescale_point(p, kNormalizedSpace, image);
}

std::vector<Point2> to_pixels(const std::vector<Point2>& ps, const CoordSpace& image) {
  std::vector<Point2> out;
  out.reserve(ps.size());
  for (const auto& p : ps) out.push_back(to_pixels(p, image));
  return out;
}

}  // namespace

std::array<std::pair<std::string_view, double>, 8> RewardComponents::named() const {
  return {{{"format", format},
           {"think", think},
           {"bbox", bbox},
           {"point", point},
           {"repetition", repetition},
           {"sam_iou", sam_iou},
           {"neg_validity", neg_validity},
           {"no_target", no_target}}};
}

void validate_ground_truth(const GroundTruth& gt) {
  validate_space(gt.image);
  if (gt.is_no_target) {
    if (!gt.gt_boxes.empty() || !gt.gt_masks.empty()) {
      throw ConsistencyError("no-target ground truth must have no boxes or masks");
    }
    return;
  }
  if (gt.gt_boxes.empty()) throw ConsistencyError("target ground truth needs boxes");
  if (!gt.gt_masks.empty() && gt.gt_masks.size() != gt.gt_boxes.size()) {
    throw ConsistencyError("ground truth has " + std::to_string(gt.gt_boxes.size()) +
                           " boxes but " + std::to_string(gt.gt_masks.size()) + " masks");
  }
  for (const auto& m : gt.gt_masks) {
    if (m.space() != gt.image) throw ShapeError("ground-truth mask does not match image size");
  }
}

void validate_reward_config(const RewardConfig& cfg) {
  const double weights[] = {cfg.iou_weight,  cfg.neg_weight,         cfg.no_target_reward,
                            cfg.hallucination_penalty, cfg.format_reward, cfg.think_bonus,
                            cfg.repetition_penalty_weight};
  for (double w : weights) {
    if (!std::isfinite(w)) throw ConfigError("reward weights must be finite");
  }
  const std::pair<const char*, double> thresholds[] = {
      {"box_iou_threshold", cfg.box_iou_threshold},
      {"box_l1_threshold", cfg.box_l1_threshold},
      {"point_dist_threshold", cfg.point_dist_threshold},
      {"neg_margin", cfg.neg_margin}};
  for (const auto& [name, v] : thresholds) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string(name) + " must be positive");
    }
  }
}

std::string_view reward_mode_name(RewardMode m) {
  return m == RewardMode::kDistance ? "distance" : "sam_loop";
}

std::optional<RewardMode> parse_reward_mode(std::string_view name) {
  if (name == "distance") return RewardMode::kDistance;
  if (name == "sam_loop") return RewardMode::kSamLoop;
  return std::nullopt;
}

std::vector<std::optional<std::size_t>> match_instances(
    const std::vector<Instance>& instances, const std::vector<Box>& gt_boxes) {
  std::vector<std::optional<std::size_t>> match(instances.size());
  std::vector<bool> taken(gt_boxes.size(), false);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < gt_boxes.size(); ++j) {
      if (taken[j]) continue;
      const double iou = box_iou(instances[i].bbox, gt_boxes[j]);
      if (iou > best) {
        best = iou;
        match[i] = j;
      }
    }
    if (match[i]) taken[*match[i]] = true;
  }
  return match;
}

RewardBreakdown distance_reward(std::string_view raw, const ParsedResponse& pr,
                                const GroundTruth& gt, const RewardConfig& cfg) {
  RewardBreakdown out;
  out.faults = pr.format_faults;
  std::vector<std::optional<std::size_t>> match;
  if (pr.prediction) match = match_instances(pr.prediction->instances, gt.gt_boxes);
  out.components = distance_components(raw, pr, gt, cfg, match);
  out.total = sum_components(out.components);
  return out;
}

RewardBreakdown sam_loop_reward(std::string_view raw, const ParsedResponse& pr,
                                const GroundTruth& gt, const Segmenter& seg,
                                const RewardConfig& cfg) {
  RewardBreakdown out;
  out.faults = pr.format_faults;
  std::vector<std::optional<std::size_t>> match;
  if (pr.prediction) match = match_instances(pr.prediction->instances, gt.gt_boxes);
  RewardComponents c = distance_components(raw, pr, gt, cfg, match);
  if (!cfg.sam_keep_distance_terms) c.bbox = c.point = 0.0;

  const bool scorable = gate_open(pr, cfg) && !gt.is_no_target &&
                        !pr.prediction->no_target;
  if (scorable) {
    if (gt.gt_masks.empty()) {
      throw ConsistencyError("segmenter-in-the-loop reward needs ground-truth masks");
    }
    const auto& instances = pr.prediction->instances;
    const BinaryMask gt_union = mask_union(gt.gt_masks);

    std::vector<BinaryMask> predicted;
    predicted.reserve(instances.size());
    for (const auto& inst : instances) {
      SegmentRequest req;
      req.image.id = gt.image_id;
      req.box = rescale_box(inst.bbox, kNormalizedSpace, gt.image);
      req.pos_points = to_pixels(inst.points, gt.image);
      req.neg_points = to_pixels(inst.neg_points, gt.image);
      req.mode = cfg.sam_prompt_mode;
      predicted.push_back(rle_decode(seg.segment(req).mask));
    }
    c.sam_iou = cfg.iou_weight * mask_iou(mask_union(predicted), gt_union);

    std::size_t neg_total = 0, neg_valid = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const BinaryMask& ref = match[i] ? gt.gt_masks[*match[i]] : gt_union;
      for (const auto& p : instances[i].neg_points) {
        ++neg_total;
        if (!point_in_box(p, instances[i].bbox)) continue;
        const double d = distance_to_foreground(ref, p, kNormalizedSpace);
        if (d > 0.0 && d >= cfg.neg_margin) ++neg_valid;
      }
    }
    if (neg_total > 0) {
      c.neg_validity = cfg.neg_weight * static_cast<double>(neg_valid) /
                       static_cast<double>(neg_total);
    }
  }
  out.components = c;
  out.total = sum_components(c);
  return out;
}

std::vector<RewardBreakdown> score_group(const std::vector<std::string>& rollouts,
                                         const GroundTruth& gt, const RewardConfig& cfg,
                                         RewardMode mode, const Segmenter* seg, int jobs) {
  if (mode == RewardMode::kSamLoop && seg == nullptr) {
    throw ConfigError("sam_loop scoring needs a segmenter");
  }
  std::vector<RewardBreakdown> out(rollouts.size());
  parallel_for(rollouts.size(), jobs, [&](std::size_t i) {
    const ParsedResponse pr = parse_response(rollouts[i]);
    out[i] = mode == RewardMode::kDistance ? distance_reward(rollouts[i], pr, gt, cfg)
                                           : sam_loop_reward(rollouts[i], pr, gt, *seg, cfg);
  });
  return out;
}

nlohmann::json breakdown_to_json(const RewardBreakdown& b) {
  nlohmann::json comps = nlohmann::json::object();
  for (const auto& [name, value] : b.components.named()) comps[std::string(name)] = value;
  nlohmann::json faults = nlohmann::json::array();
  for (auto f : b.faults) faults.push_back(fault_name(f));
  return {{"total", b.total}, {"components", std::move(comps)}, {"faults", std::move(faults)}};
}

}  // namespace groundrl
