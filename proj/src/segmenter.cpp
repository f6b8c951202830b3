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

#include "groundrl/segmenter.hpp"

#include <cmath>
#include <fstream>

#include "groundrl/errors.hpp"
#include "json.hpp"

namespace groundrl {

namespace {

bool point_on_mask(const BinaryMask& m, const Point2& p) {
  if (!(p.x >= 0.0) || !(p.y >= 0.0)) return false;
  const auto col = static_cast<std::int64_t>(std::floor(p.x));
  const auto row = static_cast<std::int64_t>(std::floor(p.y));
  return col < m.width() && row < m.height() && m.at(row, col);
}

}  // namespace

std::string_view prompt_mode_name(PromptMode m) {
  switch (m) {
    case PromptMode::kBoxOnly: return "box_only";
    case PromptMode::kBox1Pt: return "box_1pt";
    case PromptMode::kBox2Pt: return "box_2pt";
  }
  return "box_2pt";
}

std::optional<PromptMode> parse_prompt_mode(std::string_view name) {
  for (PromptMode m : kAllPromptModes) {
    if (prompt_mode_name(m) == name) return m;
  }
  return std::nullopt;
}

void validate_request(const SegmentRequest& req) {
  const std::size_t pos = req.pos_points.size();
  if (pos > 2) throw ConsistencyError("at most 2 positive points are allowed");
  if (req.neg_points.size() > 2) throw ConsistencyError("at most 2 negative points are allowed");
  if (req.mode == PromptMode::kBox1Pt && pos < 1) {
    throw ConsistencyError("box_1pt needs a positive point");
  }
  if (req.mode == PromptMode::kBox2Pt && pos < 2) {
    throw ConsistencyError("box_2pt needs two positive points");
  }
  (void)normalize_box(req.box);
}

std::span<const Point2> active_pos_points(const SegmentRequest& req) {
  std::span<const Point2> all(req.pos_points);
  switch (req.mode) {
    case PromptMode::kBoxOnly: return all.first(0);
    case PromptMode::kBox1Pt: return all.first(std::min<std::size_t>(1, all.size()));
    case PromptMode::kBox2Pt: return all;
  }
  return all;
}

SyntheticScene::SyntheticScene(CoordSpace image, std::vector<BinaryMask> objects)
    : image_(image), objects_(std::move(objects)) {
  validate_space(image_);
  boxes_.reserve(objects_.size());
  for (const auto& o : objects_) {
    if (o.space() != image_) throw ShapeError("scene object does not match the image size");
    boxes_.push_back(o.tight_box());
  }
}

SegmentResponse stub_segment(const SegmentRequest& req, const SyntheticScene& scene) {
  validate_request(req);
  const Box box = normalize_box(req.box);
  const auto pos = active_pos_points(req);

  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t k = 0; k < scene.objects().size(); ++k) {
    const auto& obj = scene.objects()[k];
    const double iou = box_iou(box, scene.object_boxes()[k]);
    if (iou <= 0.0) continue;
    double score = iou;
    for (const auto& p : pos) {
      if (point_on_mask(obj, p)) {
        score += 1.0;
        break;
      }
    }
    for (const auto& p : req.neg_points) {
      if (point_on_mask(obj, p)) score -= 1.0;
    }
    if (!best || score > best_score) {
      best = k;
      best_score = score;
    }
  }
  if (!best) {
    return {rle_encode(rasterize_box(box, scene.image())), 0.1};
  }
  return {rle_encode(scene.objects()[*best]),
          box_iou(box, scene.object_boxes()[*best])};
}

SegmentResponse StubSegmenter::segment(const SegmentRequest& req) const {
  if (req.image.id.empty()) {
    throw UnknownImage("stub segmenter only resolves images by id");
  }
  const auto it = scenes_.find(req.image.id);
  if (it == scenes_.end()) throw UnknownImage("unknown image id: " + req.image.id);
  return stub_segment(req, it->second);
}

std::map<std::string, SyntheticScene> load_scenes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("images") ||
      !j["images"].is_array()) {
    throw ParseError("scene file " + path.string() + " must be {\"images\": [...]}");
  }
  std::map<std::string, SyntheticScene> out;
  try {
    for (const auto& img : j["images"]) {
      const auto id = img.at("id").get<std::string>();
      const auto& size = img.at("size");
      const CoordSpace space{size.at(1).get<std::int64_t>(), size.at(0).get<std::int64_t>()};
      validate_space(space);
      std::vector<BinaryMask> objects;
      for (const auto& obj : img.at("objects")) {
        if (obj.contains("polygons")) {
          std::vector<Polygon> polys;
          for (const auto& p : obj["polygons"]) polys.push_back({p.get<std::vector<double>>()});
          objects.push_back(rasterize(polys, space));
        } else if (obj.contains("rle")) {
          objects.push_back(rle_decode(rle_from_json(obj["rle"])));
        } else if (obj.contains("box")) {
          const auto b = obj["box"].get<std::vector<double>>();
          if (b.size() != 4) throw ParseError("scene box needs 4 numbers");
          objects.push_back(rasterize_box({b[0], b[1], b[2], b[3]}, space));
        } else {
          throw ParseError("scene object needs polygons, rle or box");
        }
      }
      if (!out.emplace(id, SyntheticScene(space, std::move(objects))).second) {
        throw DuplicateSample("duplicate scene image id: " + id);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("scene file " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace groundrl
