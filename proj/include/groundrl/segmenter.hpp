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

#ifndef GROUNDRL_SEGMENTER_HPP_
#define GROUNDRL_SEGMENTER_HPP_

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundrl/geometry.hpp"
#include "groundrl/mask.hpp"

namespace groundrl {

enum class PromptMode { kBoxOnly, kBox1Pt, kBox2Pt };

std::string_view prompt_mode_name(PromptMode m);
// Accepts "box_only", "box_1pt", "box_2pt"; nullopt otherwise.
std::optional<PromptMode> parse_prompt_mode(std::string_view name);
inline constexpr PromptMode kAllPromptModes[] = {
    PromptMode::kBoxOnly, PromptMode::kBox1Pt, PromptMode::kBox2Pt};

// Exactly one of the two fields is set.
struct ImageRef {
  std::string id;
  std::string png_base64;
};

// All geometry in image pixels.
struct SegmentRequest {
  ImageRef image;
  Box box;
  std::vector<Point2> pos_points;  // 1..2
  std::vector<Point2> neg_points;  // 0..2
  PromptMode mode = PromptMode::kBox2Pt;
};

struct SegmentResponse {
  RleMask mask;
  double confidence = 0.0;

  bool operator==(const SegmentResponse&) const = default;
};

// Throws ConsistencyError when point counts do not fit the prompt mode.
void validate_request(const SegmentRequest& req);

// Positive points the prompt mode actually consumes.
std::span<const Point2> active_pos_points(const SegmentRequest& req);

// A promptable segmenter returning its single highest-confidence mask.
// Implementations must accept concurrent calls.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmentResponse segment(const SegmentRequest& req) const = 0;
};

// Object masks of one image, used by the deterministic stub.
class SyntheticScene {
 public:
  SyntheticScene() = default;
  SyntheticScene(CoordSpace image, std::vector<BinaryMask> objects);

  const CoordSpace& image() const { return image_; }
  const std::vector<BinaryMask>& objects() const { return objects_; }
  const std::vector<Box>& object_boxes() const { return boxes_; }

 private:
  CoordSpace image_;
  std::vector<BinaryMask> objects_;
  std::vector<Box> boxes_;
};

// Picks the object maximizing box IoU with the prompt box, +1 if an active
// positive point lands on it, -1 per negative point on it. Ties go to the
// lower index. With no object overlapping the box, returns the rasterized
// box at confidence 0.1.
SegmentResponse stub_segment(const SegmentRequest& req, const SyntheticScene& scene);

class StubSegmenter : public Segmenter {
 public:
  explicit StubSegmenter(std::map<std::string, SyntheticScene> scenes)
      : scenes_(std::move(scenes)) {}

  SegmentResponse segment(const SegmentRequest& req) const override;

  const std::map<std::string, SyntheticScene>& scenes() const { return scenes_; }

 private:
  std::map<std::string, SyntheticScene> scenes_;
};

// Wraps another segmenter and counts calls.
class CountingSegmenter : public Segmenter {
 public:
  explicit CountingSegmenter(const Segmenter& inner) : inner_(inner) {}
  SegmentResponse segment(const SegmentRequest& req) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.segment(req);
  }
  long calls() const { return calls_.load(); }

 private:
  const Segmenter& inner_;
  mutable std::atomic<long> calls_{0};
};

// Scene file: {"images": [{"id": str, "size": [h, w], "objects": [obj...]}]}
// where obj is {"polygons": [[x1,y1,...], ...]}, {"rle": {...}} or
// {"box": [x1,y1,x2,y2]}, all in pixels.
std::map<std::string, SyntheticScene> load_scenes(const std::filesystem::path& path);

}  // namespace groundrl

#endif  // GROUNDRL_SEGMENTER_HPP_
