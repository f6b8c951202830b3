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

#ifndef GROUNDRL_MASK_HPP_
#define GROUNDRL_MASK_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "groundrl/geometry.hpp"
#include "json.hpp"

namespace groundrl {

// Dense row-major binary raster. One byte per pixel, each 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::int64_t width, std::int64_t height);
  // Takes ownership of `bits`; any non-zero byte is treated as foreground.
  BinaryMask(std::int64_t width, std::int64_t height,
             std::vector<std::uint8_t> bits);

  std::int64_t width() const { return width_; }
  std::int64_t height() const { return height_; }
  CoordSpace space() const { return {width_, height_}; }

  bool at(std::int64_t row, std::int64_t col) const {
    return bits_[static_cast<std::size_t>(row * width_ + col)] != 0;
  }
  void set(std::int64_t row, std::int64_t col, bool value = true) {
    bits_[static_cast<std::size_t>(row * width_ + col)] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> bits() const { return bits_; }
  std::int64_t area() const;
  bool empty() const { return area() == 0; }

  // Continuous-coordinate bounding box of the foreground pixels, i.e.
  // [min_col, min_row, max_col + 1, max_row + 1]. Zero box when empty.
  Box tight_box() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::int64_t width_ = 0;
  std::int64_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Uncompressed COCO run lengths: column-major, alternating runs that start
// with background.
struct RleMask {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::int64_t> counts;

  bool operator==(const RleMask&) const = default;
};

// Flat [x1, y1, x2, y2, ...] pixel-coordinate ring.
struct Polygon {
  std::vector<double> vertices;
};

// Pixel (r, c) is set when its center (c + 0.5, r + 0.5) lies inside any
// polygon under the even-odd rule.
BinaryMask rasterize(std::span<const Polygon> polys, const CoordSpace& space);
// Fills the pixels whose centers fall inside the box (inclusive).
BinaryMask rasterize_box(const Box& box, const CoordSpace& space);

RleMask rle_encode(const BinaryMask& m);
BinaryMask rle_decode(const RleMask& r);

// {"size": [height, width], "counts": [...]}
nlohmann::json rle_to_json(const RleMask& r);
RleMask rle_from_json(const nlohmann::json& j);

// Returns 1.0 for two empty masks, 0.0 when exactly one is empty.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct OverlapCounts {
  std::int64_t intersection = 0;
  std::int64_t uni = 0;
};
OverlapCounts mask_overlap(const BinaryMask& a, const BinaryMask& b);

BinaryMask mask_union(std::span<const BinaryMask> masks);

// Distance from `p` to the nearest foreground pixel center, where both `p`
// and the distance are measured in `space` (the mask is stretched to cover
// it). Pass m.space() to work in pixels. Zero when `p` falls inside a
// foreground pixel; kNoForeground when the mask is empty.
inline constexpr double kNoForeground = std::numeric_limits<double>::max();
double distance_to_foreground(const BinaryMask& m, const Point2& p,
                              const CoordSpace& space);

}  // namespace groundrl

#endif  // GROUNDRL_MASK_HPP_
