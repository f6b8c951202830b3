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

#ifndef GROUNDRL_GEOMETRY_HPP_
#define GROUNDRL_GEOMETRY_HPP_

#include <cstdint>

namespace groundrl {

// A rectangular coordinate frame, either an image in pixels or the model's
// normalized grounding frame.
struct CoordSpace {
  std::int64_t width = 1;
  std::int64_t height = 1;

  bool operator==(const CoordSpace&) const = default;
};

// The frame grounding outputs are expressed in.
inline constexpr CoordSpace kNormalizedSpace{1000, 1000};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

// Axis-aligned box with continuous-coordinate area (x2 - x1) * (y2 - y1).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x1 + x2), 0.5 * (y1 + y2)}; }

  bool operator==(const Box&) const = default;
};

// Throws InvalidGeometry for non-positive dimensions.
void validate_space(const CoordSpace& space);

Point2 rescale_point(const Point2& p, const CoordSpace& from,
                     const CoordSpace& to);
Box rescale_box(const Box& b, const CoordSpace& from, const CoordSpace& to);

// Swaps corners so that x1 <= x2 and y1 <= y2. Zero-width and zero-height
// boxes are legal. Throws InvalidGeometry on a non-finite coordinate.
Box normalize_box(const Box& b);

// Intersection over union of two normalized boxes; 0 when the union is empty.
double box_iou(const Box& a, const Box& b);
double box_l1(const Box& a, const Box& b);

// Boundary-inclusive containment.
bool point_in_box(const Point2& p, const Box& b);
double point_distance(const Point2& a, const Point2& b);

}  // namespace groundrl

#endif  // GROUNDRL_GEOMETRY_HPP_
