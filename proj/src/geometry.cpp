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

#include "groundrl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "groundrl/errors.hpp"

namespace groundrl {

void validate_space(const CoordSpace& space) {
  if (space.width < 1 || space.height < 1) {
    throw InvalidGeometry("coordinate space must be at least 1x1, got " +
                          std::to_string(space.width) + "x" +
                          std::to_string(space.height));
  }
}

Point2 rescale_point(const Point2& p, const CoordSpace& from,
                     const CoordSpace& to) {
  return {p.x * static_cast<double>(to.width) / static_cast<double>(from.width),
          p.y * static_cast<double>(to.height) /
              static_cast<double>(from.height)};
}

Box rescale_box(const Box& b, const CoordSpace& from, const CoordSpace& to) {
  const Point2 lo = rescale_point({b.x1, b.y1}, from, to);
  const Point2 hi = rescale_point({b.x2, b.y2}, from, to);
  return {lo.x, lo.y, hi.x, hi.y};
}

Box normalize_box(const Box& b) {
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    throw InvalidGeometry("box has a non-finite coordinate");
  }
  Box out = b;
  if (out.x1 > out.x2) std::swap(out.x1, out.x2);
  if (out.y1 > out.y2) std::swap(out.y1, out.y2);
  return out;
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  const double inter = (iw > 0.0 && ih > 0.0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double box_l1(const Box& a, const Box& b) {
  return std::abs(a.x1 - b.x1) + std::abs(a.y1 - b.y1) +
         std::abs(a.x2 - b.x2) + std::abs(a.y2 - b.y2);
}

bool point_in_box(const Point2& p, const Box& b) {
  return b.x1 <= p.x && p.x <= b.x2 && b.y1 <= p.y && p.y <= b.y2;
}

double point_distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

}  // namespace groundrl
