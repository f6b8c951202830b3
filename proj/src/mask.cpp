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

#include "groundrl/mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

void check_dims(std::int64_t width, std::int64_t height) {
  if (width < 1 || height < 1) {
    throw ShapeError("mask dimensions must be positive, got " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError("mask shape mismatch: " + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " +
                     std::to_string(b.width()) + "x" +
                     std::to_string(b.height()));
  }
}

void validate_polygon(const Polygon& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 6 || v.size() % 2 != 0) {
    throw InvalidGeometry("polygon needs an even number of coordinates and at "
                          "least 3 vertices, got " +
                          std::to_string(v.size()) + " values");
  }
  for (double c : v) {
    if (!std::isfinite(c)) throw InvalidGeometry("polygon has a non-finite vertex");
  }
}

// Scanline fill of one polygon into `out` (OR semantics).
void fill_polygon(const Polygon& poly, BinaryMask& out) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size() / 2;
  std::vector<double> crossings;
  for (std::int64_t row = 0; row < out.height(); ++row) {
    const double y = static_cast<double>(row) + 0.5;
    crossings.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const double xi = v[2 * i], yi = v[2 * i + 1];
      const double xj = v[2 * j], yj = v[2 * j + 1];
      if ((yi > y) != (yj > y)) {
        crossings.push_back(xi + (y - yi) * (xj - xi) / (yj - yi));
      }
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());
    // A center at x is inside when an odd number of crossings lie strictly
    // right of it, i.e. lo <= x < hi for some consecutive pair.
    for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) {
      const double lo = crossings[k], hi = crossings[k + 1];
      std::int64_t c0 = static_cast<std::int64_t>(std::ceil(lo - 0.5));
      std::int64_t c1 = static_cast<std::int64_t>(std::ceil(hi - 0.5)) - 1;
      c0 = std::max<std::int64_t>(c0, 0);
      c1 = std::min<std::int64_t>(c1, out.width() - 1);
      for (std::int64_t c = c0; c <= c1; ++c) out.set(row, c);
    }
  }
}

}  // namespace

BinaryMask::BinaryMask(std::int64_t width, std::int64_t height)
    : width_(width), height_(height) {
  check_dims(width, height);
  bits_.assign(static_cast<std::size_t>(width * height), 0);
}

BinaryMask::BinaryMask(std::int64_t width, std::int64_t height,
                       std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  check_dims(width, height);
  if (bits_.size() != static_cast<std::size_t>(width * height)) {
    throw ShapeError("mask bit count " + std::to_string(bits_.size()) +
                     " does not match " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::int64_t BinaryMask::area() const {
  return std::accumulate(bits_.begin(), bits_.end(), std::int64_t{0});
}

Box BinaryMask::tight_box() const {
  std::int64_t r0 = height_, r1 = -1, c0 = width_, c1 = -1;
  for (std::int64_t r = 0; r < height_; ++r) {
    for (std::int64_t c = 0; c < width_; ++c) {
      if (!at(r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return {};
  return {static_cast<double>(c0), static_cast<double>(r0),
          static_cast<double>(c1 + 1), static_cast<double>(r1 + 1)};
}

BinaryMask rasterize(std::span<const Polygon> polys, const CoordSpace& space) {
  if (polys.empty()) throw InvalidGeometry("rasterize needs at least one polygon");
  validate_space(space);
  for (const auto& p : polys) validate_polygon(p);
  BinaryMask out(space.width, space.height);
  for (const auto& p : polys) fill_polygon(p, out);
  return out;
}

BinaryMask rasterize_box(const Box& box, const CoordSpace& space) {
  validate_space(space);
  const Box b = normalize_box(box);
  BinaryMask out(space.width, space.height);
  for (std::int64_t r = 0; r < space.height; ++r) {
    const double y = static_cast<double>(r) + 0.5;
    if (y < b.y1 || y > b.y2) continue;
    for (std::int64_t c = 0; c < space.width; ++c) {
      const double x = static_cast<double>(c) + 0.5;
      if (x >= b.x1 && x <= b.x2) out.set(r, c);
    }
  }
  return out;
}

RleMask rle_encode(const BinaryMask& m) {
  RleMask out{m.width(), m.height(), {}};
  bool current = false;
  std::int64_t run = 0;
  for (std::int64_t c = 0; c < m.width(); ++c) {
    for (std::int64_t r = 0; r < m.height(); ++r) {
      const bool v = m.at(r, c);
      if (v != current) {
        out.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  out.counts.push_back(run);
  return out;
}

BinaryMask rle_decode(const RleMask& r) {
  if (r.width < 1 || r.height < 1) {
    throw CorruptRle("RLE size must be positive, got " + std::to_string(r.height) +
                     "x" + std::to_string(r.width));
  }
  const std::int64_t total = r.width * r.height;
  std::int64_t sum = 0;
  for (std::int64_t c : r.counts) {
    if (c < 0) throw CorruptRle("negative RLE run length");
    sum += c;
    if (sum > total) break;
  }
  if (sum != total) {
    throw CorruptRle("RLE counts sum to " + std::to_string(sum) + ", expected " +
                     std::to_string(total));
  }
  BinaryMask out(r.width, r.height);
  std::int64_t pos = 0;
  bool value = false;
  for (std::int64_t run : r.counts) {
    if (value) {
      for (std::int64_t k = pos; k < pos + run; ++k) {
        out.set(k % r.height, k / r.height);
      }
    }
    pos += run;
    value = !value;
  }
  return out;
}

nlohmann::json rle_to_json(const RleMask& r) {
  return {{"size", {r.height, r.width}}, {"counts", r.counts}};
}

RleMask rle_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("size") || !j.contains("counts")) {
    throw CorruptRle("RLE object needs \"size\" and \"counts\"");
  }
  const auto& size = j.at("size");
  const auto& counts = j.at("counts");
  if (!size.is_array() || size.size() != 2 || !size[0].is_number_integer() ||
      !size[1].is_number_integer()) {
    throw CorruptRle("RLE \"size\" must be [height, width]");
  }
  if (!counts.is_array()) throw CorruptRle("RLE \"counts\" must be an integer array");
  RleMask out;
  out.height = size[0].get<std::int64_t>();
  out.width = size[1].get<std::int64_t>();
  out.counts.reserve(counts.size());
  for (const auto& c : counts) {
    if (!c.is_number_integer()) throw CorruptRle("RLE count is not an integer");
    out.counts.push_back(c.get<std::int64_t>());
  }
  // Validates the sums.
  (void)rle_decode(out);
  return out;
}

OverlapCounts mask_overlap(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b);
  OverlapCounts out;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    out.intersection += ab[i] & bb[i];
    out.uni += ab[i] | bb[i];
  }
  return out;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const OverlapCounts o = mask_overlap(a, b);
  if (o.uni == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(o.uni);
}

BinaryMask mask_union(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw ShapeError("mask_union needs at least one mask");
  std::vector<std::uint8_t> bits(masks[0].bits().begin(), masks[0].bits().end());
  for (std::size_t k = 1; k < masks.size(); ++k) {
    require_same_shape(masks[0], masks[k]);
    const auto mb = masks[k].bits();
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= mb[i];
  }
  return BinaryMask(masks[0].width(), masks[0].height(), std::move(bits));
}

double distance_to_foreground(const BinaryMask& m, const Point2& p,
                              const CoordSpace& space) {
  validate_space(space);
  const double sx = static_cast<double>(space.width) / static_cast<double>(m.width());
  const double sy = static_cast<double>(space.height) / static_cast<double>(m.height());
  const double px = p.x / sx;
  const double py = p.y / sy;
  if (px >= 0.0 && py >= 0.0) {
    const auto col = static_cast<std::int64_t>(std::floor(px));
    const auto row = static_cast<std::int64_t>(std::floor(py));
    if (col < m.width() && row < m.height() && m.at(row, col)) return 0.0;
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t r = 0; r < m.height(); ++r) {
    for (std::int64_t c = 0; c < m.width(); ++c) {
      if (!m.at(r, c)) continue;
      const double dx = (static_cast<double>(c) + 0.5 - px) * sx;
      const double dy = (static_cast<double>(r) + 0.5 - py) * sy;
      best = std::min(best, dx * dx + dy * dy);
    }
  }
  if (!std::isfinite(best)) return kNoForeground;
  return std::sqrt(best);
}

}  // namespace groundrl
