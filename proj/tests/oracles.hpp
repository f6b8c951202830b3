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

// Independent reference implementations used to check the library. They are
// deliberately naive and share no code with src/.
#ifndef GROUNDRL_TESTS_ORACLES_HPP_
#define GROUNDRL_TESTS_ORACLES_HPP_

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

// A plain 2-D grid of booleans, indexed grid[row][col].
using Grid = std::vector<std::vector<bool>>;

struct Counts {
  std::int64_t inter = 0;
  std::int64_t uni = 0;
};

inline Counts pixel_counts(const Grid& a, const Grid& b) {
  Counts c;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t k = 0; k < a[r].size(); ++k) {
      if (a[r][k] && b[r][k]) ++c.inter;
      if (a[r][k] || b[r][k]) ++c.uni;
    }
  }
  return c;
}

// IoU as an exact rational; both-empty counts as 1/1.
inline Counts iou_fraction(const Grid& a, const Grid& b) {
  Counts c = pixel_counts(a, b);
  if (c.uni == 0) return {1, 1};
  return c;
}

// iou >= num/den, compared in integers.
inline bool iou_at_least(const Counts& f, std::int64_t num, std::int64_t den) {
  return f.inter * den >= num * f.uni;
}

// W. Randolph Franklin's crossing test.
inline bool pnpoly(const std::vector<double>& xy, double x, double y) {
  const std::size_t n = xy.size() / 2;
  bool c = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = xy[2 * i], yi = xy[2 * i + 1];
    const double xj = xy[2 * j], yj = xy[2 * j + 1];
    if (((yi > y) != (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi)) c = !c;
  }
  return c;
}

inline Grid rasterize_polys(const std::vector<std::vector<double>>& polys, int w, int h) {
  Grid g(h, std::vector<bool>(w, false));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      bool inside = false;
      for (const auto& p : polys) inside = inside || pnpoly(p, c + 0.5, r + 0.5);
      g[r][c] = inside;
    }
  }
  return g;
}

// Area of [x1,x2) x [y1,y2) on the integer grid, counted cell by cell.
inline double box_iou_by_cells(int ax1, int ay1, int ax2, int ay2, int bx1, int by1, int bx2,
                               int by2, int extent) {
  std::int64_t inter = 0, uni = 0;
  for (int y = 0; y < extent; ++y) {
    for (int x = 0; x < extent; ++x) {
      const bool ia = x >= ax1 && x < ax2 && y >= ay1 && y < ay2;
      const bool ib = x >= bx1 && x < bx2 && y >= by1 && y < by2;
      inter += ia && ib;
      uni += ia || ib;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Quadratic 4-gram duplicate counter.
inline double repetition(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> w;
  for (std::string s; in >> s;) w.push_back(s);
  if (w.size() < 4) return 0.0;
  const std::size_t n = w.size() - 3;
  std::size_t dup = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (w[i] == w[j] && w[i + 1] == w[j + 1] && w[i + 2] == w[j + 2] && w[i + 3] == w[j + 3]) {
        ++dup;
        break;
      }
    }
  }
  return static_cast<double>(dup) / static_cast<double>(n);
}

// Column-major run lengths starting with background.
inline std::vector<std::int64_t> rle(const Grid& g) {
  std::vector<std::int64_t> counts;
  bool cur = false;
  std::int64_t run = 0;
  const std::size_t h = g.size(), w = h ? g[0].size() : 0;
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) {
      if (g[r][c] != cur) {
        counts.push_back(run);
        run = 0;
        cur = !cur;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return counts;
}

}  // namespace oracle

#endif  // GROUNDRL_TESTS_ORACLES_HPP_
