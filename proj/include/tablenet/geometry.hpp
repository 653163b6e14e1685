// Copyright 2026 The Project Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>

namespace tablenet {

/// Axis-aligned pixel rectangle covering the half-open interval
/// [x0, x1) x [y0, y1). Origin is the top-left corner of the page.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  constexpr int width() const { return x1 - x0; }
  constexpr int height() const { return y1 - y0; }
  constexpr std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }
  constexpr bool valid() const { return x0 >= 0 && y0 >= 0 && x1 > x0 && y1 > y0; }
  constexpr double centerX() const { return 0.5 * (x0 + x1); }
  constexpr double centerY() const { return 0.5 * (y0 + y1); }

  constexpr bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Rect& r) {
  return os << "(" << r.x0 << "," << r.y0 << "," << r.x1 << "," << r.y1 << ")";
}

/// Intersection, or nullopt when the rectangles share no pixel.
std::optional<Rect> intersect(const Rect& a, const Rect& b);

/// Smallest rectangle covering both.
Rect unite(const Rect& a, const Rect& b);

std::int64_t intersectionArea(const Rect& a, const Rect& b);

/// Intersection over union, 0 for disjoint rectangles.
double rectIoU(const Rect& a, const Rect& b);

/// area(inner & outer) / area(inner).
double containmentFraction(const Rect& inner, const Rect& outer);

/// Length of the overlap of [a0, a1) and [b0, b1), 0 when disjoint.
constexpr int intervalOverlap(int a0, int a1, int b0, int b1) {
  return std::max(0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace tablenet
