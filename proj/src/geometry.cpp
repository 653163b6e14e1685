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

#include "tablenet/geometry.hpp"

namespace tablenet {

std::optional<Rect> intersect(const Rect& a, const Rect& b) {
  Rect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  if (r.x1 <= r.x0 || r.y1 <= r.y0) return std::nullopt;
  return r;
}

Rect unite(const Rect& a, const Rect& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

std::int64_t intersectionArea(const Rect& a, const Rect& b) {
  const auto w = intervalOverlap(a.x0, a.x1, b.x0, b.x1);
  const auto h = intervalOverlap(a.y0, a.y1, b.y0, b.y1);
  return static_cast<std::int64_t>(w) * h;
}

double rectIoU(const Rect& a, const Rect& b) {
  const auto inter = intersectionArea(a, b);
  if (inter == 0) return 0.0;
  const auto uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double containmentFraction(const Rect& inner, const Rect& outer) {
  if (inner.area() <= 0) return 0.0;
  return static_cast<double>(intersectionArea(inner, outer)) / static_cast<double>(inner.area());
}

}  // namespace tablenet
