// Copyright 2026 The sgsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sgsynth/geometry.hpp"

#include <algorithm>

namespace sgsynth {

double area(const BBox& b) { return b.width() * b.height(); }

double intersection(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

double iou(const BBox& a, const BBox& b) {
  const double inter = intersection(a, b);
  // Zero-area boxes are rejected at construction, so the union is positive.
  return inter / (area(a) + area(b) - inter);
}

BBox union_box(const BBox& a, const BBox& b) {
  return BBox(std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()),
              std::max(a.x2(), b.x2()), std::max(a.y2(), b.y2()));
}

bool contains(const BBox& outer, const BBox& inner) {
  return outer.x1() <= inner.x1() && outer.y1() <= inner.y1() &&
         outer.x2() >= inner.x2() && outer.y2() >= inner.y2();
}

}  // namespace sgsynth
