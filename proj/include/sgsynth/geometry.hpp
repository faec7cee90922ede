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

#ifndef SGSYNTH_GEOMETRY_HPP_
#define SGSYNTH_GEOMETRY_HPP_

#include "sgsynth/core.hpp"

namespace sgsynth {

double area(const BBox& b);

/// Overlap area. Boxes that only touch along an edge overlap by zero.
double intersection(const BBox& a, const BBox& b);

double iou(const BBox& a, const BBox& b);

/// Smallest box covering both inputs.
BBox union_box(const BBox& a, const BBox& b);

/// True when `outer` covers `inner` entirely.
bool contains(const BBox& outer, const BBox& inner);

}  // namespace sgsynth

#endif  // SGSYNTH_GEOMETRY_HPP_
