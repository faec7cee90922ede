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

#include "sgsynth/roi.hpp"

#include <limits>
#include <utility>

#include "sgsynth/error.hpp"
#include "sgsynth/geometry.hpp"

namespace sgsynth {

std::vector<ObjectPair> valid_pairs(std::span<const ObjectInstance> objects) {
  std::vector<ObjectPair> pairs;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      const BBox& a = objects[i].box();
      const BBox& b = objects[j].box();
      if (iou(a, b) > 0.0) {
        pairs.push_back(ObjectPair{objects[i], objects[j], union_box(a, b)});
      }
    }
  }
  return pairs;
}

std::size_t valid_pair_count(std::span<const ObjectInstance> objects) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t j = i + 1; j < objects.size(); ++j) {
      if (iou(objects[i].box(), objects[j].box()) > 0.0) ++count;
    }
  }
  return count;
}

std::uint64_t uniform_below_or_equal(std::mt19937_64& engine,
                                     std::uint64_t bound) {
  if (bound == std::numeric_limits<std::uint64_t>::max()) return engine();
  const std::uint64_t range = bound + 1;
  // Largest multiple of `range` that fits; values above it would bias.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t draw;
  do {
    draw = engine();
  } while (draw >= limit);
  return draw % range;
}

std::vector<ObjectPair> select_rois(std::span<const ObjectInstance> objects,
                                    int n_max, std::uint64_t seed) {
  if (n_max < 1) {
    throw Error(ErrorCode::kInvalidArgument, "n_max must be at least 1");
  }
  std::vector<ObjectPair> pairs = valid_pairs(objects);
  std::mt19937_64 engine(seed);
  for (std::size_t i = pairs.size(); i > 1; --i) {
    const auto j = uniform_below_or_equal(engine, i - 1);
    if (j != i - 1) std::swap(pairs[i - 1], pairs[j]);
  }
  if (pairs.size() > static_cast<std::size_t>(n_max)) {
    pairs.erase(pairs.begin() + n_max, pairs.end());
  }
  return pairs;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t image_seed(std::uint64_t global_seed, std::string_view image_id) {
  return splitmix64(global_seed ^ fnv1a64(image_id));
}

}  // namespace sgsynth
