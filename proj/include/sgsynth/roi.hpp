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

#ifndef SGSYNTH_ROI_HPP_
#define SGSYNTH_ROI_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "sgsynth/core.hpp"

namespace sgsynth {

inline constexpr int kDefaultMaxRois = 16;

/// Two overlapping objects and the union box that gets captioned. `first`
/// precedes `second` in the record's object order.
struct ObjectPair {
  ObjectInstance first;
  ObjectInstance second;
  BBox union_box;

  PairRegion region() const { return PairRegion{first, second}; }

  friend bool operator==(const ObjectPair&, const ObjectPair&) = default;
};

/// Every unordered pair with IoU > 0, in canonical (i < j) order.
std::vector<ObjectPair> valid_pairs(std::span<const ObjectInstance> objects);

std::size_t valid_pair_count(std::span<const ObjectInstance> objects);

/// Valid pairs shuffled with `seed` and truncated to `n_max`.
///
/// The shuffle is Fisher-Yates, drawing j uniformly from [0, i] for
/// i = n-1 down to 1. Draws come from std::mt19937_64 seeded with `seed`;
/// the bounded draw uses rejection sampling on the raw 64-bit output, so the
/// sequence is identical on every conforming standard library.
std::vector<ObjectPair> select_rois(std::span<const ObjectInstance> objects,
                                    int n_max, std::uint64_t seed);

/// Uniform integer in [0, bound] from raw engine output.
std::uint64_t uniform_below_or_equal(std::mt19937_64& engine,
                                     std::uint64_t bound);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

/// Per-image shuffle seed: splitmix64(global_seed ^ fnv1a64(image_id)).
/// Independent of the order images are processed in.
std::uint64_t image_seed(std::uint64_t global_seed, std::string_view image_id);

}  // namespace sgsynth

#endif  // SGSYNTH_ROI_HPP_
