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

#ifndef SGSYNTH_CORE_HPP_
#define SGSYNTH_CORE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sgsynth {

/// Rounds half away from zero for the non-negative values boxes hold, so 1.5
/// renders as 2 and 1.4 as 1.
std::int64_t round_half_up(double value);

/// Axis-aligned box in pixel coordinates, corner ("xyxy") format. Construction
/// rejects negative coordinates, non-finite values and zero-area boxes.
class BBox {
 public:
  BBox(double x1, double y1, double x2, double y2);

  double x1() const noexcept { return x1_; }
  double y1() const noexcept { return y1_; }
  double x2() const noexcept { return x2_; }
  double y2() const noexcept { return y2_; }
  double width() const noexcept { return x2_ - x1_; }
  double height() const noexcept { return y2_ - y1_; }

  /// Integer coordinates as they appear in prompts.
  std::array<std::int64_t, 4> rounded() const;

  friend bool operator==(const BBox&, const BBox&) = default;

 private:
  double x1_, y1_, x2_, y2_;
};

/// A detected or annotated object. `index` is the per-image ordinal that
/// disambiguates instances of one category ("person.2" vs "person.6").
class ObjectInstance {
 public:
  ObjectInstance(std::string category, int index, BBox box,
                 std::optional<double> score = std::nullopt);

  const std::string& category() const noexcept { return category_; }
  int index() const noexcept { return index_; }
  const BBox& box() const noexcept { return box_; }
  // Detector confidence; carried through serialization only.
  const std::optional<double>& score() const noexcept { return score_; }

  friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;

 private:
  std::string category_;
  int index_;
  BBox box_;
  std::optional<double> score_;
};

/// Returns true when `category` can appear in an object key.
bool is_valid_category(std::string_view category);

/// "<category>.<index>", e.g. "tie.1".
std::string render_object_key(const ObjectInstance& obj);

/// Lowercases and trims; the form keys are compared in.
std::string normalize_object_key(std::string_view key);

/// Finds the object whose rendered key equals the normalized `key`.
/// Throws Error(kUnknownObjectKey) when nothing matches.
const ObjectInstance& parse_object_key(std::string_view key,
                                       std::span<const ObjectInstance> objects);

struct GlobalRegion {
  friend bool operator==(const GlobalRegion&, const GlobalRegion&) = default;
};

/// Union region of an ordered object pair.
struct PairRegion {
  ObjectInstance first;
  ObjectInstance second;
  friend bool operator==(const PairRegion&, const PairRegion&) = default;
};

using Region = std::variant<GlobalRegion, PairRegion>;

inline bool is_global(const Region& region) {
  return std::holds_alternative<GlobalRegion>(region);
}

/// One or more regions sharing a caption. `global` may appear at most once.
class CaptionKey {
 public:
  explicit CaptionKey(std::vector<Region> regions);

  const std::vector<Region>& regions() const noexcept { return regions_; }
  bool has_global() const;

  friend bool operator==(const CaptionKey&, const CaptionKey&) = default;

 private:
  std::vector<Region> regions_;
};

struct CaptionEntry {
  CaptionKey key;
  std::string text;
  friend bool operator==(const CaptionEntry&, const CaptionEntry&) = default;
};

/// Ordered caption map. Keys are unique and texts non-empty.
class CaptionSet {
 public:
  CaptionSet() = default;
  explicit CaptionSet(std::vector<CaptionEntry> entries);

  const std::vector<CaptionEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  /// Text of the key containing the global region, if any.
  std::optional<std::string> global_text() const;

  friend bool operator==(const CaptionSet&, const CaptionSet&) = default;

 private:
  std::vector<CaptionEntry> entries_;
};

/// Textual stand-in for an image: its size, objects and captions.
class ImageRecord {
 public:
  ImageRecord(std::string image_id, int width, int height,
              std::vector<ObjectInstance> objects, CaptionSet captions = {},
              std::string image_uri = {});

  const std::string& image_id() const noexcept { return image_id_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<ObjectInstance>& objects() const noexcept { return objects_; }
  const CaptionSet& captions() const noexcept { return captions_; }
  // Where the captioning service finds the pixels; empty when unknown.
  const std::string& image_uri() const noexcept { return image_uri_; }

  ImageRecord with_captions(CaptionSet captions) const;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;

 private:
  std::string image_id_;
  int width_;
  int height_;
  std::vector<ObjectInstance> objects_;
  CaptionSet captions_;
  std::string image_uri_;
};

/// `<source, relation, target>` between two object keys. Parsed triplets may
/// violate the graph invariants (self loops, blank relations); graph::validate
/// sorts those out.
struct RelationshipTriplet {
  std::string source;
  std::string target;
  std::string relation;
  std::optional<double> confidence;

  friend bool operator==(const RelationshipTriplet&,
                         const RelationshipTriplet&) = default;
};

struct SceneGraph {
  std::string image_id;
  std::vector<RelationshipTriplet> triplets;

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

}  // namespace sgsynth

#endif  // SGSYNTH_CORE_HPP_
