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

#ifndef SGSYNTH_GRAPH_HPP_
#define SGSYNTH_GRAPH_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sgsynth/core.hpp"

namespace sgsynth {

enum class BoundRole { kSource, kTarget };

/// The object in `bound_role` may take part in at most `max_partners`
/// distinct relations labelled `predicate`.
struct ExclusivityRule {
  std::string predicate;
  BoundRole bound_role = BoundRole::kTarget;
  int max_partners = 1;
  friend bool operator==(const ExclusivityRule&, const ExclusivityRule&) = default;
};

/// (riding, source, 1) and (wearing, target, 1).
std::vector<ExclusivityRule> default_exclusivity_rules();

enum class RejectReason {
  kUnknownObject,
  kSelfLoop,
  kDuplicate,
  kExclusivityViolation,
  kEmptyRelation,
};
std::string_view to_string(RejectReason reason);

struct RejectedTriplet {
  RelationshipTriplet triplet;
  RejectReason reason;
};

struct ValidationReport {
  SceneGraph accepted;
  std::vector<RejectedTriplet> rejected;
};

/// Lowercase, trimmed, inner whitespace runs collapsed to one space.
std::string normalize_predicate(std::string_view relation);

/// First JSON value embedded in `text`, tolerating code fences, surrounding
/// prose and trailing commas. Throws Error(kMalformedJson).
nlohmann::json extract_json(std::string_view text);

/// Parses an LLM completion into scene graphs. Accepts a list of per-image
/// objects or one bare object. Throws Error(kMalformedJson) or
/// Error(kSchemaMismatch) with the offending path in detail().
std::vector<SceneGraph> parse_response(std::string_view text);

/// Checks triplets in listed order; see RejectReason. Accepted triplets carry
/// canonical object keys. Throws Error(kImageIdMismatch).
ValidationReport validate(const SceneGraph& graph, const ImageRecord& record,
                          std::span<const ExclusivityRule> rules);

/// Variant for records known only in rendered form (pseudo-label corpora).
ValidationReport validate(const SceneGraph& graph,
                          std::span<const std::string> object_keys,
                          std::span<const ExclusivityRule> rules);

/// [{"image_id": ..., "relationships": [{"source", "target", "relation"}]}]
/// with two-space indentation. parse_response reads it back unchanged.
std::string serialize_scene_graphs(std::span<const SceneGraph> graphs);

}  // namespace sgsynth

#endif  // SGSYNTH_GRAPH_HPP_
