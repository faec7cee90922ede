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

#include "sgsynth/graph.hpp"

#include <cctype>
#include <map>
#include <set>
#include <tuple>

#include "sgsynth/error.hpp"

namespace sgsynth {

std::vector<ExclusivityRule> default_exclusivity_rules() {
  return {{"riding", BoundRole::kSource, 1}, {"wearing", BoundRole::kTarget, 1}};
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kUnknownObject: return "UnknownObject";
    case RejectReason::kSelfLoop: return "SelfLoop";
    case RejectReason::kDuplicate: return "Duplicate";
    case RejectReason::kExclusivityViolation: return "ExclusivityViolation";
    case RejectReason::kEmptyRelation: return "EmptyRelation";
  }
  return "Unknown";
}

std::string normalize_predicate(std::string_view relation) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : relation) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

// End offset (exclusive) of the bracketed value starting at `start`, or npos
// if the brackets never balance.
std::size_t balanced_end(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    switch (c) {
      case '"': in_string = true; break;
      case '{':
      case '[': ++depth; break;
      case '}':
      case ']':
        if (--depth == 0) return i + 1;
        break;
      default: break;
    }
  }
  return std::string_view::npos;
}

std::string drop_trailing_commas(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out.push_back(c);
      if (c == '\\' && i + 1 < text.size()) {
        out.push_back(text[++i]);
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == ']' || text[j] == '}')) continue;
    }
    out.push_back(c);
  }
  return out;
}

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kSchemaMismatch, "response " + path + ": " + what, path);
}

const nlohmann::json& require_string(const nlohmann::json& obj,
                                     const std::string& field,
                                     const std::string& path) {
  const auto it = obj.find(field);
  if (it == obj.end()) schema_error(path + "." + field, "missing");
  if (!it->is_string()) schema_error(path + "." + field, "must be a string");
  return *it;
}

SceneGraph parse_graph(const nlohmann::json& value, const std::string& path) {
  if (!value.is_object()) schema_error(path, "must be an object");
  SceneGraph graph;
  graph.image_id = require_string(value, "image_id", path).get<std::string>();
  const auto rels = value.find("relationships");
  if (rels == value.end()) schema_error(path + ".relationships", "missing");
  if (!rels->is_array()) schema_error(path + ".relationships", "must be a list");
  for (std::size_t i = 0; i < rels->size(); ++i) {
    const auto& rel = (*rels)[i];
    const std::string rel_path = path + ".relationships[" + std::to_string(i) + "]";
    if (!rel.is_object()) schema_error(rel_path, "must be an object");
    RelationshipTriplet triplet;
    triplet.source = require_string(rel, "source", rel_path).get<std::string>();
    triplet.target = require_string(rel, "target", rel_path).get<std::string>();
    triplet.relation = normalize_predicate(
        require_string(rel, "relation", rel_path).get<std::string>());
    if (const auto conf = rel.find("confidence"); conf != rel.end()) {
      if (!conf->is_number()) schema_error(rel_path + ".confidence", "must be a number");
      triplet.confidence = conf->get<double>();
      if (!(*triplet.confidence >= 0.0 && *triplet.confidence <= 1.0)) {
        schema_error(rel_path + ".confidence", "must lie in [0, 1]");
      }
    }
    graph.triplets.push_back(std::move(triplet));
  }
  return graph;
}

}  // namespace

nlohmann::json extract_json(std::string_view text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{' && text[start] != '[') continue;
    const std::size_t end = balanced_end(text, start);
    if (end == std::string_view::npos) continue;
    auto parsed = nlohmann::json::parse(
        drop_trailing_commas(text.substr(start, end - start)), nullptr, false);
    if (!parsed.is_discarded()) return parsed;
  }
  throw Error(ErrorCode::kMalformedJson, "no JSON value found in response");
}

std::vector<SceneGraph> parse_response(std::string_view text) {
  const nlohmann::json value = extract_json(text);
  std::vector<SceneGraph> graphs;
  if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      graphs.push_back(parse_graph(value[i], "$[" + std::to_string(i) + "]"));
    }
  } else {
    graphs.push_back(parse_graph(value, "$"));
  }
  return graphs;
}

ValidationReport validate(const SceneGraph& graph,
                          std::span<const std::string> object_keys,
                          std::span<const ExclusivityRule> rules) {
  std::set<std::string> known;
  for (const auto& key : object_keys) known.insert(normalize_object_key(key));

  ValidationReport report;
  report.accepted.image_id = graph.image_id;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  // (rule index, bound object) -> distinct partners accepted so far
  std::map<std::pair<std::size_t, std::string>, std::set<std::string>> partners;

  for (const auto& raw : graph.triplets) {
    RelationshipTriplet triplet = raw;
    triplet.source = normalize_object_key(raw.source);
    triplet.target = normalize_object_key(raw.target);
    triplet.relation = normalize_predicate(raw.relation);
    auto reject = [&](RejectReason reason) {
      report.rejected.push_back({raw, reason});
    };
    if (!known.count(triplet.source) || !known.count(triplet.target)) {
      reject(RejectReason::kUnknownObject);
      continue;
    }
    if (triplet.source == triplet.target) {
      reject(RejectReason::kSelfLoop);
      continue;
    }
    if (seen.count({triplet.source, triplet.target, triplet.relation})) {
      reject(RejectReason::kDuplicate);
      continue;
    }
    if (triplet.relation.empty()) {
      reject(RejectReason::kEmptyRelation);
      continue;
    }
    bool violates = false;
    for (std::size_t r = 0; r < rules.size() && !violates; ++r) {
      const auto& rule = rules[r];
      if (normalize_predicate(rule.predicate) != triplet.relation) continue;
      const bool bound_is_source = rule.bound_role == BoundRole::kSource;
      const auto& bound = bound_is_source ? triplet.source : triplet.target;
      const auto& partner = bound_is_source ? triplet.target : triplet.source;
      const auto& current = partners[{r, bound}];
      if (!current.count(partner) &&
          current.size() >= static_cast<std::size_t>(rule.max_partners)) {
        violates = true;
      }
    }
    if (violates) {
      reject(RejectReason::kExclusivityViolation);
      continue;
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      const auto& rule = rules[r];
      if (normalize_predicate(rule.predicate) != triplet.relation) continue;
      const bool bound_is_source = rule.bound_role == BoundRole::kSource;
      partners[{r, bound_is_source ? triplet.source : triplet.target}].insert(
          bound_is_source ? triplet.target : triplet.source);
    }
    seen.insert({triplet.source, triplet.target, triplet.relation});
    report.accepted.triplets.push_back(std::move(triplet));
  }
  return report;
}

ValidationReport validate(const SceneGraph& graph, const ImageRecord& record,
                          std::span<const ExclusivityRule> rules) {
  if (graph.image_id != record.image_id()) {
    throw Error(ErrorCode::kImageIdMismatch,
                "graph for image " + graph.image_id + " checked against " +
                    record.image_id(),
                graph.image_id);
  }
  std::vector<std::string> keys;
  keys.reserve(record.objects().size());
  for (const auto& obj : record.objects()) keys.push_back(render_object_key(obj));
  return validate(graph, std::span<const std::string>(keys), rules);
}

std::string serialize_scene_graphs(std::span<const SceneGraph> graphs) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& graph : graphs) {
    nlohmann::ordered_json g;
    g["image_id"] = graph.image_id;
    g["relationships"] = nlohmann::ordered_json::array();
    for (const auto& t : graph.triplets) {
      nlohmann::ordered_json rel;
      rel["source"] = t.source;
      rel["target"] = t.target;
      rel["relation"] = t.relation;
      if (t.confidence) rel["confidence"] = *t.confidence;
      g["relationships"].push_back(std::move(rel));
    }
    out.push_back(std::move(g));
  }
  return out.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace sgsynth
