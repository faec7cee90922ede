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

#include "sgsynth/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "sgsynth/error.hpp"
#include "sgsynth/geometry.hpp"
#include "sgsynth/graph.hpp"
#include "sgsynth/io.hpp"
#include "sgsynth/log.hpp"

namespace sgsynth {

namespace {

using ojson = nlohmann::ordered_json;

constexpr auto kReplace = nlohmann::ordered_json::error_handler_t::replace;

[[noreturn]] void schema_error(const std::string& what,
                               const std::string& where = {}) {
  throw Error(ErrorCode::kSchemaError, what, where);
}

std::string sanitize_category(const std::string& name) {
  std::string out;
  bool pending = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back('_');
    pending = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::string id_string(const nlohmann::json& id, const std::string& where) {
  if (id.is_number_integer()) return std::to_string(id.get<std::int64_t>());
  if (id.is_string()) return id.get<std::string>();
  schema_error("id must be an integer or string", where);
}

// Templated so ordered_json input is not copied into a temporary json.
template <typename Json>
const Json& field(const Json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    schema_error(std::string("missing field '") + name + "'", where);
  }
  return obj[name];
}

}  // namespace

IngestResult ingest_coco(const nlohmann::json& doc,
                         const IngestOptions& options) {
  if (!doc.is_object()) schema_error("annotation file must be a JSON object");
  const auto& images = field(doc, "images", "$");
  const auto& annotations = field(doc, "annotations", "$");
  const auto& categories = field(doc, "categories", "$");
  if (!images.is_array() || !annotations.is_array() || !categories.is_array()) {
    schema_error("images, annotations and categories must be lists", "$");
  }

  std::map<std::int64_t, std::string> category_names;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    const std::string where = "$.categories[" + std::to_string(i) + "]";
    const auto& id = field(categories[i], "id", where);
    const auto& name = field(categories[i], "name", where);
    if (!id.is_number_integer() || !name.is_string()) {
      schema_error("category needs integer id and string name", where);
    }
    const std::string clean = sanitize_category(name.get<std::string>());
    if (!is_valid_category(clean)) {
      schema_error("category name '" + name.get<std::string>() +
                       "' cannot form an object key",
                   where);
    }
    category_names[id.get<std::int64_t>()] = clean;
  }

  struct Pending {
    std::string image_id;
    int width = 0;
    int height = 0;
    std::string uri;
    std::vector<std::pair<std::string, std::array<double, 4>>> boxes;
  };
  std::vector<Pending> pending;
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string where = "$.images[" + std::to_string(i) + "]";
    Pending p;
    p.image_id = id_string(field(images[i], "id", where), where + ".id");
    const auto& w = field(images[i], "width", where);
    const auto& h = field(images[i], "height", where);
    if (!w.is_number_integer() || !h.is_number_integer() || w.get<int>() <= 0 ||
        h.get<int>() <= 0) {
      schema_error("image dimensions must be positive integers", where);
    }
    p.width = w.get<int>();
    p.height = h.get<int>();
    if (!options.image_root.empty() && images[i].contains("file_name") &&
        images[i]["file_name"].is_string()) {
      p.uri = (std::filesystem::path(options.image_root) /
               images[i]["file_name"].get<std::string>())
                  .string();
    } else if (images[i].contains("coco_url") && images[i]["coco_url"].is_string()) {
      p.uri = images[i]["coco_url"].get<std::string>();
    }
    if (!by_id.emplace(p.image_id, pending.size()).second) {
      schema_error("duplicate image id " + p.image_id, where);
    }
    pending.push_back(std::move(p));
  }

  IngestResult result;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const std::string where = "$.annotations[" + std::to_string(i) + "]";
    const auto& ann = annotations[i];
    const std::string image_id =
        id_string(field(ann, "image_id", where), where + ".image_id");
    const auto& cat = field(ann, "category_id", where);
    const auto& bbox = field(ann, "bbox", where);
    if (!cat.is_number_integer()) schema_error("category_id must be an integer", where);
    if (!bbox.is_array() || bbox.size() != 4 ||
        !std::all_of(bbox.begin(), bbox.end(),
                     [](const auto& v) { return v.is_number(); })) {
      schema_error("bbox must be four numbers", where + ".bbox");
    }
    const auto image = by_id.find(image_id);
    if (image == by_id.end()) {
      schema_error("annotation references unknown image " + image_id, where);
    }
    const auto name = category_names.find(cat.get<std::int64_t>());
    if (name == category_names.end()) {
      throw Error(ErrorCode::kDanglingCategoryId,
                  "annotation references unknown category " +
                      std::to_string(cat.get<std::int64_t>()),
                  where);
    }
    Pending& p = pending[image->second];
    const double x = bbox[0].get<double>();
    const double y = bbox[1].get<double>();
    const double w = bbox[2].get<double>();
    const double h = bbox[3].get<double>();
    std::array<double, 4> xyxy{x, y, x + w, y + h};
    std::array<double, 4> clamped{
        std::clamp(xyxy[0], 0.0, double(p.width)),
        std::clamp(xyxy[1], 0.0, double(p.height)),
        std::clamp(xyxy[2], 0.0, double(p.width)),
        std::clamp(xyxy[3], 0.0, double(p.height))};
    if (!(clamped[0] < clamped[2]) || !(clamped[1] < clamped[3])) {
      ++result.dropped_boxes;
      log_event(LogLevel::kWarning, "box_dropped",
                {{"image_id", image_id}, {"annotation", i}});
      continue;
    }
    if (clamped != xyxy) {
      ++result.clamped_boxes;
      log_event(LogLevel::kInfo, "box_clamped",
                {{"image_id", image_id}, {"annotation", i}});
    }
    p.boxes.emplace_back(name->second, clamped);
  }

  std::map<std::string, std::string> global_captions;
  if (options.captions_file) {
    const auto caps = nlohmann::json::parse(read_text_file(*options.captions_file),
                                            nullptr, false);
    if (caps.is_discarded() || !caps.is_object() || !caps.contains("annotations") ||
        !caps["annotations"].is_array()) {
      schema_error("captions file needs an annotations list",
                   options.captions_file->string());
    }
    for (std::size_t i = 0; i < caps["annotations"].size(); ++i) {
      const auto& ann = caps["annotations"][i];
      const std::string where = "captions.annotations[" + std::to_string(i) + "]";
      const auto& text = field(ann, "caption", where);
      if (!text.is_string()) schema_error("caption must be a string", where);
      const std::string image_id =
          id_string(field(ann, "image_id", where), where + ".image_id");
      const std::string caption = text.get<std::string>();
      if (caption.find_first_not_of(" \t\r\n") == std::string::npos) continue;
      global_captions.emplace(image_id, caption);
    }
  }

  for (auto& p : pending) {
    std::vector<ObjectInstance> objects;
    int ordinal = 0;
    for (const auto& [category, b] : p.boxes) {
      objects.emplace_back(category, ++ordinal, BBox(b[0], b[1], b[2], b[3]));
    }
    CaptionSet captions;
    if (auto it = global_captions.find(p.image_id); it != global_captions.end()) {
      captions = CaptionSet({CaptionEntry{CaptionKey({GlobalRegion{}}), it->second}});
    }
    if (objects.size() < 2) result.sparse_image_ids.push_back(p.image_id);
    result.records.emplace_back(p.image_id, p.width, p.height, std::move(objects),
                                std::move(captions), p.uri);
  }
  return result;
}

IngestResult ingest_coco(const std::filesystem::path& annotation_file,
                         const IngestOptions& options) {
  const auto doc = nlohmann::json::parse(read_text_file(annotation_file), nullptr, false);
  if (doc.is_discarded()) {
    schema_error("annotation file is not valid JSON", annotation_file.string());
  }
  return ingest_coco(doc, options);
}

// ---------------------------------------------------------------------------

namespace {

ojson box_json(const BBox& b) { return ojson::array({b.x1(), b.y1(), b.x2(), b.y2()}); }

BBox box_from_json(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_number(); })) {
    schema_error("box must be four numbers", where);
  }
  try {
    return BBox(v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                v[3].get<double>());
  } catch (const Error& e) {
    schema_error(e.what(), where);
  }
}

ojson region_json(const Region& region) {
  if (is_global(region)) return "global";
  const auto& pair = std::get<PairRegion>(region);
  return ojson::array({render_object_key(pair.first), render_object_key(pair.second)});
}

}  // namespace

nlohmann::ordered_json record_to_json(
    const ImageRecord& record, const std::optional<std::vector<ObjectPair>>& rois) {
  ojson out;
  out["image_id"] = record.image_id();
  out["width"] = record.width();
  out["height"] = record.height();
  if (!record.image_uri().empty()) out["image_uri"] = record.image_uri();
  out["objects"] = ojson::array();
  for (const auto& obj : record.objects()) {
    ojson o;
    o["category"] = obj.category();
    o["index"] = obj.index();
    o["box"] = box_json(obj.box());
    if (obj.score()) o["score"] = *obj.score();
    out["objects"].push_back(std::move(o));
  }
  out["captions"] = ojson::array();
  for (const auto& entry : record.captions().entries()) {
    ojson regions = ojson::array();
    for (const auto& r : entry.key.regions()) regions.push_back(region_json(r));
    out["captions"].push_back({{"regions", std::move(regions)}, {"text", entry.text}});
  }
  if (rois) {
    out["rois"] = ojson::array();
    for (const auto& pair : *rois) {
      out["rois"].push_back(
          ojson::array({render_object_key(pair.first), render_object_key(pair.second)}));
    }
  }
  return out;
}

RecordLine record_from_json(const nlohmann::json& v) {
  if (!v.is_object()) schema_error("record must be an object");
  const auto& id = field(v, "image_id", "image_id");
  const auto& w = field(v, "width", "width");
  const auto& h = field(v, "height", "height");
  const auto& objs = field(v, "objects", "objects");
  if (!id.is_string() || !w.is_number_integer() || !h.is_number_integer() ||
      !objs.is_array()) {
    schema_error("record fields have wrong types");
  }
  try {
    std::vector<ObjectInstance> objects;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string where = "objects[" + std::to_string(i) + "]";
      const auto& o = objs[i];
      const auto& cat = field(o, "category", where);
      const auto& idx = field(o, "index", where);
      if (!cat.is_string() || !idx.is_number_integer()) {
        schema_error("object needs string category and integer index", where);
      }
      std::optional<double> score;
      if (o.contains("score") && o["score"].is_number()) score = o["score"].get<double>();
      objects.emplace_back(cat.get<std::string>(), idx.get<int>(),
                           box_from_json(field(o, "box", where), where + ".box"), score);
    }
    std::vector<CaptionEntry> entries;
    if (v.contains("captions")) {
      const auto& caps = v["captions"];
      if (!caps.is_array()) schema_error("captions must be a list", "captions");
      for (std::size_t i = 0; i < caps.size(); ++i) {
        const std::string where = "captions[" + std::to_string(i) + "]";
        const auto& regions = field(caps[i], "regions", where);
        const auto& text = field(caps[i], "text", where);
        if (!regions.is_array() || !text.is_string()) {
          schema_error("caption needs regions list and text", where);
        }
        std::vector<Region> key;
        for (const auto& r : regions) {
          if (r.is_string() && r.get<std::string>() == "global") {
            key.emplace_back(GlobalRegion{});
          } else if (r.is_array() && r.size() == 2 && r[0].is_string() &&
                     r[1].is_string()) {
            key.emplace_back(PairRegion{
                parse_object_key(r[0].get<std::string>(), objects),
                parse_object_key(r[1].get<std::string>(), objects)});
          } else {
            schema_error("region must be \"global\" or a key pair", where);
          }
        }
        entries.push_back({CaptionKey(std::move(key)), text.get<std::string>()});
      }
    }
    std::string uri;
    if (v.contains("image_uri") && v["image_uri"].is_string()) {
      uri = v["image_uri"].get<std::string>();
    }
    RecordLine line{ImageRecord(id.get<std::string>(), w.get<int>(), h.get<int>(),
                                objects, CaptionSet(std::move(entries)), uri),
                    std::nullopt};
    if (v.contains("rois")) {
      const auto& rois = v["rois"];
      if (!rois.is_array()) schema_error("rois must be a list", "rois");
      std::vector<ObjectPair> pairs;
      for (const auto& r : rois) {
        if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string()) {
          schema_error("roi must be a key pair", "rois");
        }
        const auto& a = parse_object_key(r[0].get<std::string>(), objects);
        const auto& b = parse_object_key(r[1].get<std::string>(), objects);
        pairs.push_back(ObjectPair{a, b, union_box(a.box(), b.box())});
      }
      line.rois = std::move(pairs);
    }
    return line;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchemaError) throw;
    schema_error(e.what(), e.detail());
  }
}

namespace {

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  const std::string text = read_text_file(path);
  std::size_t start = 0;
  std::size_t number = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    const bool terminated = end != std::string::npos;
    if (!terminated) end = text.size();
    ++number;
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line, number, terminated);
    start = end + 1;
  }
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::string text;
  for (const auto& line : lines) {
    text += line;
    text.push_back('\n');
  }
  write_text_file_atomic(path, text);
}

}  // namespace

void write_records(std::span<const RecordLine> lines,
                   const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& line : lines) {
    out.push_back(record_to_json(line.record, line.rois).dump(-1, ' ', false, kReplace));
  }
  write_lines(path, out);
}

std::vector<RecordLine> read_records(const std::filesystem::path& path) {
  std::vector<RecordLine> out;
  for_each_line(path, [&](std::string_view line, std::size_t number, bool) {
    const auto v = nlohmann::json::parse(line, nullptr, false);
    try {
      if (v.is_discarded()) schema_error("not JSON");
      out.push_back(record_from_json(v));
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaError,
                  path.string() + ":" + std::to_string(number) + ": " + e.what(),
                  std::to_string(number));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

std::string pseudo_label_line(const PseudoLabelEntry& entry) {
  ojson out;
  out["image_id"] = entry.input.image_id;
  out["width"] = entry.input.width;
  out["height"] = entry.input.height;
  out["objects"] = entry.input.objects;
  out["captions"] = ojson::object();
  for (const auto& [key, text] : entry.input.captions) out["captions"][key] = text;
  out["relationships"] = ojson::array();
  for (const auto& t : entry.relationships) {
    out["relationships"].push_back(
        {{"source", t.source}, {"target", t.target}, {"relation", t.relation}});
  }
  out["provenance"] = {{"template_checksum", entry.provenance.template_checksum},
                       {"model_name", entry.provenance.model_name},
                       {"timestamp", entry.provenance.timestamp},
                       {"rejected_count", entry.provenance.rejected_count}};
  return out.dump(-1, ' ', false, kReplace);
}

PseudoLabelEntry parse_pseudo_label_line(std::string_view line) {
  const auto v = ojson::parse(line, nullptr, false);
  if (v.is_discarded() || !v.is_object()) schema_error("entry is not a JSON object");
  PseudoLabelEntry entry;
  const auto& id = field(v, "image_id", "image_id");
  const auto& w = field(v, "width", "width");
  const auto& h = field(v, "height", "height");
  const auto& objects = field(v, "objects", "objects");
  const auto& captions = field(v, "captions", "captions");
  const auto& rels = field(v, "relationships", "relationships");
  const auto& prov = field(v, "provenance", "provenance");
  if (!id.is_string() || !w.is_number_integer() || !h.is_number_integer() ||
      !objects.is_array() || !captions.is_object() || !rels.is_array() ||
      !prov.is_object()) {
    schema_error("entry fields have wrong types");
  }
  entry.input.image_id = id.get<std::string>();
  entry.input.width = w.get<int>();
  entry.input.height = h.get<int>();
  for (const auto& o : objects) {
    if (!o.is_string()) schema_error("objects must be strings", "objects");
    entry.input.objects.push_back(o.get<std::string>());
  }
  for (const auto& [key, text] : captions.items()) {
    if (!text.is_string()) schema_error("caption must be a string", "captions");
    entry.input.captions.emplace_back(key, text.get<std::string>());
  }
  for (std::size_t i = 0; i < rels.size(); ++i) {
    const std::string where = "relationships[" + std::to_string(i) + "]";
    const auto& r = rels[i];
    const auto& s = field(r, "source", where);
    const auto& t = field(r, "target", where);
    const auto& rel = field(r, "relation", where);
    if (!s.is_string() || !t.is_string() || !rel.is_string()) {
      schema_error("relationship fields must be strings", where);
    }
    entry.relationships.push_back(
        {s.get<std::string>(), t.get<std::string>(), rel.get<std::string>(), std::nullopt});
  }
  const auto& checksum = field(prov, "template_checksum", "provenance");
  const auto& model = field(prov, "model_name", "provenance");
  const auto& ts = field(prov, "timestamp", "provenance");
  const auto& rejected = field(prov, "rejected_count", "provenance");
  if (!checksum.is_string() || !model.is_string() || !ts.is_number_integer() ||
      !rejected.is_number_integer()) {
    schema_error("provenance fields have wrong types", "provenance");
  }
  entry.provenance = {checksum.get<std::string>(), model.get<std::string>(),
                      ts.get<std::int64_t>(), rejected.get<std::int64_t>()};
  return entry;
}

void write_pseudo_labels(std::span<const PseudoLabelEntry> entries,
                         const std::filesystem::path& path) {
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const auto& e : entries) lines.push_back(pseudo_label_line(e));
  write_lines(path, lines);
}

void append_pseudo_label(const PseudoLabelEntry& entry,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path.string());
  out << pseudo_label_line(entry) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "append failed for " + path.string());
}

std::vector<PseudoLabelEntry> read_pseudo_labels(const std::filesystem::path& path,
                                                 bool drop_truncated_tail) {
  std::vector<PseudoLabelEntry> out;
  for_each_line(path, [&](std::string_view line, std::size_t number, bool terminated) {
    try {
      out.push_back(parse_pseudo_label_line(line));
    } catch (const Error& e) {
      if (drop_truncated_tail && !terminated) {
        log_event(LogLevel::kWarning, "truncated_corpus_line",
                  {{"path", path.string()}, {"line", number}});
        return;
      }
      throw Error(ErrorCode::kSchemaError,
                  path.string() + ":" + std::to_string(number) + ": " + e.what(),
                  std::to_string(number));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

InstructionPair make_instruction_pair(const PseudoLabelEntry& entry,
                                      const PromptTemplate& tmpl) {
  const std::vector<RenderedRecord> one{entry.input};
  const std::vector<SceneGraph> graph{SceneGraph{entry.input.image_id, entry.relationships}};
  return InstructionPair{tmpl.instantiate(render_input(std::span<const RenderedRecord>(one))),
                         "", serialize_scene_graphs(graph)};
}

std::size_t export_instruction_pairs(std::span<const PseudoLabelEntry> entries,
                                     const PromptTemplate& tmpl,
                                     const std::filesystem::path& path) {
  std::vector<InstructionPair> pairs;
  pairs.reserve(entries.size());
  for (const auto& entry : entries) {
    if (entry.provenance.template_checksum != tmpl.checksum()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "entry " + entry.input.image_id +
                      " was synthesized with a different prompt template",
                  entry.input.image_id);
    }
    pairs.push_back(make_instruction_pair(entry, tmpl));
  }
  write_instruction_pairs(pairs, path);
  return pairs.size();
}

void write_instruction_pairs(std::span<const InstructionPair> pairs,
                             const std::filesystem::path& path) {
  std::vector<std::string> lines;
  lines.reserve(pairs.size());
  for (const auto& p : pairs) {
    ojson line;
    line["instruction"] = p.instruction;
    line["input"] = p.input;
    line["output"] = p.output;
    lines.push_back(line.dump(-1, ' ', false, kReplace));
  }
  write_lines(path, lines);
}

std::vector<InstructionPair> read_instruction_pairs(const std::filesystem::path& path) {
  std::vector<InstructionPair> out;
  for_each_line(path, [&](std::string_view line, std::size_t number, bool) {
    const auto v = nlohmann::json::parse(line, nullptr, false);
    const auto ok = [&](const char* name) {
      return v.is_object() && v.contains(name) && v[name].is_string();
    };
    if (!ok("instruction") || !ok("input") || !ok("output")) {
      throw Error(ErrorCode::kSchemaError,
                  path.string() + ":" + std::to_string(number) +
                      ": expected instruction, input and output strings",
                  std::to_string(number));
    }
    out.push_back({v["instruction"].get<std::string>(), v["input"].get<std::string>(),
                   v["output"].get<std::string>()});
  });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<std::string, std::int64_t>> PredicateHistogram::ranked() const {
  std::vector<std::pair<std::string, std::int64_t>> out(counts.begin(), counts.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

PredicateHistogram predicate_stats(std::span<const PseudoLabelEntry> entries) {
  PredicateHistogram hist;
  for (const auto& entry : entries) {
    for (const auto& t : entry.relationships) {
      ++hist.counts[t.relation];
      ++hist.total;
    }
  }
  return hist;
}

nlohmann::ordered_json histogram_report_json(const PredicateHistogram& hist,
                                             std::size_t k) {
  const auto ranked = hist.ranked();
  const std::size_t n = std::min(k, ranked.size());
  ojson out;
  out["total"] = hist.total;
  out["distinct"] = hist.counts.size();
  out["head"] = ojson::array();
  for (std::size_t i = 0; i < n; ++i) {
    out["head"].push_back({{"predicate", ranked[i].first}, {"count", ranked[i].second}});
  }
  out["tail"] = ojson::array();
  for (std::size_t i = ranked.size() - n; i < ranked.size(); ++i) {
    out["tail"].push_back({{"predicate", ranked[i].first}, {"count", ranked[i].second}});
  }
  return out;
}

std::string histogram_report_table(const PredicateHistogram& hist, std::size_t k) {
  const auto ranked = hist.ranked();
  const std::size_t n = std::min(k, ranked.size());
  std::size_t width = 9;
  for (const auto& [predicate, count] : ranked) width = std::max(width, predicate.size());
  std::ostringstream out;
  auto section = [&](const char* title, std::size_t from, std::size_t to) {
    out << title << '\n';
    out << std::left << std::setw(6) << "rank" << std::setw(int(width) + 2)
        << "predicate" << std::right << std::setw(10) << "count" << std::setw(9)
        << "share" << '\n';
    for (std::size_t i = from; i < to; ++i) {
      const double share = hist.total ? 100.0 * double(ranked[i].second) / double(hist.total) : 0.0;
      char pct[32];
      std::snprintf(pct, sizeof pct, "%.2f%%", share);
      out << std::left << std::setw(6) << (i + 1) << std::setw(int(width) + 2)
          << ranked[i].first << std::right << std::setw(10) << ranked[i].second
          << std::setw(9) << pct << '\n';
    }
  };
  out << "total " << hist.total << ", distinct " << hist.counts.size() << "\n\n";
  section("head", 0, n);
  out << '\n';
  section("tail", ranked.size() - n, ranked.size());
  return out.str();
}

}  // namespace sgsynth
