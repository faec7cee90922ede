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

#include "sgsynth/prompt.hpp"

#include <set>

#include "json.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/hash.hpp"
#include "sgsynth/io.hpp"

namespace sgsynth {

namespace detail {
std::string_view builtin_template_id();
std::string_view builtin_system_text();
std::string_view builtin_user_text();
}  // namespace detail

namespace {

std::string quote(std::string_view s) {
  return nlohmann::json(std::string(s))
      .dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

std::string render_box(const BBox& box) {
  const auto c = box.rounded();
  return "[" + std::to_string(c[0]) + ", " + std::to_string(c[1]) + ", " +
         std::to_string(c[2]) + ", " + std::to_string(c[3]) + "]";
}

std::string render_object_entry(const ObjectInstance& obj) {
  return render_object_key(obj) + ":" + render_box(obj.box());
}

std::string render_region(const Region& region) {
  if (is_global(region)) return "global";
  const auto& pair = std::get<PairRegion>(region);
  return "Union(" + render_object_entry(pair.first) + ", " +
         render_object_entry(pair.second) + ")";
}

std::string render_caption_key(const CaptionKey& key) {
  std::string out;
  for (const auto& region : key.regions()) {
    if (!out.empty()) out += " ; ";
    out += render_region(region);
  }
  return out;
}

RenderedRecord render_record(const ImageRecord& record) {
  if (record.captions().empty()) {
    throw Error(ErrorCode::kMissingCaptions,
                "image " + record.image_id() + " has no captions",
                record.image_id());
  }
  RenderedRecord out;
  out.image_id = record.image_id();
  out.width = record.width();
  out.height = record.height();
  for (const auto& obj : record.objects()) {
    out.objects.push_back(render_object_entry(obj));
  }
  for (const auto& entry : record.captions().entries()) {
    out.captions.emplace_back(render_caption_key(entry.key), entry.text);
  }
  return out;
}

namespace {

std::string render_one(const RenderedRecord& r) {
  if (r.captions.empty()) {
    throw Error(ErrorCode::kMissingCaptions,
                "image " + r.image_id + " has no captions", r.image_id);
  }
  std::string out = "{\"image_id\": " + quote(r.image_id) +
                    ", \"width\": " + std::to_string(r.width) +
                    ", \"height\": " + std::to_string(r.height) +
                    ", \"objects\": [";
  for (std::size_t i = 0; i < r.objects.size(); ++i) {
    if (i) out += ", ";
    out += quote(r.objects[i]);
  }
  out += "], \"captions\": {";
  for (std::size_t i = 0; i < r.captions.size(); ++i) {
    if (i) out += ", ";
    out += quote(r.captions[i].first) + ": " + quote(r.captions[i].second);
  }
  out += "}}";
  return out;
}

}  // namespace

std::string render_input(std::span<const RenderedRecord> records) {
  if (records.size() == 1) return render_one(records.front());
  std::string out = "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out += ", ";
    out += render_one(records[i]);
  }
  out += "]";
  return out;
}

std::string render_input(std::span<const ImageRecord> records) {
  std::vector<RenderedRecord> rendered;
  rendered.reserve(records.size());
  for (const auto& r : records) rendered.push_back(render_record(r));
  return render_input(std::span<const RenderedRecord>(rendered));
}

std::string_view to_string(Role role) {
  return role == Role::kSystem ? "system" : "user";
}

PromptTemplate::PromptTemplate(std::string id, std::string system_text,
                               std::string user_text)
    : id_(std::move(id)),
      system_(std::move(system_text)),
      user_(std::move(user_text)) {
  if (system_.empty() || user_.empty()) {
    throw Error(ErrorCode::kTemplateError,
                "template " + id_ + " has an empty message", id_);
  }
  const auto first = user_.find(kInputPlaceholder);
  if (first == std::string::npos ||
      user_.find(kInputPlaceholder, first + 1) != std::string::npos) {
    throw Error(ErrorCode::kTemplateError,
                "template " + id_ + " must contain exactly one {Input}", id_);
  }
  std::string material = system_;
  material.push_back('\0');
  material += user_;
  checksum_ = sha256_hex(material);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& dir,
                                    const std::string& id) {
  try {
    return PromptTemplate(id, read_text_file(dir / (id + ".system.txt")),
                          read_text_file(dir / (id + ".user.txt")));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIoError) throw;
    throw Error(ErrorCode::kTemplateError, e.what(), id);
  }
}

PromptTemplate PromptTemplate::builtin() {
  return PromptTemplate(std::string(detail::builtin_template_id()),
                        std::string(detail::builtin_system_text()),
                        std::string(detail::builtin_user_text()));
}

std::string PromptTemplate::instantiate(std::string_view input) const {
  std::string out = user_;
  out.replace(out.find(kInputPlaceholder), kInputPlaceholder.size(), input);
  return out;
}

PromptBundle build_prompt(std::span<const RenderedRecord> records,
                          const PromptTemplate& tmpl, std::size_t batch_cap) {
  if (records.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "prompt needs at least one image");
  }
  if (records.size() > batch_cap) {
    throw Error(ErrorCode::kBatchTooLarge,
                std::to_string(records.size()) + " images exceed the batch cap of " +
                    std::to_string(batch_cap));
  }
  PromptBundle bundle;
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.image_id).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image " + r.image_id + " appears twice in one prompt",
                  r.image_id);
    }
    bundle.image_ids.push_back(r.image_id);
  }
  bundle.rendered_input = render_input(records);
  bundle.template_checksum = tmpl.checksum();
  bundle.messages.push_back({Role::kSystem, tmpl.system_text()});
  bundle.messages.push_back({Role::kUser, tmpl.instantiate(bundle.rendered_input)});
  return bundle;
}

PromptBundle build_prompt(std::span<const ImageRecord> records,
                          const PromptTemplate& tmpl, std::size_t batch_cap) {
  std::vector<RenderedRecord> rendered;
  rendered.reserve(records.size());
  for (const auto& r : records) rendered.push_back(render_record(r));
  return build_prompt(std::span<const RenderedRecord>(rendered), tmpl,
                      batch_cap);
}

}  // namespace sgsynth
