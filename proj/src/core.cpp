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

#include "sgsynth/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <utility>

#include "sgsynth/error.hpp"

namespace sgsynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownObjectKey: return "UnknownObjectKey";
    case ErrorCode::kCaptionServiceUnavailable: return "CaptionServiceUnavailable";
    case ErrorCode::kEmptyCaption: return "EmptyCaption";
    case ErrorCode::kMissingCaptions: return "MissingCaptions";
    case ErrorCode::kBatchTooLarge: return "BatchTooLarge";
    case ErrorCode::kTemplateError: return "TemplateError";
    case ErrorCode::kLlmUnavailable: return "LlmUnavailable";
    case ErrorCode::kLlmRejected: return "LlmRejected";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kMalformedJson: return "MalformedJson";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kImageIdMismatch: return "ImageIdMismatch";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kDanglingCategoryId: return "DanglingCategoryId";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::int64_t round_half_up(double value) {
  return static_cast<std::int64_t>(std::floor(value + 0.5));
}

BBox::BBox(double x1, double y1, double x2, double y2)
    : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (!std::isfinite(x1) || !std::isfinite(y1) || !std::isfinite(x2) ||
      !std::isfinite(y2)) {
    throw Error(ErrorCode::kInvalidArgument, "box coordinates must be finite");
  }
  if (x1 < 0 || y1 < 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "box coordinates must be non-negative");
  }
  if (!(x1 < x2) || !(y1 < y2)) {
    throw Error(ErrorCode::kInvalidArgument,
                "box must have positive width and height");
  }
}

std::array<std::int64_t, 4> BBox::rounded() const {
  return {round_half_up(x1_), round_half_up(y1_), round_half_up(x2_),
          round_half_up(y2_)};
}

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace

bool is_valid_category(std::string_view category) {
  if (category.empty()) return false;
  return std::none_of(category.begin(), category.end(), [](unsigned char c) {
    return c == '.' || c == ':' || c == '[' || c == ']' || std::isspace(c) ||
           std::isupper(c);
  });
}

ObjectInstance::ObjectInstance(std::string category, int index, BBox box,
                               std::optional<double> score)
    : category_(to_lower(category)), index_(index), box_(box), score_(score) {
  if (!is_valid_category(category_)) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid object category '" + category + "'");
  }
  if (index_ < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "object index must be positive");
  }
}

std::string render_object_key(const ObjectInstance& obj) {
  return obj.category() + "." + std::to_string(obj.index());
}

std::string normalize_object_key(std::string_view key) {
  return to_lower(trim(key));
}

const ObjectInstance& parse_object_key(std::string_view key,
                                       std::span<const ObjectInstance> objects) {
  const std::string wanted = normalize_object_key(key);
  for (const auto& obj : objects) {
    if (render_object_key(obj) == wanted) return obj;
  }
  throw Error(ErrorCode::kUnknownObjectKey,
              "unknown object key '" + std::string(key) + "'", wanted);
}

CaptionKey::CaptionKey(std::vector<Region> regions)
    : regions_(std::move(regions)) {
  if (regions_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "caption key has no regions");
  }
  if (std::count_if(regions_.begin(), regions_.end(), is_global) > 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "caption key lists the global region twice");
  }
}

bool CaptionKey::has_global() const {
  return std::any_of(regions_.begin(), regions_.end(), is_global);
}

CaptionSet::CaptionSet(std::vector<CaptionEntry> entries)
    : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (trim(entries_[i].text).empty()) {
      throw Error(ErrorCode::kInvalidArgument, "caption text is empty");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[j].key == entries_[i].key) {
        throw Error(ErrorCode::kInvalidArgument, "duplicate caption key");
      }
    }
  }
}

std::optional<std::string> CaptionSet::global_text() const {
  for (const auto& entry : entries_) {
    if (entry.key.has_global()) return entry.text;
  }
  return std::nullopt;
}

ImageRecord::ImageRecord(std::string image_id, int width, int height,
                         std::vector<ObjectInstance> objects,
                         CaptionSet captions, std::string image_uri)
    : image_id_(std::move(image_id)),
      width_(width),
      height_(height),
      objects_(std::move(objects)),
      captions_(std::move(captions)),
      image_uri_(std::move(image_uri)) {
  if (image_id_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "image_id is empty");
  }
  if (width_ <= 0 || height_ <= 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "image dimensions must be positive", image_id_);
  }
  std::set<std::pair<std::string, int>> seen;
  for (const auto& obj : objects_) {
    if (obj.box().x2() > width_ || obj.box().y2() > height_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "object " + render_object_key(obj) +
                      " lies outside the image bounds",
                  image_id_);
    }
    if (!seen.emplace(obj.category(), obj.index()).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate object key " + render_object_key(obj), image_id_);
    }
  }
}

ImageRecord ImageRecord::with_captions(CaptionSet captions) const {
  return ImageRecord(image_id_, width_, height_, objects_, std::move(captions),
                     image_uri_);
}

}  // namespace sgsynth
