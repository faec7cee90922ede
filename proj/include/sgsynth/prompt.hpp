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

#ifndef SGSYNTH_PROMPT_HPP_
#define SGSYNTH_PROMPT_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sgsynth/core.hpp"

namespace sgsynth {

inline constexpr std::size_t kDefaultBatchCap = 4;
inline constexpr std::string_view kInputPlaceholder = "{Input}";

/// "[x1, y1, x2, y2]" with round-half-up integers.
std::string render_box(const BBox& box);

/// "tie.1:[217, 409, 233, 436]"
std::string render_object_entry(const ObjectInstance& obj);

/// "global" or "Union(<entry>, <entry>)".
std::string render_region(const Region& region);

/// Regions joined with " ; ".
std::string render_caption_key(const CaptionKey& key);

/// An image in the exact textual form the model sees. Pseudo-label entries
/// store this form, so prompts can be rebuilt from a corpus alone.
struct RenderedRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<std::string> objects;
  std::vector<std::pair<std::string, std::string>> captions;

  friend bool operator==(const RenderedRecord&, const RenderedRecord&) = default;
};

/// Throws Error(kMissingCaptions) when the record has no captions.
RenderedRecord render_record(const ImageRecord& record);

/// JSON text with key order image_id, width, height, objects, captions.
/// Captions keep CaptionSet order. One record is emitted bare, several as a
/// list.
std::string render_input(std::span<const RenderedRecord> records);
std::string render_input(std::span<const ImageRecord> records);

enum class Role { kSystem, kUser };
std::string_view to_string(Role role);

struct ChatMessage {
  Role role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct PromptBundle {
  std::vector<ChatMessage> messages;  // system, then user
  std::vector<std::string> image_ids;
  std::string rendered_input;
  std::string template_checksum;
};

/// System text plus a user template holding one `{Input}` placeholder.
///
/// Templates live as asset files `<id>.system.txt` and `<id>.user.txt`. The
/// checksum is SHA-256 over system bytes, a NUL, then user bytes, and is
/// recorded with every synthesized label.
class PromptTemplate {
 public:
  PromptTemplate(std::string id, std::string system_text,
                 std::string user_text);

  /// Loads `<dir>/<id>.system.txt` and `<dir>/<id>.user.txt`.
  static PromptTemplate load(const std::filesystem::path& dir,
                             const std::string& id);
  /// The template compiled into the library from assets/templates.
  static PromptTemplate builtin();

  const std::string& id() const noexcept { return id_; }
  const std::string& system_text() const noexcept { return system_; }
  const std::string& user_text() const noexcept { return user_; }
  const std::string& checksum() const noexcept { return checksum_; }

  std::string instantiate(std::string_view input) const;

 private:
  std::string id_;
  std::string system_;
  std::string user_;
  std::string checksum_;
};

/// Throws Error(kBatchTooLarge) for more than `batch_cap` records and
/// Error(kInvalidArgument) for none or duplicated image ids.
PromptBundle build_prompt(std::span<const RenderedRecord> records,
                          const PromptTemplate& tmpl,
                          std::size_t batch_cap = kDefaultBatchCap);
PromptBundle build_prompt(std::span<const ImageRecord> records,
                          const PromptTemplate& tmpl,
                          std::size_t batch_cap = kDefaultBatchCap);

}  // namespace sgsynth

#endif  // SGSYNTH_PROMPT_HPP_
