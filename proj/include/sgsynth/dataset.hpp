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

#ifndef SGSYNTH_DATASET_HPP_
#define SGSYNTH_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgsynth/core.hpp"
#include "sgsynth/prompt.hpp"
#include "sgsynth/roi.hpp"

namespace sgsynth {

// ---------------------------------------------------------------------------
// COCO ingestion

struct IngestOptions {
  /// COCO captions file; its first caption per image becomes the record's
  /// global caption.
  std::optional<std::filesystem::path> captions_file;
  /// Prefix joined with each image's file_name to form image_uri. When
  /// empty, coco_url is used if present.
  std::string image_root;
};

struct IngestResult {
  std::vector<ImageRecord> records;
  /// Images kept but holding fewer than two objects; corpus synthesis skips
  /// them.
  std::vector<std::string> sparse_image_ids;
  std::size_t clamped_boxes = 0;
  std::size_t dropped_boxes = 0;
};

/// Converts COCO detection annotations (xywh boxes) into records with xyxy
/// boxes and ordinals 1..k in annotation order. Boxes are clamped to the image
/// and dropped when nothing is left. Category names are lowercased with
/// whitespace runs turned into '_'.
/// Throws Error(kSchemaError) or Error(kDanglingCategoryId).
IngestResult ingest_coco(const nlohmann::json& annotations,
                         const IngestOptions& options = {});
IngestResult ingest_coco(const std::filesystem::path& annotation_file,
                         const IngestOptions& options = {});

// ---------------------------------------------------------------------------
// Record files: structured ImageRecords passed between pipeline stages.

struct RecordLine {
  ImageRecord record;
  std::optional<std::vector<ObjectPair>> rois;
};

nlohmann::ordered_json record_to_json(const ImageRecord& record,
                                      const std::optional<std::vector<ObjectPair>>& rois = std::nullopt);
RecordLine record_from_json(const nlohmann::json& value);

void write_records(std::span<const RecordLine> lines,
                   const std::filesystem::path& path);
std::vector<RecordLine> read_records(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Pseudo-label corpus

struct Provenance {
  std::string template_checksum;
  std::string model_name;
  std::int64_t timestamp = 0;
  std::int64_t rejected_count = 0;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct PseudoLabelEntry {
  RenderedRecord input;
  std::vector<RelationshipTriplet> relationships;
  Provenance provenance;
  friend bool operator==(const PseudoLabelEntry&, const PseudoLabelEntry&) = default;
};

/// One line, no trailing newline.
std::string pseudo_label_line(const PseudoLabelEntry& entry);
PseudoLabelEntry parse_pseudo_label_line(std::string_view line);

/// Line-delimited JSON, one entry per '\n'-terminated line.
void write_pseudo_labels(std::span<const PseudoLabelEntry> entries,
                         const std::filesystem::path& path);
/// Appends one line and flushes; used for incremental synthesis.
void append_pseudo_label(const PseudoLabelEntry& entry,
                         const std::filesystem::path& path);
/// Throws Error(kSchemaError) with the 1-based line number in detail(). With
/// `drop_truncated_tail`, an unterminated, unparsable last line (an
/// interrupted append) is skipped instead.
std::vector<PseudoLabelEntry> read_pseudo_labels(
    const std::filesystem::path& path, bool drop_truncated_tail = false);

// ---------------------------------------------------------------------------
// Instruction-tuning export (Alpaca layout)

struct InstructionPair {
  std::string instruction;
  std::string input;
  std::string output;
  friend bool operator==(const InstructionPair&, const InstructionPair&) = default;
};

/// Instruction is the user template filled with this entry alone; output is
/// the entry's relationships as response JSON.
InstructionPair make_instruction_pair(const PseudoLabelEntry& entry,
                                      const PromptTemplate& tmpl);

/// Throws Error(kInvalidArgument) when an entry was synthesized with a
/// different template than `tmpl`.
std::size_t export_instruction_pairs(std::span<const PseudoLabelEntry> entries,
                                     const PromptTemplate& tmpl,
                                     const std::filesystem::path& path);
void write_instruction_pairs(std::span<const InstructionPair> pairs,
                             const std::filesystem::path& path);
std::vector<InstructionPair> read_instruction_pairs(
    const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Predicate statistics

struct PredicateHistogram {
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;

  /// Count descending, then predicate ascending.
  std::vector<std::pair<std::string, std::int64_t>> ranked() const;
};

PredicateHistogram predicate_stats(std::span<const PseudoLabelEntry> entries);

/// {"total", "distinct", "head": [{"predicate", "count"}], "tail": [...]}
nlohmann::ordered_json histogram_report_json(const PredicateHistogram& hist,
                                             std::size_t k);
/// Aligned columns: rank, predicate, count, share.
std::string histogram_report_table(const PredicateHistogram& hist,
                                   std::size_t k);

}  // namespace sgsynth

#endif  // SGSYNTH_DATASET_HPP_
