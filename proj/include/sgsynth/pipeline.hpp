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

#ifndef SGSYNTH_PIPELINE_HPP_
#define SGSYNTH_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgsynth/config.hpp"
#include "sgsynth/dataset.hpp"
#include "sgsynth/llm.hpp"
#include "sgsynth/narrate.hpp"
#include "sgsynth/prompt.hpp"

namespace sgsynth {

/// Mock LLM behaviour for offline runs: reads the input block back out of the
/// prompt and relates every captioned union pair with "near".
MockChatTransport::Responder heuristic_mock_responder(const PromptTemplate& tmpl);

/// Mock LLM that always answers `text`.
MockChatTransport::Responder fixed_mock_responder(std::string text);

struct SynthSettings {
  std::uint64_t seed = 0;
  int n_max_rois = kDefaultMaxRois;
  std::size_t batch_size = kDefaultBatchCap;
  NarrationOptions narration;
  std::vector<ExclusivityRule> rules = default_exclusivity_rules();
  std::filesystem::path output_corpus;
  std::optional<std::filesystem::path> instructions;
  /// Overrides the provenance timestamp (SOURCE_DATE_EPOCH).
  std::optional<std::int64_t> fixed_timestamp;
};

struct SynthSummary {
  std::size_t images_in = 0;
  std::size_t skipped_existing = 0;
  std::size_t skipped_sparse = 0;
  std::size_t synthesized = 0;
  std::size_t failed = 0;
  std::size_t triplets_accepted = 0;
  std::size_t triplets_rejected = 0;
  std::size_t llm_requests = 0;
  std::size_t cache_hits = 0;
  std::size_t corpus_size = 0;
  std::size_t instructions_written = 0;

  nlohmann::ordered_json to_json() const;
};

/// Builds pseudo-labels for `records` and appends them to the output corpus.
///
/// Images already present in the corpus are skipped, as are images with
/// fewer than two objects. Records that already carry captions (and use the
/// service as global source) are not narrated again. Prompts batch up to
/// `batch_size` images in image_id order and run on up to the client's
/// max_concurrency threads. When done the corpus is rewritten sorted by
/// image_id, and instruction pairs are exported if a path is given.
SynthSummary run_synth(std::span<const ImageRecord> records,
                       const SynthSettings& settings, Captioner& captioner,
                       LlmClient& llm, const PromptTemplate& tmpl);

}  // namespace sgsynth

#endif  // SGSYNTH_PIPELINE_HPP_
