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

#ifndef SGSYNTH_EVAL_HPP_
#define SGSYNTH_EVAL_HPP_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sgsynth/core.hpp"

namespace sgsynth {

/// A triplet with labelled, localized endpoints. `confidence` ranks
/// predictions and is ignored on ground truth.
struct GroundedTriplet {
  std::string source_label;
  BBox source_box;
  std::string target_label;
  BBox target_box;
  std::string relation;
  double confidence = 1.0;
};

enum class MatchMode {
  kUnion,   // IoU of the union boxes
  kPerBox,  // IoU of subject boxes and of object boxes, each
};

struct MatchOptions {
  double iou_threshold = 0.5;  // strict: IoU must exceed it
  MatchMode mode = MatchMode::kUnion;
};

/// True when labels agree and the boxes pass the threshold under `mode`.
bool triplets_match(const GroundedTriplet& pred, const GroundedTriplet& gt,
                    const MatchOptions& options = {});

/// Greedy one-to-one matching. Predictions are visited by descending
/// confidence (stable), each taking the first unmatched ground truth it
/// matches. Returns (prediction index, ground-truth index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> match_triplets(
    std::span<const GroundedTriplet> preds, std::span<const GroundedTriplet> gts,
    const MatchOptions& options = {});

struct PredicateRecall {
  std::size_t matched = 0;
  std::size_t total = 0;
  double recall = 0.0;
};

struct RecallReport {
  std::map<int, double> per_k;
  std::map<int, double> mean_per_k;
  std::map<std::string, std::map<int, PredicateRecall>> per_predicate;
  std::size_t num_images = 0;
};

using TripletsByImage = std::map<std::string, std::vector<GroundedTriplet>>;

/// R@K and mR@K over all ground-truth images. Images without predictions
/// count as fully missed; predictions for unknown images are ignored.
/// mR@K averages per-predicate recall over predicates present in ground truth.
/// Throws Error(kEmptyGroundTruth) when there is nothing to recall.
RecallReport recall_at_k(const TripletsByImage& preds, const TripletsByImage& gts,
                         std::span<const int> ks, const MatchOptions& options = {});

/// Line-delimited {"image_id", "triplets": [{"source_label", "source_box",
/// "target_label", "target_box", "relation", "confidence"?}]}.
TripletsByImage read_grounded_triplets(const std::filesystem::path& path);
void write_grounded_triplets(const TripletsByImage& data,
                             const std::filesystem::path& path);

/// {"num_images", "R@20": ..., "mR@20": ..., "per_predicate": {...}}
nlohmann::ordered_json recall_report_json(const RecallReport& report);
/// One header row and one value row: R@K columns then mR@K columns, as
/// percentages with two decimals.
std::string recall_report_table(const RecallReport& report);

}  // namespace sgsynth

#endif  // SGSYNTH_EVAL_HPP_
