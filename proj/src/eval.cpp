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

#include "sgsynth/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sgsynth/error.hpp"
#include "sgsynth/geometry.hpp"
#include "sgsynth/io.hpp"

namespace sgsynth {

bool triplets_match(const GroundedTriplet& pred, const GroundedTriplet& gt,
                    const MatchOptions& options) {
  if (normalize_object_key(pred.source_label) != normalize_object_key(gt.source_label) ||
      normalize_object_key(pred.target_label) != normalize_object_key(gt.target_label) ||
      pred.relation != gt.relation) {
    return false;
  }
  if (options.mode == MatchMode::kUnion) {
    return iou(union_box(pred.source_box, pred.target_box),
               union_box(gt.source_box, gt.target_box)) > options.iou_threshold;
  }
  return iou(pred.source_box, gt.source_box) > options.iou_threshold &&
         iou(pred.target_box, gt.target_box) > options.iou_threshold;
}

namespace {

std::vector<std::size_t> confidence_order(std::span<const GroundedTriplet> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].confidence > preds[b].confidence;
  });
  return order;
}

// Greedy matching over the given prediction visiting order.
std::vector<std::pair<std::size_t, std::size_t>> greedy(
    std::span<const GroundedTriplet> preds, std::span<const std::size_t> order,
    std::span<const GroundedTriplet> gts, const MatchOptions& options) {
  std::vector<bool> used(gts.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  for (std::size_t p : order) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!used[g] && triplets_match(preds[p], gts[g], options)) {
        used[g] = true;
        matches.emplace_back(p, g);
        break;
      }
    }
  }
  return matches;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> match_triplets(
    std::span<const GroundedTriplet> preds, std::span<const GroundedTriplet> gts,
    const MatchOptions& options) {
  const auto order = confidence_order(preds);
  return greedy(preds, order, gts, options);
}

RecallReport recall_at_k(const TripletsByImage& preds, const TripletsByImage& gts,
                         std::span<const int> ks, const MatchOptions& options) {
  std::size_t gt_total = 0;
  for (const auto& [id, triplets] : gts) gt_total += triplets.size();
  if (gt_total == 0) {
    throw Error(ErrorCode::kEmptyGroundTruth, "ground truth holds no triplets");
  }
  if (ks.empty()) throw Error(ErrorCode::kInvalidArgument, "no K values given");
  for (int k : ks) {
    if (k < 1) throw Error(ErrorCode::kInvalidArgument, "K must be positive");
  }

  RecallReport report;
  report.num_images = gts.size();
  std::map<int, std::size_t> matched_at;
  std::map<std::string, std::map<int, std::size_t>> pred_matched;
  std::map<std::string, std::size_t> pred_total;

  for (const auto& [image_id, gt] : gts) {
    for (const auto& t : gt) ++pred_total[t.relation];
    const auto it = preds.find(image_id);
    const std::span<const GroundedTriplet> image_preds =
        it == preds.end() ? std::span<const GroundedTriplet>{}
                          : std::span<const GroundedTriplet>(it->second);
    const auto order = confidence_order(image_preds);
    for (int k : ks) {
      const std::size_t keep = std::min<std::size_t>(k, order.size());
      const auto matches = greedy(image_preds, std::span(order).first(keep), gt, options);
      matched_at[k] += matches.size();
      for (const auto& [p, g] : matches) ++pred_matched[gt[g].relation][k];
    }
  }

  for (int k : ks) {
    report.per_k[k] = double(matched_at[k]) / double(gt_total);
    double sum = 0.0;
    for (const auto& [predicate, total] : pred_total) {
      PredicateRecall r;
      r.total = total;
      r.matched = pred_matched[predicate][k];
      r.recall = double(r.matched) / double(r.total);
      report.per_predicate[predicate][k] = r;
      sum += r.recall;
    }
    report.mean_per_k[k] = sum / double(pred_total.size());
  }
  return report;
}

namespace {

BBox read_box(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4 ||
      !std::all_of(v.begin(), v.end(), [](const auto& x) { return x.is_number(); })) {
    throw Error(ErrorCode::kSchemaError, where + ": box must be four numbers", where);
  }
  try {
    return BBox(v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
                v[3].get<double>());
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchemaError, where + ": " + e.what(), where);
  }
}

}  // namespace

TripletsByImage read_grounded_triplets(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  TripletsByImage out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(number);
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::kSchemaError, where + ": " + what, std::to_string(number));
    };
    const auto v = nlohmann::json::parse(line, nullptr, false);
    if (!v.is_object() || !v.contains("image_id") || !v.contains("triplets") ||
        !v["triplets"].is_array()) {
      throw fail("expected {\"image_id\", \"triplets\": [...]}");
    }
    std::string image_id;
    if (v["image_id"].is_string()) {
      image_id = v["image_id"].get<std::string>();
    } else if (v["image_id"].is_number_integer()) {
      image_id = std::to_string(v["image_id"].get<std::int64_t>());
    } else {
      throw fail("image_id must be a string or integer");
    }
    auto& bucket = out[image_id];
    for (const auto& t : v["triplets"]) {
      const auto str = [&](const char* name) {
        if (!t.is_object() || !t.contains(name) || !t[name].is_string()) {
          throw fail(std::string("triplet field '") + name + "' must be a string");
        }
        return t[name].get<std::string>();
      };
      double confidence = 1.0;
      if (t.is_object() && t.contains("confidence")) {
        if (!t["confidence"].is_number()) throw fail("confidence must be a number");
        confidence = t["confidence"].get<double>();
        if (!(confidence >= 0.0 && confidence <= 1.0)) {
          throw fail("confidence must lie in [0, 1]");
        }
      }
      if (!t.contains("source_box") || !t.contains("target_box")) {
        throw fail("triplet needs source_box and target_box");
      }
      bucket.push_back(GroundedTriplet{str("source_label"), read_box(t["source_box"], where),
                                       str("target_label"), read_box(t["target_box"], where),
                                       str("relation"), confidence});
    }
  }
  return out;
}

void write_grounded_triplets(const TripletsByImage& data,
                             const std::filesystem::path& path) {
  std::string text;
  for (const auto& [image_id, triplets] : data) {
    nlohmann::ordered_json line;
    line["image_id"] = image_id;
    line["triplets"] = nlohmann::ordered_json::array();
    for (const auto& t : triplets) {
      const auto box = [](const BBox& b) {
        return nlohmann::ordered_json::array({b.x1(), b.y1(), b.x2(), b.y2()});
      };
      line["triplets"].push_back({{"source_label", t.source_label},
                                  {"source_box", box(t.source_box)},
                                  {"target_label", t.target_label},
                                  {"target_box", box(t.target_box)},
                                  {"relation", t.relation},
                                  {"confidence", t.confidence}});
    }
    text += line.dump() + "\n";
  }
  write_text_file_atomic(path, text);
}

nlohmann::ordered_json recall_report_json(const RecallReport& report) {
  nlohmann::ordered_json out;
  out["num_images"] = report.num_images;
  for (const auto& [k, r] : report.per_k) out["R@" + std::to_string(k)] = r;
  for (const auto& [k, r] : report.mean_per_k) out["mR@" + std::to_string(k)] = r;
  out["per_predicate"] = nlohmann::ordered_json::object();
  for (const auto& [predicate, by_k] : report.per_predicate) {
    auto& p = out["per_predicate"][predicate];
    for (const auto& [k, r] : by_k) {
      p["@" + std::to_string(k)] = {{"matched", r.matched}, {"total", r.total},
                                    {"recall", r.recall}};
    }
  }
  return out;
}

std::string recall_report_table(const RecallReport& report) {
  std::ostringstream header;
  std::ostringstream values;
  auto cell = [&](const std::string& name, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * value);
    const std::size_t width = std::max<std::size_t>(name.size(), 6) + 2;
    header << std::string(width - name.size(), ' ') << name;
    values << std::string(width - std::string(buf).size(), ' ') << buf;
  };
  for (const auto& [k, r] : report.per_k) cell("R@" + std::to_string(k), r);
  for (const auto& [k, r] : report.mean_per_k) cell("mR@" + std::to_string(k), r);
  return header.str() + "\n" + values.str() + "\n";
}

}  // namespace sgsynth
