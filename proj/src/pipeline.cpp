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

#include "sgsynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "sgsynth/error.hpp"
#include "sgsynth/graph.hpp"
#include "sgsynth/log.hpp"
#include "sgsynth/roi.hpp"

namespace sgsynth {

MockChatTransport::Responder heuristic_mock_responder(const PromptTemplate& tmpl) {
  const std::string& user = tmpl.user_text();
  const auto at = user.find(kInputPlaceholder);
  const std::string prefix = user.substr(0, at);
  const std::string suffix = user.substr(at + kInputPlaceholder.size());
  return [prefix, suffix](const nlohmann::json& request) {
    std::string content = request.at("messages").back().at("content").get<std::string>();
    if (content.starts_with(prefix) && content.ends_with(suffix) &&
        content.size() >= prefix.size() + suffix.size()) {
      content = content.substr(prefix.size(), content.size() - prefix.size() - suffix.size());
    }
    nlohmann::json input = nlohmann::json::parse(content, nullptr, false);
    if (input.is_discarded()) return std::string("[]");
    if (!input.is_array()) input = nlohmann::json::array({input});
    static const std::regex kUnion(R"(Union\(([^:,\s]+):\[[^\]]*\], ([^:,\s]+):\[[^\]]*\]\))");
    std::vector<SceneGraph> graphs;
    for (const auto& image : input) {
      SceneGraph graph;
      graph.image_id = image.value("image_id", "");
      std::set<std::pair<std::string, std::string>> seen;
      if (image.contains("captions") && image["captions"].is_object()) {
        for (const auto& [key, text] : image["captions"].items()) {
          for (std::sregex_iterator it(key.begin(), key.end(), kUnion), end; it != end; ++it) {
            std::pair<std::string, std::string> pair{(*it)[1].str(), (*it)[2].str()};
            if (seen.insert(pair).second) {
              graph.triplets.push_back({pair.first, pair.second, "near", std::nullopt});
            }
          }
        }
      }
      graphs.push_back(std::move(graph));
    }
    return serialize_scene_graphs(graphs);
  };
}

MockChatTransport::Responder fixed_mock_responder(std::string text) {
  return [text = std::move(text)](const nlohmann::json&) { return text; };
}

nlohmann::ordered_json SynthSummary::to_json() const {
  return {{"images_in", images_in},
          {"skipped_existing", skipped_existing},
          {"skipped_sparse", skipped_sparse},
          {"synthesized", synthesized},
          {"failed", failed},
          {"triplets_accepted", triplets_accepted},
          {"triplets_rejected", triplets_rejected},
          {"llm_requests", llm_requests},
          {"cache_hits", cache_hits},
          {"corpus_size", corpus_size},
          {"instructions_written", instructions_written}};
}

namespace {

bool already_narrated(const ImageRecord& record, const NarrationOptions& options) {
  return !record.captions().empty() &&
         options.global_source == GlobalCaptionSource::kService;
}

}  // namespace

SynthSummary run_synth(std::span<const ImageRecord> records,
                       const SynthSettings& settings, Captioner& captioner,
                       LlmClient& llm, const PromptTemplate& tmpl) {
  SynthSummary summary;
  summary.images_in = records.size();
  const auto& corpus = settings.output_corpus;

  // Normalizes the file (drops an interrupted last line) before appending.
  std::set<std::string> done;
  {
    std::error_code ec;
    std::vector<PseudoLabelEntry> existing;
    if (std::filesystem::exists(corpus, ec)) {
      existing = read_pseudo_labels(corpus, /*drop_truncated_tail=*/true);
    }
    for (const auto& e : existing) done.insert(e.input.image_id);
    write_pseudo_labels(existing, corpus);
  }

  std::vector<ImageRecord> todo;
  for (const auto& record : records) {
    if (done.count(record.image_id())) {
      ++summary.skipped_existing;
    } else if (record.objects().size() < 2) {
      ++summary.skipped_sparse;
    } else {
      todo.push_back(record);
    }
  }
  std::stable_sort(todo.begin(), todo.end(), [](const auto& a, const auto& b) {
    return a.image_id() < b.image_id();
  });

  std::vector<ImageRecord> narrated;
  for (const auto& record : todo) {
    if (already_narrated(record, settings.narration)) {
      narrated.push_back(record);
      continue;
    }
    try {
      const auto pairs = select_rois(record.objects(), settings.n_max_rois,
                                     image_seed(settings.seed, record.image_id()));
      auto captions = generate_narratives(record, pairs, captioner, settings.narration);
      if (captions.empty()) {
        throw Error(ErrorCode::kMissingCaptions, "no usable captions", record.image_id());
      }
      narrated.push_back(record.with_captions(std::move(captions)));
    } catch (const Error& e) {
      ++summary.failed;
      log_event(LogLevel::kError, "narration_failed",
                {{"image_id", record.image_id()},
                 {"error", std::string(to_string(e.code()))},
                 {"message", e.what()}});
    }
  }

  std::vector<std::vector<ImageRecord>> batches;
  for (std::size_t i = 0; i < narrated.size(); i += settings.batch_size) {
    const auto end = std::min(narrated.size(), i + settings.batch_size);
    batches.emplace_back(narrated.begin() + i, narrated.begin() + end);
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto handle_batch = [&](const std::vector<ImageRecord>& batch) {
    std::vector<PseudoLabelEntry> entries;
    std::size_t accepted = 0, rejected = 0, failed = 0;
    bool cache_hit = false;
    try {
      const auto bundle = build_prompt(std::span<const ImageRecord>(batch), tmpl,
                                       settings.batch_size);
      const auto response = llm.complete(bundle);
      cache_hit = response.from_cache;
      const auto graphs = parse_response(response.text);
      for (const auto& record : batch) {
        const auto graph = std::find_if(graphs.begin(), graphs.end(), [&](const auto& g) {
          return g.image_id == record.image_id();
        });
        if (graph == graphs.end()) {
          ++failed;
          log_event(LogLevel::kError, "graph_missing", {{"image_id", record.image_id()}});
          continue;
        }
        const auto report = validate(*graph, record, settings.rules);
        for (const auto& r : report.rejected) {
          log_event(LogLevel::kInfo, "triplet_rejected",
                    {{"image_id", record.image_id()},
                     {"source", r.triplet.source},
                     {"target", r.triplet.target},
                     {"relation", r.triplet.relation},
                     {"reason", std::string(to_string(r.reason))}});
        }
        accepted += report.accepted.triplets.size();
        rejected += report.rejected.size();
        PseudoLabelEntry entry;
        entry.input = render_record(record);
        entry.relationships = report.accepted.triplets;
        entry.provenance = {tmpl.checksum(), llm.endpoint().model_name,
                            settings.fixed_timestamp.value_or(response.obtained_at),
                            static_cast<std::int64_t>(report.rejected.size())};
        entries.push_back(std::move(entry));
      }
    } catch (const Error& e) {
      failed = batch.size();
      entries.clear();
      accepted = rejected = 0;
      std::vector<std::string> ids;
      for (const auto& r : batch) ids.push_back(r.image_id());
      log_event(LogLevel::kError, "batch_failed",
                {{"image_ids", ids},
                 {"error", std::string(to_string(e.code()))},
                 {"message", e.what()}});
    }
    std::lock_guard<std::mutex> lock(mu);
    ++summary.llm_requests;
    if (cache_hit) ++summary.cache_hits;
    summary.failed += failed;
    summary.triplets_accepted += accepted;
    summary.triplets_rejected += rejected;
    for (const auto& entry : entries) {
      append_pseudo_label(entry, corpus);
      ++summary.synthesized;
    }
  };
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < batches.size(); i = next.fetch_add(1)) {
      handle_batch(batches[i]);
    }
  };
  const std::size_t threads = std::min<std::size_t>(
      std::max(1, llm.endpoint().max_concurrency), batches.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  auto all = read_pseudo_labels(corpus);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.input.image_id < b.input.image_id;
  });
  all.erase(std::unique(all.begin(), all.end(),
                        [](const auto& a, const auto& b) {
                          return a.input.image_id == b.input.image_id;
                        }),
            all.end());
  write_pseudo_labels(all, corpus);
  summary.corpus_size = all.size();

  if (settings.instructions) {
    summary.instructions_written = export_instruction_pairs(all, tmpl, *settings.instructions);
  }
  return summary;
}

}  // namespace sgsynth
