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

#include "sgsynth/narrate.hpp"

#include <algorithm>
#include <cctype>
#include <exception>
#include <map>
#include <thread>

#include "json.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/log.hpp"
#include "sgsynth/prompt.hpp"

namespace sgsynth {

namespace {

std::string trimmed(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

CaptionRequest make_caption_request(const ImageRecord& record,
                                    const std::optional<BBox>& region) {
  CaptionRequest request{
      record.image_uri().empty() ? record.image_id() : record.image_uri(),
      std::nullopt};
  if (!region) return request;
  const double x1 = std::clamp(region->x1(), 0.0, double(record.width()));
  const double y1 = std::clamp(region->y1(), 0.0, double(record.height()));
  const double x2 = std::clamp(region->x2(), 0.0, double(record.width()));
  const double y2 = std::clamp(region->y2(), 0.0, double(record.height()));
  if (!(x1 < x2) || !(y1 < y2)) {
    throw Error(ErrorCode::kInvalidArgument,
                "crop has no area inside image " + record.image_id(),
                record.image_id());
  }
  request.crop = BBox(x1, y1, x2, y2);
  return request;
}

std::string caption_request_body(const CaptionRequest& request) {
  nlohmann::ordered_json body;
  body["image_uri"] = request.image_uri;
  if (request.crop) {
    body["crop"] = {request.crop->x1(), request.crop->y1(), request.crop->x2(),
                    request.crop->y2()};
  } else {
    body["crop"] = nullptr;
  }
  return body.dump();
}

HttpCaptioner::HttpCaptioner(CaptionerEndpoint endpoint,
                             std::shared_ptr<HttpTransport> transport,
                             Sleeper sleeper, std::uint64_t jitter_seed)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      jitter_seed_(jitter_seed) {}

HttpCaptioner::HttpCaptioner(CaptionerEndpoint endpoint)
    : HttpCaptioner(endpoint,
                    make_http_transport(endpoint.base_url, endpoint.timeout)) {}

std::string HttpCaptioner::caption(const CaptionRequest& request,
                                   const CaptionContext& context) {
  const std::string body = caption_request_body(request);
  std::mt19937_64 rng(splitmix64(jitter_seed_ + calls_.fetch_add(1)));
  std::string last_problem;
  for (int attempt = 0; attempt <= endpoint_.retry.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff_delay(endpoint_.retry, attempt - 1, rng));
    }
    const auto result =
        transport_->post_json("/caption", body, endpoint_.auth_token);
    if (!result.response) {
      last_problem = result.message;
      continue;
    }
    const auto& response = *result.response;
    if (response.status == 200) {
      const auto parsed = nlohmann::json::parse(response.body, nullptr, false);
      if (parsed.is_object() && parsed.contains("caption") &&
          parsed["caption"].is_string()) {
        return parsed["caption"].get<std::string>();
      }
      throw Error(ErrorCode::kCaptionServiceUnavailable,
                  "captioner reply lacks a caption string", context.image_id);
    }
    last_problem = "HTTP " + std::to_string(response.status);
    if (!is_retryable_status(response.status)) break;
  }
  throw Error(ErrorCode::kCaptionServiceUnavailable,
              "captioning failed for " + context.image_id + " " +
                  context.region + ": " + last_problem,
              context.image_id);
}

std::string MockCaptioner::caption(const CaptionRequest&,
                                   const CaptionContext& context) {
  return "caption of " + context.image_id + "/" + context.region;
}

CaptionSet group_by_caption(
    std::span<const std::pair<Region, std::string>> entries) {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (entries[i].first == entries[j].first) {
        throw Error(ErrorCode::kInvalidArgument,
                    "region listed twice: " + render_region(entries[i].first));
      }
    }
  }
  std::vector<std::string> texts;
  std::vector<std::vector<Region>> groups;
  std::map<std::string, std::size_t> slot;
  for (const auto& [region, raw] : entries) {
    std::string text = trimmed(raw);
    auto [it, inserted] = slot.emplace(text, groups.size());
    if (inserted) {
      texts.push_back(std::move(text));
      groups.emplace_back();
    }
    groups[it->second].push_back(region);
  }
  std::vector<CaptionEntry> out;
  out.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::stable_partition(groups[g].begin(), groups[g].end(), is_global);
    out.push_back(CaptionEntry{CaptionKey(std::move(groups[g])), texts[g]});
  }
  return CaptionSet(std::move(out));
}

CaptionSet generate_narratives(const ImageRecord& record,
                               std::span<const ObjectPair> pairs,
                               Captioner& captioner,
                               const NarrationOptions& options) {
  struct Task {
    Region region;
    CaptionRequest request;
    std::string text;
    std::exception_ptr error;
  };
  std::vector<Task> tasks;
  std::optional<std::string> dataset_global;
  if (options.global_source == GlobalCaptionSource::kDataset) {
    dataset_global = record.captions().global_text();
    if (!dataset_global) {
      log_event(LogLevel::kWarning, "dataset_global_caption_missing",
                {{"image_id", record.image_id()}});
    }
  } else {
    tasks.push_back({GlobalRegion{}, make_caption_request(record, std::nullopt),
                     {}, nullptr});
  }
  for (const auto& pair : pairs) {
    tasks.push_back({pair.region(), make_caption_request(record, pair.union_box),
                     {}, nullptr});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < tasks.size();
         i = next.fetch_add(1)) {
      try {
        tasks[i].text = captioner.caption(
            tasks[i].request,
            CaptionContext{record.image_id(), render_region(tasks[i].region)});
      } catch (...) {
        tasks[i].error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(
      std::max(1, options.max_concurrency), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<std::pair<Region, std::string>> entries;
  if (dataset_global && !trimmed(*dataset_global).empty()) {
    entries.emplace_back(GlobalRegion{}, *dataset_global);
  }
  for (auto& task : tasks) {
    if (task.error) std::rethrow_exception(task.error);
    if (trimmed(task.text).empty()) {
      log_event(LogLevel::kWarning, "empty_caption",
                {{"image_id", record.image_id()},
                 {"region", render_region(task.region)}});
      continue;
    }
    entries.emplace_back(std::move(task.region), std::move(task.text));
  }
  return group_by_caption(entries);
}

}  // namespace sgsynth
