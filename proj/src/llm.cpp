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

#include "sgsynth/llm.hpp"

#include <cmath>
#include <cstdio>
#include <thread>

#include "sgsynth/error.hpp"
#include "sgsynth/hash.hpp"
#include "sgsynth/io.hpp"
#include "sgsynth/log.hpp"
#include "sgsynth/roi.hpp"

namespace sgsynth {

void check_endpoint(const LlmEndpoint& endpoint) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::kConfigError, "llm." + field + " " + why,
                "llm." + field);
  };
  if (!std::isfinite(endpoint.temperature) || endpoint.temperature < 0) {
    fail("temperature", "must be finite and non-negative");
  }
  if (endpoint.max_retries < 0 || endpoint.max_retries > kMaxLlmRetries) {
    fail("max_retries", "must be within [0, 10]");
  }
  if (endpoint.max_output_tokens < 1) fail("max_output_tokens", "must be positive");
  if (endpoint.max_concurrency < 1) fail("max_concurrency", "must be positive");
  if (endpoint.timeout.count() <= 0) fail("timeout_ms", "must be positive");
  if (endpoint.backoff_base.count() < 0) fail("backoff_base_ms", "must be non-negative");
}

nlohmann::ordered_json chat_request_json(const PromptBundle& bundle,
                                         const LlmEndpoint& endpoint) {
  nlohmann::ordered_json request;
  request["model"] = endpoint.model_name;
  request["temperature"] = endpoint.temperature;
  request["max_tokens"] = endpoint.max_output_tokens;
  request["messages"] = nlohmann::ordered_json::array();
  for (const auto& message : bundle.messages) {
    request["messages"].push_back(
        {{"role", std::string(to_string(message.role))},
         {"content", message.content}});
  }
  return request;
}

std::string extract_completion_text(const nlohmann::json& body) {
  const auto fail = [](const std::string& where) {
    return Error(ErrorCode::kSchemaMismatch,
                 "chat completion response lacks " + where, where);
  };
  if (!body.is_object() || !body.contains("choices") ||
      !body["choices"].is_array() || body["choices"].empty()) {
    throw fail("choices[0]");
  }
  const auto& choice = body["choices"][0];
  if (!choice.is_object() || !choice.contains("message") ||
      !choice["message"].is_object()) {
    throw fail("choices[0].message");
  }
  const auto& message = choice["message"];
  if (!message.contains("content") || !message["content"].is_string()) {
    throw fail("choices[0].message.content");
  }
  return message["content"].get<std::string>();
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, "cannot create cache dir " + dir_.string(),
                dir_.string());
  }
}

std::string ResponseCache::key_for(const PromptBundle& bundle,
                                   const LlmEndpoint& endpoint) {
  char temperature[64];
  std::snprintf(temperature, sizeof temperature, "%.17g", endpoint.temperature);
  std::string material = bundle.template_checksum;
  material.push_back('\0');
  material += bundle.rendered_input;
  material.push_back('\0');
  material += endpoint.model_name;
  material.push_back('\0');
  material += temperature;
  return sha256_hex(material);
}

std::optional<LlmResponse> ResponseCache::get(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  const auto parsed = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (!parsed.is_object() || !parsed.contains("text") ||
      !parsed["text"].is_string()) {
    log_event(LogLevel::kWarning, "cache_entry_corrupt", {{"key", key}});
    return std::nullopt;
  }
  LlmResponse response;
  response.text = parsed["text"].get<std::string>();
  response.request_id = parsed.value("request_id", "");
  response.attempt_count = parsed.value("attempt_count", 1);
  response.obtained_at = parsed.value("obtained_at", std::int64_t{0});
  if (parsed.contains("usage") && parsed["usage"].is_object()) {
    const auto& u = parsed["usage"];
    response.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                                u.value("completion_tokens", std::int64_t{0}),
                                u.value("total_tokens", std::int64_t{0})};
  }
  response.from_cache = true;
  return response;
}

void ResponseCache::put(const std::string& key,
                        const LlmResponse& response) const {
  nlohmann::ordered_json entry;
  entry["text"] = response.text;
  entry["request_id"] = response.request_id;
  entry["attempt_count"] = response.attempt_count;
  entry["obtained_at"] = response.obtained_at;
  if (response.usage) {
    entry["usage"] = {{"prompt_tokens", response.usage->prompt_tokens},
                      {"completion_tokens", response.usage->completion_tokens},
                      {"total_tokens", response.usage->total_tokens}};
  }
  write_text_file_atomic(dir_ / (key + ".json"), entry.dump());
}

LlmClient::LlmClient(LlmEndpoint endpoint,
                     std::shared_ptr<HttpTransport> transport,
                     std::optional<ResponseCache> cache,
                     LlmClientOptions options)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      cache_(std::move(cache)),
      options_(std::move(options)) {
  check_endpoint(endpoint_);
  gate_ = std::make_unique<std::counting_semaphore<>>(endpoint_.max_concurrency);
  if (!options_.sleeper) options_.sleeper = real_sleeper();
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
}

LlmResponse LlmClient::complete(const PromptBundle& bundle) {
  if (bundle.messages.empty() || bundle.image_ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty prompt bundle");
  }
  std::string key;
  if (cache_) {
    key = ResponseCache::key_for(bundle, endpoint_);
    if (auto hit = cache_->get(key)) return *hit;
  }
  LlmResponse response = call_service(bundle);
  if (cache_) cache_->put(key, response);
  return response;
}

LlmResponse LlmClient::call_service(const PromptBundle& bundle) {
  const std::string body = chat_request_json(bundle, endpoint_).dump();
  std::mt19937_64 rng(splitmix64(options_.jitter_seed + calls_.fetch_add(1)));
  bool last_was_timeout = false;
  std::string last_problem;
  const int attempts_allowed = endpoint_.max_retries + 1;
  for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
    if (attempt > 1) {
      options_.sleeper(backoff_delay(
          RetryPolicy{endpoint_.max_retries, endpoint_.backoff_base},
          attempt - 2, rng));
    }
    TransportResult result;
    {
      gate_->acquire();
      struct Release {
        std::counting_semaphore<>* gate;
        ~Release() { gate->release(); }
      } release{gate_.get()};
      result = transport_->post_json("/chat/completions", body,
                                     endpoint_.auth_token);
    }
    if (!result.response) {
      last_was_timeout = result.failure == TransportFailure::kTimeout;
      last_problem = result.message;
      log_event(LogLevel::kWarning, "llm_transport_error",
                {{"attempt", attempt}, {"error", result.message}});
      continue;
    }
    const auto& http = *result.response;
    if (http.status == 200) {
      const auto parsed = nlohmann::json::parse(http.body, nullptr, false);
      if (parsed.is_discarded()) {
        throw Error(ErrorCode::kSchemaMismatch,
                    "chat completion response is not JSON");
      }
      LlmResponse response;
      response.text = extract_completion_text(parsed);
      response.request_id = parsed.value("id", "");
      response.attempt_count = attempt;
      response.obtained_at = options_.clock();
      if (parsed.contains("usage") && parsed["usage"].is_object()) {
        const auto& u = parsed["usage"];
        response.usage = TokenUsage{u.value("prompt_tokens", std::int64_t{0}),
                                    u.value("completion_tokens", std::int64_t{0}),
                                    u.value("total_tokens", std::int64_t{0})};
      }
      return response;
    }
    last_was_timeout = false;
    last_problem = "HTTP " + std::to_string(http.status);
    if (!is_retryable_status(http.status)) {
      throw Error(ErrorCode::kLlmRejected,
                  "LLM service rejected the request: " + last_problem,
                  std::to_string(attempt));
    }
    log_event(LogLevel::kWarning, "llm_retryable_status",
              {{"attempt", attempt}, {"status", http.status}});
  }
  throw Error(last_was_timeout ? ErrorCode::kTimeout : ErrorCode::kLlmUnavailable,
              "LLM service unavailable after " +
                  std::to_string(attempts_allowed) + " attempts: " + last_problem,
              std::to_string(attempts_allowed));
}

MockChatTransport::MockChatTransport(Responder responder,
                                     std::chrono::milliseconds latency)
    : responder_(std::move(responder)), latency_(latency) {}

TransportResult MockChatTransport::post_json(
    const std::string& path, const std::string& body,
    const std::optional<std::string>&) {
  const int now = in_flight_.fetch_add(1) + 1;
  int peak = peak_.load();
  while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
  }
  const int call = calls_.fetch_add(1) + 1;
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  TransportResult result;
  if (path != "/chat/completions") {
    result = TransportResult::ok(404, "{}");
  } else {
    const auto request = nlohmann::json::parse(body);
    result = TransportResult::ok(
        200, chat_response_body(responder_(request), "mock-" + std::to_string(call)));
  }
  in_flight_.fetch_sub(1);
  return result;
}

std::string chat_response_body(const std::string& text,
                               const std::string& request_id) {
  nlohmann::ordered_json body;
  body["id"] = request_id;
  body["object"] = "chat.completion";
  body["choices"] = nlohmann::ordered_json::array();
  body["choices"].push_back(
      {{"index", 0},
       {"message", {{"role", "assistant"}, {"content", text}}},
       {"finish_reason", "stop"}});
  return body.dump();
}

}  // namespace sgsynth
