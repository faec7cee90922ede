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

#ifndef SGSYNTH_LLM_HPP_
#define SGSYNTH_LLM_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include "json.hpp"
#include "sgsynth/http.hpp"
#include "sgsynth/prompt.hpp"

namespace sgsynth {

inline constexpr int kMaxLlmRetries = 10;

struct LlmEndpoint {
  std::string base_url;
  std::string model_name = "gpt-4-turbo";
  double temperature = 0.0;
  int max_output_tokens = 2048;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  int max_concurrency = 4;
  std::optional<std::string> auth_token;
};

/// Throws Error(kConfigError) on out-of-range fields.
void check_endpoint(const LlmEndpoint& endpoint);

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t total_tokens = 0;
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct LlmResponse {
  std::string text;
  std::string request_id;
  int attempt_count = 0;  // attempts the original call took
  std::optional<TokenUsage> usage;
  bool from_cache = false;
  std::int64_t obtained_at = 0;  // unix seconds when the service answered
};

/// {"model", "temperature", "max_tokens", "messages": [{"role", "content"}]}
nlohmann::ordered_json chat_request_json(const PromptBundle& bundle,
                                         const LlmEndpoint& endpoint);

/// Content of the first choice's message, verbatim.
/// Throws Error(kSchemaMismatch) when the body does not have that shape.
std::string extract_completion_text(const nlohmann::json& body);

/// On-disk response cache, one JSON file per key under `dir`.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  /// SHA-256 over template checksum, rendered input, model name and
  /// temperature (%.17g), separated by NUL bytes.
  static std::string key_for(const PromptBundle& bundle,
                             const LlmEndpoint& endpoint);

  std::optional<LlmResponse> get(const std::string& key) const;
  void put(const std::string& key, const LlmResponse& response) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct LlmClientOptions {
  Sleeper sleeper = real_sleeper();
  std::uint64_t jitter_seed = 0;
  std::function<std::int64_t()> clock;  // unix seconds; system clock if empty
};

/// Chat-completions client: POST {base_url}/chat/completions.
///
/// Transport failures, 429 and 5xx are retried with full-jitter exponential
/// backoff up to `max_retries` times. Other 4xx fail at once with
/// kLlmRejected. At most `max_concurrency` requests are on the wire; callers
/// beyond that wait. Safe to share between threads.
class LlmClient {
 public:
  LlmClient(LlmEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
            std::optional<ResponseCache> cache = std::nullopt,
            LlmClientOptions options = {});

  LlmResponse complete(const PromptBundle& bundle);

  const LlmEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  LlmResponse call_service(const PromptBundle& bundle);

  LlmEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  std::optional<ResponseCache> cache_;
  LlmClientOptions options_;
  std::unique_ptr<std::counting_semaphore<>> gate_;
  std::atomic<std::uint64_t> calls_{0};
};

/// In-process stand-in for a chat-completions service. `responder` maps the
/// request JSON to the completion text, which is wrapped in a well-formed
/// response body. Tracks peak concurrency for tests.
class MockChatTransport : public HttpTransport {
 public:
  using Responder = std::function<std::string(const nlohmann::json& request)>;

  explicit MockChatTransport(Responder responder,
                             std::chrono::milliseconds latency = {});

  TransportResult post_json(const std::string& path, const std::string& body,
                            const std::optional<std::string>& bearer) override;

  int peak_in_flight() const noexcept { return peak_.load(); }
  int calls() const noexcept { return calls_.load(); }

 private:
  Responder responder_;
  std::chrono::milliseconds latency_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
  std::atomic<int> calls_{0};
};

/// Wraps text in a chat-completions response body.
std::string chat_response_body(const std::string& text,
                               const std::string& request_id);

}  // namespace sgsynth

#endif  // SGSYNTH_LLM_HPP_
