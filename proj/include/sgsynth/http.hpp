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

#ifndef SGSYNTH_HTTP_HPP_
#define SGSYNTH_HTTP_HPP_

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace sgsynth {

struct HttpResponse {
  int status = 0;
  std::string body;
};

enum class TransportFailure { kNone, kConnection, kTimeout };

/// Outcome of one POST. Either `response` is set, or `failure` says why the
/// exchange never completed.
struct TransportResult {
  std::optional<HttpResponse> response;
  TransportFailure failure = TransportFailure::kNone;
  std::string message;

  static TransportResult ok(int status, std::string body) {
    return {HttpResponse{status, std::move(body)}, TransportFailure::kNone, {}};
  }
  static TransportResult failed(TransportFailure why, std::string message) {
    return {std::nullopt, why, std::move(message)};
  }
};

/// POSTs JSON bodies to `<base_url><path>`. Implementations must be safe to
/// call from several threads at once.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual TransportResult post_json(const std::string& path,
                                    const std::string& body,
                                    const std::optional<std::string>& bearer) = 0;
};

/// cpp-httplib backed transport. `base_url` may carry a path prefix
/// ("https://host/v1"); http and https are supported.
std::shared_ptr<HttpTransport> make_http_transport(
    const std::string& base_url, std::chrono::milliseconds timeout);

/// Transport errors, 429 and 5xx are worth another attempt; other statuses
/// are final.
bool is_retryable_status(int status);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
};

/// Full-jitter exponential backoff: uniform in [0, base * 2^attempt] where
/// `attempt` counts failures so far starting at 0.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        std::mt19937_64& rng);

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

}  // namespace sgsynth

#endif  // SGSYNTH_HTTP_HPP_
