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

#include "sgsynth/http.hpp"

#include <algorithm>
#include <thread>

#include "httplib.h"
#include "sgsynth/error.hpp"

namespace sgsynth {

namespace {

class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(const std::string& base_url,
                   std::chrono::milliseconds timeout)
      : timeout_(timeout) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "base_url needs a scheme: " + base_url, base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = base_url;
    } else {
      origin_ = base_url.substr(0, path_start);
      prefix_ = base_url.substr(path_start);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  TransportResult post_json(const std::string& path, const std::string& body,
                            const std::optional<std::string>& bearer) override {
    // httplib::Client is not thread-safe; one per call keeps this reentrant.
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (bearer && !bearer->empty()) {
      headers.emplace("Authorization", "Bearer " + *bearer);
    }
    auto result = client.Post(prefix_ + path, headers, body, "application/json");
    if (!result) {
      const auto err = result.error();
      const auto why = (err == httplib::Error::Read || err == httplib::Error::Write ||
                        err == httplib::Error::ConnectionTimeout)
                           ? TransportFailure::kTimeout
                           : TransportFailure::kConnection;
      return TransportResult::failed(why, httplib::to_string(err));
    }
    return TransportResult::ok(result->status, result->body);
  }

 private:
  std::string origin_;
  std::string prefix_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(
    const std::string& base_url, std::chrono::milliseconds timeout) {
  return std::make_shared<HttplibTransport>(base_url, timeout);
}

bool is_retryable_status(int status) {
  return status == 429 || (status >= 500 && status <= 599);
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt,
                                        std::mt19937_64& rng) {
  const int shift = std::clamp(attempt, 0, 30);
  const double cap =
      static_cast<double>(policy.backoff_base.count()) * double(1LL << shift);
  std::uniform_real_distribution<double> dist(0.0, cap);
  return std::chrono::milliseconds(static_cast<std::int64_t>(dist(rng)));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace sgsynth
