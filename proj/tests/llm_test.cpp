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

#include <gtest/gtest.h>

#include <deque>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "sgsynth/error.hpp"
#include "sgsynth/llm.hpp"
#include "test_support.hpp"

namespace sgsynth {
namespace {

// Plays back a fixed list of outcomes, then keeps returning the last one.
class ScriptedTransport : public HttpTransport {
 public:
  explicit ScriptedTransport(std::vector<TransportResult> script)
      : script_(std::move(script)) {}
  TransportResult post_json(const std::string& path, const std::string& body,
                            const std::optional<std::string>& bearer) override {
    std::lock_guard lock(mu_);
    paths.push_back(path);
    bodies.push_back(body);
    bearers.push_back(bearer);
    const auto i = std::min(paths.size() - 1, script_.size() - 1);
    return script_[i];
  }
  std::vector<std::string> paths, bodies;
  std::vector<std::optional<std::string>> bearers;

 private:
  std::mutex mu_;
  std::vector<TransportResult> script_;
};

PromptBundle reader_bundle() {
  const std::vector<ImageRecord> records{testing::reader_record()};
  return build_prompt(std::span<const ImageRecord>(records), PromptTemplate::builtin());
}

LlmEndpoint fast_endpoint() {
  LlmEndpoint e;
  e.base_url = "http://unused";
  e.backoff_base = std::chrono::milliseconds(1);
  return e;
}

struct SleepLog {
  std::vector<std::chrono::milliseconds> delays;
  LlmClientOptions options() {
    LlmClientOptions o;
    o.sleeper = [this](std::chrono::milliseconds d) { delays.push_back(d); };
    o.clock = [] { return std::int64_t{1700000000}; };
    return o;
  }
};

TEST(LlmTest, ReturnsScriptedReaderResponse) {
  const auto text = testing::read_data("fixtures/reader_response.txt");
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector{TransportResult::ok(200, chat_response_body(text, "req-1"))});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, std::nullopt, sleeps.options());
  const auto response = client.complete(reader_bundle());
  EXPECT_EQ(response.text, text);
  EXPECT_EQ(response.request_id, "req-1");
  EXPECT_EQ(response.attempt_count, 1);
  EXPECT_EQ(response.obtained_at, 1700000000);
  EXPECT_FALSE(response.from_cache);
  ASSERT_EQ(transport->paths.size(), 1u);
  EXPECT_EQ(transport->paths[0], "/chat/completions");
  const auto request = nlohmann::json::parse(transport->bodies[0]);
  EXPECT_EQ(request["model"], "gpt-4-turbo");
  EXPECT_EQ(request["temperature"], 0.0);
  EXPECT_EQ(request["messages"][0]["role"], "system");
  EXPECT_EQ(request["messages"][1]["role"], "user");
}

TEST(LlmTest, RetriesTransientFailures) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector{TransportResult::ok(503, ""), TransportResult::ok(503, ""),
                  TransportResult::ok(200, chat_response_body("[]", "r"))});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, std::nullopt, sleeps.options());
  const auto response = client.complete(reader_bundle());
  EXPECT_EQ(response.attempt_count, 3);
  EXPECT_EQ(sleeps.delays.size(), 2u);
}

TEST(LlmTest, RateLimitAndTransportErrorsRetry) {
  auto transport = std::make_shared<ScriptedTransport>(std::vector{
      TransportResult::ok(429, ""),
      TransportResult::failed(TransportFailure::kConnection, "refused"),
      TransportResult::ok(200, chat_response_body("[]", "r"))});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, std::nullopt, sleeps.options());
  EXPECT_EQ(client.complete(reader_bundle()).attempt_count, 3);
}

TEST(LlmTest, ClientErrorIsRejectedWithoutRetry) {
  auto transport =
      std::make_shared<ScriptedTransport>(std::vector{TransportResult::ok(401, "")});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, std::nullopt, sleeps.options());
  try {
    client.complete(reader_bundle());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLlmRejected);
    EXPECT_EQ(e.detail(), "1");
  }
  EXPECT_EQ(transport->paths.size(), 1u);
  EXPECT_TRUE(sleeps.delays.empty());
}

TEST(LlmTest, AttemptsAreBounded) {
  for (int retries : {0, 1, 3, 5}) {
    auto transport =
        std::make_shared<ScriptedTransport>(std::vector{TransportResult::ok(500, "")});
    auto endpoint = fast_endpoint();
    endpoint.max_retries = retries;
    SleepLog sleeps;
    LlmClient client(endpoint, transport, std::nullopt, sleeps.options());
    try {
      client.complete(reader_bundle());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kLlmUnavailable);
    }
    EXPECT_EQ(transport->paths.size(), static_cast<std::size_t>(retries + 1));
    ASSERT_EQ(sleeps.delays.size(), static_cast<std::size_t>(retries));
    for (int a = 0; a < retries; ++a) {
      EXPECT_LE(sleeps.delays[a].count(), (1 << a));  // full jitter within base * 2^a
    }
  }
}

TEST(LlmTest, TimeoutsSurfaceAsTimeout) {
  auto transport = std::make_shared<ScriptedTransport>(
      std::vector{TransportResult::failed(TransportFailure::kTimeout, "read timeout")});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, std::nullopt, sleeps.options());
  try {
    client.complete(reader_bundle());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(LlmTest, EndpointChecks) {
  auto transport =
      std::make_shared<ScriptedTransport>(std::vector{TransportResult::ok(200, "")});
  auto bad = fast_endpoint();
  bad.max_retries = kMaxLlmRetries + 1;
  EXPECT_THROW(LlmClient(bad, transport), Error);
  bad = fast_endpoint();
  bad.max_concurrency = 0;
  EXPECT_THROW(LlmClient(bad, transport), Error);
  bad = fast_endpoint();
  bad.temperature = -1;
  EXPECT_THROW(check_endpoint(bad), Error);
}

TEST(LlmTest, NonJsonBodyIsSchemaMismatch) {
  auto transport =
      std::make_shared<ScriptedTransport>(std::vector{TransportResult::ok(200, "<html>")});
  LlmClient client(fast_endpoint(), transport);
  try {
    client.complete(reader_bundle());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(LlmTest, ConcurrencyIsBounded) {
  auto transport = std::make_shared<MockChatTransport>(
      [](const nlohmann::json&) { return std::string("[]"); }, std::chrono::milliseconds(20));
  auto endpoint = fast_endpoint();
  endpoint.max_concurrency = 3;
  LlmClient client(endpoint, transport);
  const auto bundle = reader_bundle();
  std::vector<std::jthread> threads;
  for (int i = 0; i < 12; ++i) threads.emplace_back([&] { client.complete(bundle); });
  threads.clear();
  EXPECT_EQ(transport->calls(), 12);
  EXPECT_LE(transport->peak_in_flight(), 3);
  EXPECT_GE(transport->peak_in_flight(), 2);
}

TEST(LlmTest, CacheHitSkipsTheService) {
  const auto dir = std::filesystem::temp_directory_path() / "sgsynth_llm_cache_test";
  std::filesystem::remove_all(dir);
  auto transport = std::make_shared<ScriptedTransport>(std::vector{
      TransportResult::ok(503, ""),
      TransportResult::ok(200, chat_response_body("cached text", "req-9"))});
  SleepLog sleeps;
  LlmClient client(fast_endpoint(), transport, ResponseCache(dir), sleeps.options());
  const auto bundle = reader_bundle();
  const auto first = client.complete(bundle);
  const auto second = client.complete(bundle);
  EXPECT_EQ(transport->paths.size(), 2u);
  EXPECT_FALSE(first.from_cache);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(second.text, "cached text");
  EXPECT_EQ(second.request_id, "req-9");
  EXPECT_EQ(second.attempt_count, 2);
  EXPECT_EQ(second.obtained_at, first.obtained_at);
  std::filesystem::remove_all(dir);
}

TEST(LlmTest, CacheKeyCoversInputs) {
  const auto bundle = reader_bundle();
  const auto e = fast_endpoint();
  const auto key = ResponseCache::key_for(bundle, e);
  EXPECT_EQ(key.size(), 64u);
  auto other = e;
  other.temperature = 0.2;
  EXPECT_NE(ResponseCache::key_for(bundle, other), key);
  other = e;
  other.model_name = "other";
  EXPECT_NE(ResponseCache::key_for(bundle, other), key);
  auto b2 = bundle;
  b2.template_checksum = std::string(64, '0');
  EXPECT_NE(ResponseCache::key_for(b2, e), key);
  other = e;
  other.base_url = "http://elsewhere";
  EXPECT_EQ(ResponseCache::key_for(bundle, other), key);
}

TEST(LlmTest, CompletionExtraction) {
  EXPECT_EQ(extract_completion_text(nlohmann::json::parse(chat_response_body("x", "i"))), "x");
  EXPECT_THROW(extract_completion_text(nlohmann::json::parse(R"({"choices": []})")), Error);
}

TEST(LlmTest, RealHttpServerWithBearer) {
  httplib::Server server;
  std::mutex mu;
  std::string auth;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu);
      auth = req.get_header_value("Authorization");
    }
    if (++hits == 1) {
      res.status = 502;
      return;
    }
    res.set_content(chat_response_body("hello", "srv-1"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto endpoint = fast_endpoint();
  endpoint.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  endpoint.auth_token = "tok";
  endpoint.timeout = std::chrono::milliseconds(5000);
  SleepLog sleeps;
  LlmClient client(endpoint, make_http_transport(endpoint.base_url, endpoint.timeout),
                   std::nullopt, sleeps.options());
  const auto response = client.complete(reader_bundle());
  server.stop();
  t.join();
  EXPECT_EQ(response.text, "hello");
  EXPECT_EQ(response.attempt_count, 2);
  EXPECT_EQ(auth, "Bearer tok");
}

}  // namespace
}  // namespace sgsynth
