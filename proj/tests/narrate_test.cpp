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

#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/geometry.hpp"
#include "sgsynth/narrate.hpp"
#include "sgsynth/prompt.hpp"
#include "sgsynth/roi.hpp"
#include "test_support.hpp"

namespace sgsynth {
namespace {

// Answers from a fixed table keyed by the rendered region.
class TableCaptioner : public Captioner {
 public:
  explicit TableCaptioner(std::map<std::string, std::string> table)
      : table_(std::move(table)) {}
  std::string caption(const CaptionRequest&, const CaptionContext& context) override {
    ++calls;
    const auto it = table_.find(context.region);
    if (it == table_.end()) throw Error(ErrorCode::kInvalidArgument, context.region);
    return it->second;
  }
  std::atomic<int> calls{0};

 private:
  std::map<std::string, std::string> table_;
};

// Keys as region sets: region order inside a merged key follows the shuffle.
std::set<std::pair<std::set<std::string>, std::string>> rendered(const CaptionSet& set) {
  std::set<std::pair<std::set<std::string>, std::string>> out;
  for (const auto& e : set.entries()) {
    std::set<std::string> regions;
    for (const auto& r : e.key.regions()) regions.insert(render_region(r));
    out.emplace(regions, e.text);
  }
  return out;
}

std::size_t region_total(const CaptionSet& set) {
  std::size_t n = 0;
  for (const auto& e : set.entries()) n += e.key.regions().size();
  return n;
}

TEST(NarrateTest, GroupingReproducesWorkedExample) {
  const auto entries = testing::reader_region_captions();
  const auto set = group_by_caption(entries);
  EXPECT_EQ(set, testing::reader_captions());
  ASSERT_EQ(set.size(), 7u);
  EXPECT_EQ(render_caption_key(set.entries().back().key),
            "global ; Union(person.2:[224, 60, 480, 483], person.6:[57, 143, 254, 638]) ; "
            "Union(tie.1:[269, 189, 293, 234], person.2:[224, 60, 480, 483]) ; "
            "Union(person.2:[224, 60, 480, 483], book.4:[246, 455, 375, 534])");
  EXPECT_EQ(region_total(set), entries.size());
}

TEST(NarrateTest, GenerateNarrativesOverReader) {
  std::map<std::string, std::string> table;
  for (const auto& [region, text] : testing::reader_region_captions()) {
    table[render_region(region)] = text;
  }
  TableCaptioner captioner(table);
  const auto record = testing::reader_record(false);
  const auto pairs = select_rois(record.objects(), 16, 11);
  ASSERT_EQ(pairs.size(), 9u);
  const auto set = generate_narratives(record, pairs, captioner);
  EXPECT_EQ(captioner.calls.load(), 10);
  EXPECT_EQ(set.size(), 7u);
  EXPECT_EQ(rendered(set), rendered(testing::reader_captions()));
  // The global region leads its merged key.
  for (const auto& e : set.entries()) {
    if (e.key.has_global()) {
      EXPECT_TRUE(is_global(e.key.regions().front()));
      EXPECT_EQ(e.key.regions().size(), 4u);
    }
  }
}

TEST(NarrateTest, TwoUnionsShareTextGlobalDistinct) {
  const auto o = testing::reader_objects();
  const std::vector<std::pair<Region, std::string>> entries{
      {GlobalRegion{}, "a room"},
      {PairRegion{o[2], o[3]}, "stacked books"},
      {PairRegion{o[3], o[4]}, " stacked books "}};
  const auto set = group_by_caption(entries);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.entries()[0].key.regions().size(), 1u);
  EXPECT_EQ(set.entries()[1].key.regions().size(), 2u);
  EXPECT_EQ(set.entries()[1].text, "stacked books");
}

TEST(NarrateTest, DistinctTextsGroupToIdentity) {
  const auto o = testing::reader_objects();
  const std::vector<std::pair<Region, std::string>> entries{
      {GlobalRegion{}, "a"}, {PairRegion{o[0], o[1]}, "b"}, {PairRegion{o[1], o[2]}, "c"}};
  const auto set = group_by_caption(entries);
  ASSERT_EQ(set.size(), 3u);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    EXPECT_EQ(set.entries()[i].key.regions(), std::vector<Region>{entries[i].first});
    EXPECT_EQ(set.entries()[i].text, entries[i].second);
  }
}

TEST(NarrateTest, GroupingIsIdempotent) {
  const auto first = group_by_caption(testing::reader_region_captions());
  std::vector<std::pair<Region, std::string>> flattened;
  for (const auto& e : first.entries()) {
    for (const auto& r : e.key.regions()) flattened.emplace_back(r, e.text);
  }
  EXPECT_EQ(group_by_caption(flattened), first);
}

TEST(NarrateTest, DuplicateRegionRejected) {
  const std::vector<std::pair<Region, std::string>> entries{{GlobalRegion{}, "a"},
                                                            {GlobalRegion{}, "b"}};
  EXPECT_THROW(group_by_caption(entries), Error);
}

TEST(NarrateTest, ZeroPairsGiveGlobalOnly) {
  MockCaptioner captioner;
  const auto record = testing::reader_record(false);
  const auto set = generate_narratives(record, {}, captioner);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_TRUE(set.entries()[0].key.has_global());
}

TEST(NarrateTest, MockCaptionerNeverMerges) {
  MockCaptioner captioner;
  const auto record = testing::reader_record(false);
  const auto pairs = select_rois(record.objects(), 16, 0);
  const auto set = generate_narratives(record, pairs, captioner, {8, {}});
  EXPECT_EQ(set.size(), pairs.size() + 1);
  EXPECT_EQ(region_total(set), pairs.size() + 1);
  EXPECT_TRUE(set.entries()[0].key.has_global());
}

TEST(NarrateTest, EmptyCaptionDropsOnlyThatRegion) {
  const auto o = testing::reader_objects();
  std::map<std::string, std::string> table{
      {"global", "people"},
      {render_region(PairRegion{o[0], o[1]}), "   "},
  };
  TableCaptioner captioner(table);
  const auto record = testing::reader_record(false);
  const std::vector<ObjectPair> pairs{{o[0], o[1], union_box(o[0].box(), o[1].box())}};
  const auto set = generate_narratives(record, pairs, captioner);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.entries()[0].text, "people");
}

TEST(NarrateTest, DatasetGlobalCaption) {
  const auto o = testing::reader_objects();
  const ImageRecord record("395890", 480, 640, o,
                           CaptionSet({{CaptionKey({GlobalRegion{}}), "from coco"}}));
  MockCaptioner captioner;
  const std::vector<ObjectPair> pairs{{o[0], o[1], union_box(o[0].box(), o[1].box())}};
  const auto set =
      generate_narratives(record, pairs, captioner, {1, GlobalCaptionSource::kDataset});
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.entries()[0].text, "from coco");
}

TEST(NarrateTest, CropRequests) {
  const ImageRecord record("img", 100, 50, {ObjectInstance("a", 1, BBox(0, 0, 10, 10))}, {},
                           "file:///data/img.jpg");
  const auto whole = make_caption_request(record, std::nullopt);
  EXPECT_EQ(whole.image_uri, "file:///data/img.jpg");
  EXPECT_FALSE(whole.crop);
  EXPECT_EQ(caption_request_body(whole), R"({"image_uri":"file:///data/img.jpg","crop":null})");
  const auto clamped = make_caption_request(record, BBox(90, 40, 120, 70));
  ASSERT_TRUE(clamped.crop);
  EXPECT_EQ(*clamped.crop, BBox(90, 40, 100, 50));
  EXPECT_THROW(make_caption_request(record, BBox(100, 0, 120, 10)), Error);
  const ImageRecord bare("img", 100, 50, {});
  EXPECT_EQ(make_caption_request(bare, std::nullopt).image_uri, "img");
}

class CaptionServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/caption", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits_;
      {
        std::lock_guard lock(mu_);
        auth_ = req.get_header_value("Authorization");
        last_body_ = req.body;
      }
      if (n <= fail_first_) {
        res.status = 503;
        return;
      }
      if (reject_) {
        res.status = 400;
        return;
      }
      res.set_content(R"({"caption": "a man wearing a suit"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  CaptionerEndpoint endpoint() const {
    CaptionerEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_);
    e.timeout = std::chrono::milliseconds(5000);
    e.auth_token = "secret";
    e.retry.backoff_base = std::chrono::milliseconds(1);
    return e;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  int fail_first_ = 0;
  bool reject_ = false;
  std::mutex mu_;
  std::string auth_, last_body_;
};

TEST_F(CaptionServer, SuccessAfterRetries) {
  fail_first_ = 2;
  HttpCaptioner captioner(endpoint());
  const ImageRecord record("img", 100, 50, {});
  const auto text = captioner.caption(make_caption_request(record, BBox(1, 2, 3, 4)),
                                      {"img", "Union(...)"});
  EXPECT_EQ(text, "a man wearing a suit");
  EXPECT_EQ(hits_.load(), 3);
  std::lock_guard lock(mu_);
  EXPECT_EQ(auth_, "Bearer secret");
  const auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["image_uri"], "img");
  EXPECT_EQ(body["crop"], nlohmann::json({1.0, 2.0, 3.0, 4.0}));
}

TEST_F(CaptionServer, ExhaustedRetriesAreUnavailable) {
  fail_first_ = 100;
  HttpCaptioner captioner(endpoint());
  try {
    captioner.caption({"img", std::nullopt}, {"img", "global"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCaptionServiceUnavailable);
  }
  EXPECT_EQ(hits_.load(), 4);
}

TEST_F(CaptionServer, ClientErrorIsNotRetried) {
  reject_ = true;
  HttpCaptioner captioner(endpoint());
  EXPECT_THROW(captioner.caption({"img", std::nullopt}, {"img", "global"}), Error);
  EXPECT_EQ(hits_.load(), 1);
}

TEST(NarrateHttpTest, UnreachableServiceIsUnavailable) {
  CaptionerEndpoint e;
  e.base_url = "http://127.0.0.1:1";
  e.timeout = std::chrono::milliseconds(500);
  e.retry = {1, std::chrono::milliseconds(1)};
  HttpCaptioner captioner(e);
  try {
    captioner.caption({"img", std::nullopt}, {"img", "global"});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kCaptionServiceUnavailable);
  }
}

}  // namespace
}  // namespace sgsynth
