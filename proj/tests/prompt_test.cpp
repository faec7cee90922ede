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

#include "sgsynth/error.hpp"
#include "sgsynth/hash.hpp"
#include "sgsynth/prompt.hpp"
#include "test_support.hpp"

namespace sgsynth {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(PromptTest, InContextInputGolden) {
  const std::vector<ImageRecord> records{testing::incontext_record()};
  EXPECT_EQ(render_input(std::span<const ImageRecord>(records)),
            testing::read_data("golden/incontext_example_input.txt"));
}

TEST(PromptTest, ReaderInputGolden) {
  const std::vector<ImageRecord> records{testing::reader_record()};
  EXPECT_EQ(render_input(std::span<const ImageRecord>(records)),
            testing::read_data("golden/reader_example_input.txt"));
}

TEST(PromptTest, ObjectEntries) {
  EXPECT_EQ(render_object_entry(ObjectInstance("tie", 1, BBox(217, 409, 233, 436))),
            "tie.1:[217, 409, 233, 436]");
  EXPECT_EQ(render_object_entry(ObjectInstance("person", 3, BBox(119, 289, 300, 523))),
            "person.3:[119, 289, 300, 523]");
  EXPECT_EQ(render_box(BBox(1.4, 0.5, 2.5, 3.49)), "[1, 1, 3, 3]");
}

TEST(PromptTest, CaptionKeys) {
  const auto r = testing::incontext_record();
  const auto& o = r.objects();
  EXPECT_EQ(render_caption_key(CaptionKey({PairRegion{o[0], o[1]}})),
            "Union(tie.1:[217, 409, 233, 436], tie.2:[212, 409, 233, 507])");
  EXPECT_EQ(render_caption_key(CaptionKey({GlobalRegion{}})), "global");
  const auto t2 = testing::reader_objects();
  EXPECT_EQ(render_caption_key(CaptionKey({GlobalRegion{}, PairRegion{t2[1], t2[5]}})),
            "global ; Union(person.2:[224, 60, 480, 483], person.6:[57, 143, 254, 638])");
}

TEST(PromptTest, MultipleRecordsFormAList) {
  const std::vector<ImageRecord> records{testing::incontext_record(), testing::reader_record()};
  const auto text = render_input(std::span<const ImageRecord>(records));
  EXPECT_EQ(text, "[" + testing::read_data("golden/incontext_example_input.txt") + ", " +
                      testing::read_data("golden/reader_example_input.txt") + "]");
}

TEST(PromptTest, MissingCaptions) {
  const std::vector<ImageRecord> records{testing::reader_record(false)};
  EXPECT_EQ(code_of([&] { render_input(std::span<const ImageRecord>(records)); }),
            ErrorCode::kMissingCaptions);
}

TEST(PromptTest, BuiltinTemplateAnchors) {
  const auto tmpl = PromptTemplate::builtin();
  EXPECT_EQ(tmpl.id(), "sgg_v1");
  const std::vector<ImageRecord> records{testing::reader_record()};
  const auto bundle = build_prompt(std::span<const ImageRecord>(records), tmpl);
  ASSERT_EQ(bundle.messages.size(), 2u);
  EXPECT_EQ(bundle.messages[0].role, Role::kSystem);
  EXPECT_EQ(bundle.messages[1].role, Role::kUser);
  EXPECT_TRUE(bundle.messages[0].content.starts_with("You are a helpful AI visual assistant."));
  const auto& user = bundle.messages[1].content;
  EXPECT_TRUE(user.starts_with("Extract relationship triplets from image data"));
  for (const char* req : {"1. ", "2. ", "3. Maintain logical consistency", "4. ", "5. "}) {
    EXPECT_NE(user.find(std::string("\n") + req), std::string::npos) << req;
  }
  EXPECT_TRUE(user.ends_with("### Output:"));
  const auto at = user.find(bundle.rendered_input);
  ASSERT_NE(at, std::string::npos);
  EXPECT_LT(at, user.rfind("### Output:"));
  EXPECT_GT(at, user.rfind("### Input:"));
  EXPECT_EQ(bundle.image_ids, std::vector<std::string>{"395890"});
  EXPECT_EQ(bundle.template_checksum, tmpl.checksum());
}

TEST(PromptTest, TemplateMatchesAssets) {
  const auto builtin = PromptTemplate::builtin();
  const auto loaded = PromptTemplate::load(SGSYNTH_ASSET_DIR, "sgg_v1");
  EXPECT_EQ(builtin.system_text(), loaded.system_text());
  EXPECT_EQ(builtin.user_text(), loaded.user_text());
  EXPECT_EQ(builtin.checksum(),
            sha256_hex(builtin.system_text() + std::string(1, '\0') + builtin.user_text()));
  EXPECT_EQ(builtin.checksum().size(), 64u);
}

TEST(PromptTest, TemplateValidation) {
  EXPECT_EQ(code_of([] { PromptTemplate("x", "sys", "no placeholder"); }),
            ErrorCode::kTemplateError);
  EXPECT_EQ(code_of([] { PromptTemplate("x", "sys", "{Input} {Input}"); }),
            ErrorCode::kTemplateError);
  EXPECT_EQ(code_of([] { PromptTemplate::load("/nonexistent", "sgg_v1"); }),
            ErrorCode::kTemplateError);
  EXPECT_EQ(PromptTemplate("x", "s", "<{Input}>").instantiate("abc"), "<abc>");
}

TEST(PromptTest, BatchLimits) {
  const auto tmpl = PromptTemplate::builtin();
  std::vector<ImageRecord> records;
  for (int i = 0; i < 5; ++i) {
    records.emplace_back(std::to_string(i), 480, 640, testing::reader_objects(),
                         testing::reader_captions());
  }
  EXPECT_EQ(code_of([&] { build_prompt(std::span<const ImageRecord>(records), tmpl, 4); }),
            ErrorCode::kBatchTooLarge);
  EXPECT_NO_THROW(build_prompt(std::span<const ImageRecord>(records), tmpl, 5));
  EXPECT_EQ(code_of([&] { build_prompt(std::span<const ImageRecord>(), tmpl, 4); }),
            ErrorCode::kInvalidArgument);
  records[1] = records[0];
  EXPECT_EQ(code_of([&] { build_prompt(std::span<const ImageRecord>(records), tmpl, 5); }),
            ErrorCode::kInvalidArgument);
}

TEST(PromptTest, RenderInputIsInjective) {
  std::mt19937_64 rng(31);
  std::set<std::string> seen_inputs, seen_outputs;
  for (int i = 0; i < 300; ++i) {
    auto entry = testing::random_entry(rng, i % 7);
    const std::vector<RenderedRecord> one{entry.input};
    const auto out = render_input(std::span<const RenderedRecord>(one));
    nlohmann::json identity = {entry.input.image_id, entry.input.width, entry.input.height,
                               entry.input.objects, entry.input.captions};
    const bool new_input = seen_inputs.insert(identity.dump()).second;
    const bool new_output = seen_outputs.insert(out).second;
    EXPECT_EQ(new_input, new_output);
  }
}

TEST(PromptTest, EscapesCaptionText) {
  RenderedRecord r{"1", 10, 10, {"a.1:[0, 0, 1, 1]"}, {{"global", "say \"hi\"\n"}}};
  const std::vector<RenderedRecord> one{r};
  EXPECT_EQ(render_input(std::span<const RenderedRecord>(one)),
            R"({"image_id": "1", "width": 10, "height": 10, "objects": ["a.1:[0, 0, 1, 1]"], )"
            R"("captions": {"global": "say \"hi\"\n"}})");
}

}  // namespace
}  // namespace sgsynth
