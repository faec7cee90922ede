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

// Acceptance suite: runs each criterion at its stated tolerance and time
// bound and prints one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "sgsynth/cli.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/geometry.hpp"
#include "sgsynth/graph.hpp"
#include "sgsynth/log.hpp"
#include "sgsynth/roi.hpp"
#include "test_support.hpp"

namespace sgsynth {
namespace {

namespace fs = std::filesystem;

// Collects failed checks for one criterion.
struct Checker {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
    if (!ok) ++failed;
  }
  int failed = 0;
};

struct Criterion {
  int number;
  std::string title;
  double time_limit_s;
  std::function<void(Checker&)> run;
};

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sgsynth_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void prompt_goldens(Checker& c) {
  const std::vector<ImageRecord> t1{testing::incontext_record()};
  const std::vector<ImageRecord> t2{testing::reader_record()};
  c.expect(render_input(std::span<const ImageRecord>(t1)) ==
               testing::read_data("golden/incontext_example_input.txt"),
           "in-context example input differs from golden");
  c.expect(render_input(std::span<const ImageRecord>(t2)) ==
               testing::read_data("golden/reader_example_input.txt"),
           "reader example input differs from golden");
  const auto bundle = build_prompt(std::span<const ImageRecord>(t2), PromptTemplate::builtin());
  c.expect(bundle.messages.size() == 2, "bundle must hold system and user messages");
  c.expect(bundle.messages[0].content.starts_with("You are a helpful AI visual assistant."),
           "system anchor phrase missing");
  c.expect(bundle.messages[1].content.find("Maintain logical consistency") != std::string::npos,
           "user anchor phrase missing");
  c.expect(bundle.messages[1].content.ends_with("### Output:"), "user prompt must end at Output");
}

// Independent positive-overlap test on coordinates (no IoU arithmetic).
bool overlaps(const BBox& a, const BBox& b) {
  return std::max(a.x1(), b.x1()) < std::min(a.x2(), b.x2()) &&
         std::max(a.y1(), b.y1()) < std::min(a.y2(), b.y2());
}

void roi_oracle(Checker& c) {
  using KeyPair = std::pair<std::string, std::string>;
  auto check = [&](const std::vector<ObjectInstance>& objects, int n_max, std::uint64_t seed,
                   const std::string& label) {
    std::set<KeyPair> oracle;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      for (std::size_t j = i + 1; j < objects.size(); ++j) {
        if (overlaps(objects[i].box(), objects[j].box())) {
          oracle.emplace(render_object_key(objects[i]), render_object_key(objects[j]));
        }
      }
    }
    const auto rois = select_rois(objects, n_max, seed);
    std::set<KeyPair> got;
    for (const auto& p : rois) got.emplace(render_object_key(p.first), render_object_key(p.second));
    c.expect(got.size() == rois.size(), label + ": duplicate pair");
    c.expect(rois.size() == std::min<std::size_t>(oracle.size(), n_max), label + ": wrong count");
    if (oracle.size() <= static_cast<std::size_t>(n_max)) {
      c.expect(got == oracle, label + ": set differs from oracle");
    } else {
      c.expect(std::includes(oracle.begin(), oracle.end(), got.begin(), got.end()),
               label + ": output not within oracle");
    }
    return got;
  };
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<int> count(0, 20), n_max(1, 40);
  for (int i = 0; i < 500; ++i) {
    check(testing::random_objects(rng, count(rng), 200), n_max(rng), rng(),
          "image " + std::to_string(i));
  }
  const auto reader = check(testing::reader_objects(), 15, 0, "reader fixture");
  const std::set<KeyPair> nine{
      {"tie.1", "person.2"},   {"person.2", "book.3"}, {"person.2", "book.4"},
      {"person.2", "person.6"}, {"book.3", "book.4"}, {"book.3", "book.5"},
      {"book.4", "book.5"},    {"book.4", "person.6"}, {"book.5", "person.6"}};
  c.expect(reader == nine, "reader fixture does not yield the 9 derived pairs");
}

void geometry_oracle(Checker& c) {
  std::mt19937_64 rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const BBox a = testing::random_int_box(rng, 64);
    const BBox b = testing::random_int_box(rng, 64);
    const auto r = testing::rasterize(a, b);
    c.expect(std::abs(area(a) - r.area_a) <= 1e-9, "area differs from raster");
    c.expect(std::abs(area(b) - r.area_b) <= 1e-9, "area differs from raster");
    c.expect(std::abs(intersection(a, b) - r.inter) <= 1e-9, "intersection differs");
    c.expect(std::abs(iou(a, b) - r.iou()) <= 1e-9, "IoU differs from raster");
  }
  c.expect(iou(BBox(269, 189, 293, 234), BBox(224, 60, 480, 483)) == 1080.0 / 108288.0,
           "tie.1/person.2 IoU is not 1080/108288");
}

void parser_fixtures(Checker& c) {
  const auto t2 = parse_response(testing::read_data("fixtures/reader_response.txt"));
  c.expect(t2.size() == 1 && t2[0].triplets.size() == 7, "reader response: 7 triplets");
  const auto rules = default_exclusivity_rules();
  if (t2.size() == 1) {
    const auto report = validate(t2[0], testing::reader_record(), rules);
    c.expect(report.accepted.triplets.size() == 7 && report.rejected.empty(),
             "reader response: all 7 accepted");
  }
  const auto t1 = parse_response(testing::read_data("fixtures/incontext_example_output.txt"));
  c.expect(t1.size() == 2 && t1[0].triplets.size() == 4 && t1[1].triplets.size() == 1,
           "in-context example output: 2 graphs with 4 + 1 triplets");
  const SceneGraph two_wearers{
      "395890",
      {{"person.2", "tie.1", "wearing", {}}, {"person.6", "tie.1", "wearing", {}}}};
  const auto report = validate(two_wearers, testing::reader_record(), rules);
  c.expect(report.rejected.size() == 1 &&
               report.rejected[0].reason == RejectReason::kExclusivityViolation,
           "two wearers: exactly one ExclusivityViolation");

  std::mt19937_64 rng(4);
  const std::string base = testing::read_data("fixtures/reader_response.txt");
  const std::string alphabet = "{}[]\",:\\ abn0.e-";
  std::uniform_int_distribution<int> op(0, 3), ch(0, static_cast<int>(alphabet.size()) - 1),
      edits(1, 16);
  int malformed = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string text = base;
    for (int e = edits(rng); e > 0; --e) {
      std::uniform_int_distribution<std::size_t> pos(0, text.size());
      const auto p = pos(rng);
      switch (op(rng)) {
        case 0: text.insert(p, 1, alphabet[ch(rng)]); break;
        case 1: if (p < text.size()) text.erase(p, 1); break;
        case 2: text.resize(p); break;
        default: if (p < text.size()) text[p] = static_cast<char>(rng() & 0xff); break;
      }
    }
    try {
      parse_response(text);
    } catch (const Error& e) {
      ++malformed;
      c.expect(e.code() == ErrorCode::kMalformedJson || e.code() == ErrorCode::kSchemaMismatch,
               "fuzz: unexpected error code " + std::string(to_string(e.code())));
    } catch (const std::exception& e) {
      c.expect(false, std::string("fuzz: foreign exception ") + e.what());
    }
  }
  c.expect(malformed > 0, "fuzz produced no malformed inputs");
}

TripletsByImage random_eval_instance(std::mt19937_64& rng) {
  static const char* kRel[] = {"on", "near", "wearing"};
  std::uniform_int_distribution<int> images(1, 4), count(0, 120), cell(0, 30), rel(0, 2),
      grid(0, 1000);
  TripletsByImage out;
  for (int i = images(rng); i > 0; --i) {
    auto& v = out[std::to_string(i)];
    for (int j = count(rng); j > 0; --j) {
      const double x0 = 100.0 * cell(rng);
      v.push_back({"person", BBox(x0 + 10, 10, x0 + 50, 90), "cup",
                   BBox(x0 + 40, 40, x0 + 80, 80), kRel[rel(rng)], grid(rng) / 1000.0});
    }
  }
  out["1"].push_back({"person", BBox(10, 10, 50, 90), "cup", BBox(40, 40, 80, 80), "on", 1.0});
  return out;
}

void eval_correctness(Checker& c) {
  const std::vector<int> ks{20, 50, 100};
  const auto objects = testing::reader_objects();
  TripletsByImage exact;
  for (const auto& t : testing::reader_relationships()) {
    const auto& s = parse_object_key(t.source, objects);
    const auto& o = parse_object_key(t.target, objects);
    exact["395890"].push_back({s.category(), s.box(), o.category(), o.box(), t.relation, 1.0});
  }
  const auto exact_report = recall_at_k(exact, exact, ks);
  for (int k : ks) c.expect(exact_report.per_k.at(k) == 1.0, "exact match R@K != 1");

  std::mt19937_64 rng(200);
  for (int i = 0; i < 200; ++i) {
    const auto gts = random_eval_instance(rng);
    const auto preds = random_eval_instance(rng);
    const auto r = recall_at_k(preds, gts, ks);
    c.expect(r.per_k.at(20) <= r.per_k.at(50) && r.per_k.at(50) <= r.per_k.at(100),
             "R@K not monotone");
    c.expect(r.mean_per_k.at(20) <= r.mean_per_k.at(50) &&
                 r.mean_per_k.at(50) <= r.mean_per_k.at(100),
             "mR@K not monotone");
    auto scaled = preds;
    for (auto& [id, v] : scaled) {
      for (auto& t : v) t.confidence *= 0.37;
    }
    c.expect(recall_report_json(recall_at_k(scaled, gts, ks)) == recall_report_json(r),
             "report changed under confidence rescaling");
  }
  for (int i = 0; i < 200; ++i) {
    const auto [preds, gts] = testing::unambiguous_instance(rng, 8);
    c.expect(match_triplets(preds, gts).size() == testing::max_matching(preds, gts, {}),
             "greedy differs from optimal matching");
  }
}

void statistics(Checker& c) {
  const std::vector<PseudoLabelEntry> one{
      {render_record(testing::reader_record()), testing::reader_relationships(), {}}};
  const auto hist = predicate_stats(one);
  c.expect(hist.counts == std::map<std::string, std::int64_t>{{"near", 4}, {"on", 2}, {"wearing", 1}},
           "reader histogram is not {near:4, on:2, wearing:1}");
  c.expect(hist.total == 7, "reader histogram total is not 7");
  std::mt19937_64 rng(100);
  for (int i = 0; i < 100; ++i) {
    const auto corpus = testing::random_corpus(rng, 15);
    std::int64_t n = 0;
    for (const auto& e : corpus) n += static_cast<std::int64_t>(e.relationships.size());
    const auto h = predicate_stats(corpus);
    std::int64_t summed = 0;
    for (const auto& [p, k] : h.counts) summed += k;
    c.expect(h.total == n && summed == n, "histogram total differs from triplet count");
  }
}

// Ten images of two to five overlapping objects each.
nlohmann::json toy_coco() {
  std::mt19937_64 rng(10);
  nlohmann::json doc;
  doc["categories"] = {{{"id", 1}, {"name", "person"}}, {{"id", 2}, {"name", "cup"}},
                       {{"id", 3}, {"name", "dining table"}}};
  doc["images"] = nlohmann::json::array();
  doc["annotations"] = nlohmann::json::array();
  std::uniform_int_distribution<int> n(2, 5), cat(1, 3), pos(0, 120), size(40, 140);
  int ann = 0;
  for (int i = 0; i < 10; ++i) {
    const int id = 1000 + i * 37;
    doc["images"].push_back({{"id", id}, {"width", 320}, {"height", 240},
                             {"file_name", std::to_string(id) + ".jpg"}});
    for (int k = n(rng); k > 0; --k) {
      doc["annotations"].push_back({{"id", ++ann}, {"image_id", id}, {"category_id", cat(rng)},
                                    {"bbox", {pos(rng), pos(rng), size(rng), size(rng)}}});
    }
  }
  return doc;
}

void end_to_end(Checker& c) {
  const auto dir = scratch_dir("e2e");
  write_text_file_atomic(dir / "coco.json", toy_coco().dump());
  write_text_file_atomic(dir / "cfg.json",
                         nlohmann::json{{"seed", 42},
                                        {"captioner", {{"mock", true}}},
                                        {"llm", {{"max_concurrency", 3}}},
                                        {"paths",
                                         {{"annotations", "coco.json"},
                                          {"cache_dir", "cache"}}}}
                             .dump());
  auto synth = [&](const std::string& tag) {
    std::ostringstream out;
    const int code = run_cli({"--log-level", "error", "synth", "--config",
                              (dir / "cfg.json").string(), "--mock-llm-heuristic", "--batch-size", "3", "--out",
                              (dir / (tag + ".corpus.jsonl")).string(), "--instructions",
                              (dir / (tag + ".instructions.jsonl")).string()},
                             out);
    c.expect(code == kExitOk, tag + ": synth exit " + std::to_string(code) + " " + out.str());
  };
  synth("first");
  synth("second");
  const auto corpus1 = read_text_file(dir / "first.corpus.jsonl");
  const auto corpus2 = read_text_file(dir / "second.corpus.jsonl");
  const auto instr1 = read_text_file(dir / "first.instructions.jsonl");
  const auto instr2 = read_text_file(dir / "second.instructions.jsonl");
  c.expect(std::count(corpus1.begin(), corpus1.end(), '\n') == 10, "corpus must hold 10 lines");
  c.expect(!corpus1.empty() && corpus1 == corpus2, "pseudo-label files differ between runs");
  c.expect(!instr1.empty() && instr1 == instr2, "instruction files differ between runs");
  std::size_t triplets = 0;
  for (const auto& e : read_pseudo_labels(dir / "first.corpus.jsonl")) {
    triplets += e.relationships.size();
  }
  c.expect(triplets > 0, "heuristic LLM produced no triplets");
  fs::remove_all(dir);
}

void round_trips(Checker& c) {
  const auto dir = scratch_dir("roundtrip");
  const auto tmpl = PromptTemplate::builtin();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto corpus = testing::random_corpus(rng, 12);
    write_pseudo_labels(corpus, dir / "a.jsonl");
    const auto back = read_pseudo_labels(dir / "a.jsonl");
    write_pseudo_labels(back, dir / "b.jsonl");
    c.expect(back == corpus, "pseudo-label values changed");
    c.expect(read_text_file(dir / "a.jsonl") == read_text_file(dir / "b.jsonl"),
             "pseudo-label bytes changed");
    std::vector<InstructionPair> pairs;
    for (const auto& e : corpus) pairs.push_back(make_instruction_pair(e, tmpl));
    write_instruction_pairs(pairs, dir / "i.jsonl");
    const auto pairs_back = read_instruction_pairs(dir / "i.jsonl");
    write_instruction_pairs(pairs_back, dir / "j.jsonl");
    c.expect(pairs_back == pairs, "instruction values changed");
    c.expect(read_text_file(dir / "i.jsonl") == read_text_file(dir / "j.jsonl"),
             "instruction bytes changed");
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace sgsynth

int main() {
  using namespace sgsynth;
  set_log_level(LogLevel::kError);
  const std::vector<Criterion> criteria{
      {1, "prompt goldens and anchor phrases", 1.0, prompt_goldens},
      {2, "RoI selection equals brute-force oracle", 5.0, roi_oracle},
      {3, "geometry equals rasterization oracle", 5.0, geometry_oracle},
      {4, "parser and validator fixtures, fuzzing", 5.0, parser_fixtures},
      {5, "evaluation correctness properties", 10.0, eval_correctness},
      {6, "predicate statistics", 10.0, statistics},
      {7, "end-to-end synth determinism", 10.0, end_to_end},
      {8, "corpus and instruction round-trips", 10.0, round_trips},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Checker checker;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(checker);
    } catch (const std::exception& e) {
      checker.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    checker.expect(seconds < criterion.time_limit_s, "exceeded time limit");
    const bool pass = checker.failed == 0;
    failed += !pass;
    std::printf("%s criterion %d: %s (%.3f s, limit %.0f s)\n", pass ? "PASS" : "FAIL",
                criterion.number, criterion.title.c_str(), seconds, criterion.time_limit_s);
    for (const auto& f : checker.failures) std::printf("     %s\n", f.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
