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

#include "sgsynth/cli.hpp"

#include <cstdlib>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sgsynth/config.hpp"
#include "sgsynth/dataset.hpp"
#include "sgsynth/error.hpp"
#include "sgsynth/eval.hpp"
#include "sgsynth/graph.hpp"
#include "sgsynth/io.hpp"
#include "sgsynth/llm.hpp"
#include "sgsynth/log.hpp"
#include "sgsynth/narrate.hpp"
#include "sgsynth/pipeline.hpp"
#include "sgsynth/prompt.hpp"
#include "sgsynth/roi.hpp"

namespace sgsynth {

namespace {

using ojson = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string log_level = "info";

  std::string annotations, captions, image_root, records, out, response;
  std::string corpus, gt, pred, report_out, table_out, cache_dir, instructions;
  std::string mock_llm, template_dir, template_id, captioner_url, global_source;
  std::string ks, mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_max, batch_size;
  std::optional<double> iou;
  int top = 10;
  bool mock_captioner = false;
  bool mock_llm_heuristic = false;
};

[[noreturn]] void usage_error(const std::string& what) {
  throw Error(ErrorCode::kConfigError, what);
}

std::filesystem::path require(const std::string& flag_value,
                              const std::optional<std::filesystem::path>& from_config,
                              const std::string& flag) {
  if (!flag_value.empty()) return flag_value;
  if (from_config) return *from_config;
  usage_error(flag + " is required");
}

PipelineConfig base_config(const Options& o) {
  PipelineConfig cfg = o.config.empty()
                           ? config_from_json(nlohmann::json::object(), ".")
                           : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_max) {
    if (*o.n_max < 1) usage_error("--n-max must be at least 1");
    cfg.n_max_rois = *o.n_max;
  }
  if (o.batch_size) {
    if (*o.batch_size < 1) usage_error("--batch-size must be at least 1");
    cfg.batch_size = *o.batch_size;
  }
  if (!o.template_dir.empty()) cfg.paths.template_dir = o.template_dir;
  if (!o.template_id.empty()) cfg.template_id = o.template_id;
  if (!o.captioner_url.empty()) cfg.captioner.endpoint.base_url = o.captioner_url;
  if (o.mock_captioner) cfg.captioner.mock = true;
  if (!o.global_source.empty()) {
    if (o.global_source == "service") {
      cfg.captioner.global_source = GlobalCaptionSource::kService;
    } else if (o.global_source == "dataset") {
      cfg.captioner.global_source = GlobalCaptionSource::kDataset;
    } else {
      usage_error("--global-source must be service or dataset");
    }
  }
  if (!o.cache_dir.empty()) cfg.paths.cache_dir = o.cache_dir;
  if (!o.out.empty()) cfg.paths.output_corpus = o.out;
  if (!o.instructions.empty()) cfg.paths.instructions = o.instructions;
  return cfg;
}

std::unique_ptr<Captioner> make_captioner(const PipelineConfig& cfg) {
  if (cfg.captioner.mock) return std::make_unique<MockCaptioner>();
  if (cfg.captioner.endpoint.base_url.empty()) {
    usage_error("captioner.base_url is not configured (or pass --mock-captioner)");
  }
  return std::make_unique<HttpCaptioner>(cfg.captioner.endpoint);
}

NarrationOptions narration_options(const PipelineConfig& cfg) {
  return {cfg.captioner.endpoint.max_concurrency, cfg.captioner.global_source};
}

std::vector<ImageRecord> load_input_records(const Options& o, const PipelineConfig& cfg) {
  std::vector<ImageRecord> records;
  if (!o.records.empty() || (o.annotations.empty() && cfg.paths.records)) {
    const auto path = o.records.empty() ? *cfg.paths.records : std::filesystem::path(o.records);
    for (auto& line : read_records(path)) records.push_back(std::move(line.record));
    return records;
  }
  IngestOptions ingest;
  if (!o.captions.empty()) {
    ingest.captions_file = o.captions;
  } else if (cfg.paths.captions) {
    ingest.captions_file = *cfg.paths.captions;
  }
  ingest.image_root = o.image_root.empty() ? cfg.captioner.image_root : o.image_root;
  return ingest_coco(require(o.annotations, cfg.paths.annotations, "--annotations"), ingest)
      .records;
}

std::vector<int> parse_ks(const std::string& text) {
  std::vector<int> ks;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int k = std::stoi(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      ks.push_back(k);
    } catch (const std::exception&) {
      usage_error("--k expects comma-separated positive integers");
    }
  }
  if (ks.empty()) usage_error("--k expects at least one value");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

int cmd_ingest(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  IngestOptions ingest;
  if (!o.captions.empty()) {
    ingest.captions_file = o.captions;
  } else if (cfg.paths.captions) {
    ingest.captions_file = *cfg.paths.captions;
  }
  ingest.image_root = o.image_root.empty() ? cfg.captioner.image_root : o.image_root;
  const auto result =
      ingest_coco(require(o.annotations, cfg.paths.annotations, "--annotations"), ingest);
  if (o.out.empty()) usage_error("--out is required");
  std::vector<RecordLine> lines;
  std::size_t objects = 0;
  for (const auto& r : result.records) {
    objects += r.objects().size();
    lines.push_back({r, std::nullopt});
  }
  write_records(lines, o.out);
  summary["images"] = result.records.size();
  summary["objects"] = objects;
  summary["sparse_images"] = result.sparse_image_ids.size();
  summary["clamped_boxes"] = result.clamped_boxes;
  summary["dropped_boxes"] = result.dropped_boxes;
  summary["out"] = o.out;
  return kExitOk;
}

int cmd_select_rois(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  if (o.out.empty()) usage_error("--out is required");
  auto lines = read_records(require(o.records, cfg.paths.records, "--records"));
  std::size_t pairs = 0;
  for (auto& line : lines) {
    line.rois = select_rois(line.record.objects(), cfg.n_max_rois,
                            image_seed(cfg.seed, line.record.image_id()));
    pairs += line.rois->size();
  }
  write_records(lines, o.out);
  summary["images"] = lines.size();
  summary["pairs"] = pairs;
  summary["seed"] = cfg.seed;
  summary["n_max_rois"] = cfg.n_max_rois;
  summary["out"] = o.out;
  return kExitOk;
}

int cmd_narrate(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  if (o.out.empty()) usage_error("--out is required");
  auto captioner = make_captioner(cfg);
  auto lines = read_records(require(o.records, cfg.paths.records, "--records"));
  std::size_t captions = 0, failed = 0;
  std::vector<RecordLine> out;
  for (auto& line : lines) {
    const auto pairs = line.rois ? *line.rois
                                 : select_rois(line.record.objects(), cfg.n_max_rois,
                                               image_seed(cfg.seed, line.record.image_id()));
    try {
      auto set = generate_narratives(line.record, pairs, *captioner, narration_options(cfg));
      captions += set.size();
      out.push_back({line.record.with_captions(std::move(set)), pairs});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCaptionServiceUnavailable) throw;
      ++failed;
      log_event(LogLevel::kError, "narration_failed",
                {{"image_id", line.record.image_id()}, {"message", e.what()}});
    }
  }
  write_records(out, o.out);
  summary["images"] = out.size();
  summary["failed"] = failed;
  summary["caption_keys"] = captions;
  summary["out"] = o.out;
  return failed ? kExitValidationFailures : kExitOk;
}

int cmd_prompt(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  if (o.out.empty()) usage_error("--out is required");
  const auto tmpl = resolve_template(cfg);
  const auto lines = read_records(require(o.records, cfg.paths.records, "--records"));
  std::string text;
  std::size_t prompts = 0;
  for (std::size_t i = 0; i < lines.size(); i += cfg.batch_size) {
    std::vector<ImageRecord> batch;
    for (std::size_t j = i; j < std::min(lines.size(), i + cfg.batch_size); ++j) {
      batch.push_back(lines[j].record);
    }
    const auto bundle = build_prompt(std::span<const ImageRecord>(batch), tmpl, cfg.batch_size);
    ojson line;
    line["image_ids"] = bundle.image_ids;
    line["template_id"] = tmpl.id();
    line["template_checksum"] = bundle.template_checksum;
    line["cache_key"] = ResponseCache::key_for(bundle, cfg.llm);
    line["request"] = chat_request_json(bundle, cfg.llm);
    text += line.dump(-1, ' ', false, ojson::error_handler_t::replace) + "\n";
    ++prompts;
  }
  write_text_file_atomic(o.out, text);
  summary["prompts"] = prompts;
  summary["template_checksum"] = tmpl.checksum();
  summary["out"] = o.out;
  return kExitOk;
}

int cmd_synth(const Options& o, ojson& summary) {
  auto cfg = base_config(o);
  const auto tmpl = resolve_template(cfg);
  auto records = load_input_records(o, cfg);
  auto captioner = make_captioner(cfg);

  std::shared_ptr<HttpTransport> transport;
  if (!o.mock_llm.empty()) {
    transport = std::make_shared<MockChatTransport>(fixed_mock_responder(read_text_file(o.mock_llm)));
  } else if (o.mock_llm_heuristic) {
    transport = std::make_shared<MockChatTransport>(heuristic_mock_responder(tmpl));
  } else {
    if (cfg.llm.base_url.empty()) {
      usage_error("llm.base_url is not configured (or pass --mock-llm)");
    }
    transport = make_http_transport(cfg.llm.base_url, cfg.llm.timeout);
  }
  std::optional<ResponseCache> cache;
  if (cfg.paths.cache_dir) cache.emplace(*cfg.paths.cache_dir);
  LlmClient client(cfg.llm, transport, cache);

  SynthSettings settings;
  settings.seed = cfg.seed;
  settings.n_max_rois = cfg.n_max_rois;
  settings.batch_size = cfg.batch_size;
  settings.narration = narration_options(cfg);
  settings.rules = cfg.exclusivity_rules;
  if (!cfg.paths.output_corpus) usage_error("--out or paths.output_corpus is required");
  settings.output_corpus = *cfg.paths.output_corpus;
  settings.instructions = cfg.paths.instructions;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    try {
      settings.fixed_timestamp = std::stoll(epoch);
    } catch (const std::exception&) {
      usage_error("SOURCE_DATE_EPOCH must be an integer");
    }
  }
  const auto result = run_synth(records, settings, *captioner, client, tmpl);
  const auto result_json = result.to_json();
  for (const auto& [key, value] : result_json.items()) summary[key] = value;
  summary["out"] = settings.output_corpus.string();
  return (result.failed || result.triplets_rejected) ? kExitValidationFailures : kExitOk;
}

int cmd_validate(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  if (o.response.empty()) usage_error("--response is required");
  const auto lines = read_records(require(o.records, cfg.paths.records, "--records"));
  const auto graphs = parse_response(read_text_file(o.response));
  std::size_t accepted = 0, rejected = 0, unmatched = 0;
  ojson details = ojson::array();
  for (const auto& graph : graphs) {
    const auto it = std::find_if(lines.begin(), lines.end(), [&](const auto& l) {
      return l.record.image_id() == graph.image_id;
    });
    if (it == lines.end()) {
      ++unmatched;
      log_event(LogLevel::kWarning, "graph_for_unknown_image", {{"image_id", graph.image_id}});
      continue;
    }
    const auto report = validate(graph, it->record, cfg.exclusivity_rules);
    accepted += report.accepted.triplets.size();
    rejected += report.rejected.size();
    ojson d;
    d["image_id"] = graph.image_id;
    d["accepted"] = report.accepted.triplets.size();
    d["rejected"] = ojson::array();
    for (const auto& r : report.rejected) {
      d["rejected"].push_back({{"source", r.triplet.source},
                               {"target", r.triplet.target},
                               {"relation", r.triplet.relation},
                               {"reason", std::string(to_string(r.reason))}});
    }
    details.push_back(std::move(d));
  }
  if (!o.report_out.empty()) write_text_file_atomic(o.report_out, details.dump(2) + "\n");
  summary["graphs"] = graphs.size();
  summary["accepted"] = accepted;
  summary["rejected"] = rejected;
  summary["unmatched_graphs"] = unmatched;
  return (rejected || unmatched) ? kExitValidationFailures : kExitOk;
}

int cmd_stats(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  const auto entries =
      read_pseudo_labels(require(o.corpus, cfg.paths.output_corpus, "--corpus"));
  const auto hist = predicate_stats(entries);
  const auto report = histogram_report_json(hist, static_cast<std::size_t>(std::max(o.top, 0)));
  if (!o.report_out.empty()) write_text_file_atomic(o.report_out, report.dump(2) + "\n");
  if (!o.table_out.empty()) {
    write_text_file_atomic(o.table_out,
                           histogram_report_table(hist, static_cast<std::size_t>(std::max(o.top, 0))));
  }
  summary["entries"] = entries.size();
  for (const auto& [key, value] : report.items()) summary[key] = value;
  return kExitOk;
}

int cmd_export(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  const auto tmpl = resolve_template(cfg);
  const auto entries =
      read_pseudo_labels(require(o.corpus, cfg.paths.output_corpus, "--corpus"));
  const auto out = o.out.empty() ? require(o.instructions, cfg.paths.instructions, "--out")
                                 : std::filesystem::path(o.out);
  summary["written"] = export_instruction_pairs(entries, tmpl, out);
  summary["out"] = out.string();
  return kExitOk;
}

int cmd_eval(const Options& o, ojson& summary) {
  const auto cfg = base_config(o);
  if (o.gt.empty() || o.pred.empty()) usage_error("--gt and --pred are required");
  MatchOptions match = cfg.eval.match;
  if (o.iou) {
    if (!(*o.iou >= 0.0 && *o.iou <= 1.0)) usage_error("--iou must lie in [0, 1]");
    match.iou_threshold = *o.iou;
  }
  if (!o.mode.empty()) {
    if (o.mode == "union") {
      match.mode = MatchMode::kUnion;
    } else if (o.mode == "per_box") {
      match.mode = MatchMode::kPerBox;
    } else {
      usage_error("--mode must be union or per_box");
    }
  }
  const auto ks = o.ks.empty() ? cfg.eval.ks : parse_ks(o.ks);
  const auto report = recall_at_k(read_grounded_triplets(o.pred), read_grounded_triplets(o.gt),
                                  ks, match);
  const auto json = recall_report_json(report);
  if (!o.report_out.empty()) write_text_file_atomic(o.report_out, json.dump(2) + "\n");
  if (!o.table_out.empty()) write_text_file_atomic(o.table_out, recall_report_table(report));
  summary["match_mode"] = match.mode == MatchMode::kUnion ? "union" : "per_box";
  summary["iou_threshold"] = match.iou_threshold;
  for (const auto& [key, value] : json.items()) {
    if (key != "per_predicate") summary[key] = value;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out) {
  CLI::App app{"Scene-graph pseudo-label synthesis and SGDET evaluation", "sgsynth"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "Pipeline config JSON");
  app.add_option("--log-level", o.log_level, "debug, info, warning or error");

  auto* ingest = app.add_subcommand("ingest", "Convert COCO annotations to records");
  ingest->add_option("--annotations", o.annotations, "COCO detection JSON");
  ingest->add_option("--captions", o.captions, "COCO captions JSON (global captions)");
  ingest->add_option("--image-root", o.image_root, "Directory joined with file_name");
  ingest->add_option("--out", o.out, "Records JSONL to write");

  auto* rois = app.add_subcommand("select-rois", "Pick overlapping object pairs");
  rois->add_option("--records", o.records, "Records JSONL");
  rois->add_option("--out", o.out, "Records JSONL with rois");
  rois->add_option("--seed", o.seed, "Global shuffle seed");
  rois->add_option("--n-max", o.n_max, "Maximum pairs per image");

  auto* narrate = app.add_subcommand("narrate", "Caption images and union regions");
  narrate->add_option("--records", o.records, "Records JSONL");
  narrate->add_option("--out", o.out, "Captioned records JSONL");
  narrate->add_option("--seed", o.seed, "Shuffle seed when rois are absent");
  narrate->add_option("--n-max", o.n_max, "Maximum pairs per image");
  narrate->add_option("--captioner-url", o.captioner_url, "Captioning service base URL");
  narrate->add_option("--global-source", o.global_source, "service or dataset");
  narrate->add_flag("--mock-captioner", o.mock_captioner, "Use the offline mock captioner");

  auto* prompt = app.add_subcommand("prompt", "Render chat requests for captioned records");
  prompt->add_option("--records", o.records, "Captioned records JSONL");
  prompt->add_option("--out", o.out, "Chat requests JSONL");
  prompt->add_option("--batch-size", o.batch_size, "Images per prompt");
  prompt->add_option("--template-dir", o.template_dir, "Directory of template assets");
  prompt->add_option("--template-id", o.template_id, "Template asset id");

  auto* synth = app.add_subcommand("synth", "Run the full pseudo-labelling pipeline");
  synth->add_option("--annotations", o.annotations, "COCO detection JSON");
  synth->add_option("--captions", o.captions, "COCO captions JSON");
  synth->add_option("--records", o.records, "Records JSONL instead of COCO input");
  synth->add_option("--out", o.out, "Pseudo-label corpus JSONL");
  synth->add_option("--instructions", o.instructions, "Instruction pairs JSONL");
  synth->add_option("--cache-dir", o.cache_dir, "LLM response cache directory");
  synth->add_option("--seed", o.seed, "Global shuffle seed");
  synth->add_option("--n-max", o.n_max, "Maximum pairs per image");
  synth->add_option("--batch-size", o.batch_size, "Images per prompt");
  synth->add_option("--template-dir", o.template_dir, "Directory of template assets");
  synth->add_option("--template-id", o.template_id, "Template asset id");
  synth->add_option("--captioner-url", o.captioner_url, "Captioning service base URL");
  synth->add_option("--global-source", o.global_source, "service or dataset");
  synth->add_flag("--mock-captioner", o.mock_captioner, "Use the offline mock captioner");
  auto* fixed = synth->add_option("--mock-llm", o.mock_llm, "Answer every prompt with this file");
  auto* heuristic = synth->add_flag("--mock-llm-heuristic", o.mock_llm_heuristic,
                                    "Offline LLM relating captioned pairs with \"near\"");
  fixed->excludes(heuristic);

  auto* validate_cmd = app.add_subcommand("validate", "Check an LLM response against records");
  validate_cmd->add_option("--records", o.records, "Records JSONL");
  validate_cmd->add_option("--response", o.response, "Raw completion text");
  validate_cmd->add_option("--report", o.report_out, "Per-image report JSON");

  auto* stats = app.add_subcommand("stats", "Predicate frequency statistics");
  stats->add_option("--corpus", o.corpus, "Pseudo-label corpus JSONL");
  stats->add_option("--top", o.top, "Rows in head and tail tables");
  stats->add_option("--report", o.report_out, "Report JSON");
  stats->add_option("--table", o.table_out, "Aligned text table");

  auto* export_cmd = app.add_subcommand("export-instructions", "Write instruction-tuning pairs");
  export_cmd->add_option("--corpus", o.corpus, "Pseudo-label corpus JSONL");
  export_cmd->add_option("--out", o.out, "Instruction pairs JSONL");
  export_cmd->add_option("--template-dir", o.template_dir, "Directory of template assets");
  export_cmd->add_option("--template-id", o.template_id, "Template asset id");

  auto* eval = app.add_subcommand("eval", "SGDET Recall@K and mean Recall@K");
  eval->add_option("--gt", o.gt, "Ground-truth grounded triplets JSONL");
  eval->add_option("--pred", o.pred, "Predicted grounded triplets JSONL");
  eval->add_option("--k", o.ks, "Comma-separated K values");
  eval->add_option("--iou", o.iou, "IoU threshold (strict)");
  eval->add_option("--mode", o.mode, "union or per_box");
  eval->add_option("--report", o.report_out, "Report JSON");
  eval->add_option("--table", o.table_out, "Text table");

  std::vector<std::string> argv_store{"sgsynth"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    out << e.what() << "\n" << app.help();
    return kExitConfigOrIo;
  }

  if (o.log_level == "debug") {
    set_log_level(LogLevel::kDebug);
  } else if (o.log_level == "warning") {
    set_log_level(LogLevel::kWarning);
  } else if (o.log_level == "error") {
    set_log_level(LogLevel::kError);
  } else {
    set_log_level(LogLevel::kInfo);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  ojson summary;
  summary["command"] = name;
  int code = kExitConfigOrIo;
  try {
    if (name == "ingest") code = cmd_ingest(o, summary);
    else if (name == "select-rois") code = cmd_select_rois(o, summary);
    else if (name == "narrate") code = cmd_narrate(o, summary);
    else if (name == "prompt") code = cmd_prompt(o, summary);
    else if (name == "synth") code = cmd_synth(o, summary);
    else if (name == "validate") code = cmd_validate(o, summary);
    else if (name == "stats") code = cmd_stats(o, summary);
    else if (name == "export-instructions") code = cmd_export(o, summary);
    else if (name == "eval") code = cmd_eval(o, summary);
    summary["status"] = code == kExitOk ? "ok" : "validation_failures";
  } catch (const Error& e) {
    // Malformed model output and rejected data are validation failures;
    // everything else is configuration or IO.
    const bool validation = e.code() == ErrorCode::kMalformedJson ||
                            e.code() == ErrorCode::kSchemaMismatch ||
                            e.code() == ErrorCode::kImageIdMismatch;
    code = validation ? kExitValidationFailures : kExitConfigOrIo;
    summary["status"] = "error";
    summary["error"] = std::string(to_string(e.code()));
    summary["message"] = e.what();
    if (!e.detail().empty()) summary["detail"] = e.detail();
    log_event(LogLevel::kError, "command_failed",
              {{"command", name}, {"error", std::string(to_string(e.code()))}, {"message", e.what()}});
  } catch (const std::exception& e) {
    code = kExitConfigOrIo;
    summary["status"] = "error";
    summary["error"] = "Internal";
    summary["message"] = e.what();
  }
  summary["exit_code"] = code;
  out << summary.dump(-1, ' ', false, ojson::error_handler_t::replace) << std::endl;
  return code;
}

}  // namespace sgsynth
