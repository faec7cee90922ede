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

#include "sgsynth/config.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <cstdlib>
#include <set>

#include "sgsynth/error.hpp"
#include "sgsynth/io.hpp"

namespace sgsynth {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kConfigError, "config " + path + ": " + what, path);
}

void reject_unknown(const nlohmann::json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(path, "must be an object");
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!names.count(key)) config_error(path + "." + key, "unknown field");
  }
}

template <typename T>
T number(const nlohmann::json& obj, const char* name, const std::string& path,
         T fallback, T lo, T hi) {
  if (!obj.contains(name)) return fallback;
  const auto& v = obj[name];
  const std::string where = path + "." + name;
  T value;
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) config_error(where, "must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_unsigned()) {
        value = v.get<T>();
      } else {
        const auto s = v.get<std::int64_t>();
        if (s < 0) config_error(where, "must be non-negative");
        value = static_cast<T>(s);
      }
    } else {
      value = v.get<T>();
    }
  } else {
    if (!v.is_number()) config_error(where, "must be a number");
    value = v.get<T>();
    if (!std::isfinite(value)) config_error(where, "must be finite");
  }
  if (value < lo || value > hi) config_error(where, "out of range");
  return value;
}

std::string string_field(const nlohmann::json& obj, const char* name,
                         const std::string& path, const std::string& fallback) {
  if (!obj.contains(name)) return fallback;
  if (!obj[name].is_string()) config_error(path + "." + name, "must be a string");
  return obj[name].get<std::string>();
}

std::optional<std::filesystem::path> path_field(const nlohmann::json& obj,
                                                const char* name,
                                                const std::filesystem::path& base,
                                                bool must_exist) {
  if (!obj.contains(name)) return std::nullopt;
  const std::string where = std::string("paths.") + name;
  if (!obj[name].is_string() || obj[name].get<std::string>().empty()) {
    config_error(where, "must be a non-empty string");
  }
  std::filesystem::path p = obj[name].get<std::string>();
  if (p.is_relative()) p = base / p;
  std::error_code ec;
  if (must_exist) {
    if (!std::filesystem::exists(p, ec)) config_error(where, "does not exist: " + p.string());
  } else {
    const auto parent = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
    if (!std::filesystem::is_directory(parent, ec)) {
      config_error(where, "parent directory does not exist: " + parent.string());
    }
  }
  return p;
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* value = std::getenv(name.c_str());
    if (!value || !*value) return std::nullopt;
    return std::string(value);
  };
}

PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir,
                                const EnvLookup& env) {
  reject_unknown(doc, "$",
                 {"seed", "n_max_rois", "batch_size", "template_id", "captioner", "llm",
                  "exclusivity_rules", "paths", "eval"});
  PipelineConfig cfg;
  cfg.seed = number<std::uint64_t>(doc, "seed", "$", 0, 0,
                                   std::numeric_limits<std::uint64_t>::max());
  cfg.n_max_rois = number<int>(doc, "n_max_rois", "$", kDefaultMaxRois, 1, 4096);
  cfg.batch_size = number<int>(doc, "batch_size", "$", cfg.batch_size, 1, 64);
  cfg.template_id = string_field(doc, "template_id", "$", kDefaultTemplateId);

  if (doc.contains("captioner")) {
    const auto& c = doc["captioner"];
    reject_unknown(c, "captioner",
                   {"base_url", "timeout_ms", "max_concurrency", "auth_token", "max_retries",
                    "backoff_base_ms", "mock", "global_source", "image_root"});
    auto& ep = cfg.captioner.endpoint;
    ep.base_url = string_field(c, "base_url", "captioner", "");
    ep.timeout = std::chrono::milliseconds(
        number<std::int64_t>(c, "timeout_ms", "captioner", 30000, 1, 3600000));
    ep.max_concurrency = number<int>(c, "max_concurrency", "captioner", 4, 1, 1024);
    ep.retry.max_retries = number<int>(c, "max_retries", "captioner", 3, 0, 10);
    ep.retry.backoff_base = std::chrono::milliseconds(
        number<std::int64_t>(c, "backoff_base_ms", "captioner", 500, 0, 600000));
    if (c.contains("auth_token")) ep.auth_token = string_field(c, "auth_token", "captioner", "");
    if (c.contains("mock")) {
      if (!c["mock"].is_boolean()) config_error("captioner.mock", "must be a boolean");
      cfg.captioner.mock = c["mock"].get<bool>();
    }
    const auto source = string_field(c, "global_source", "captioner", "service");
    if (source == "service") {
      cfg.captioner.global_source = GlobalCaptionSource::kService;
    } else if (source == "dataset") {
      cfg.captioner.global_source = GlobalCaptionSource::kDataset;
    } else {
      config_error("captioner.global_source", "must be \"service\" or \"dataset\"");
    }
    cfg.captioner.image_root = string_field(c, "image_root", "captioner", "");
  }
  if (auto token = env(kCaptionerTokenEnv)) cfg.captioner.endpoint.auth_token = *token;

  if (doc.contains("llm")) {
    const auto& l = doc["llm"];
    reject_unknown(l, "llm",
                   {"base_url", "model_name", "temperature", "max_output_tokens", "timeout_ms",
                    "max_retries", "backoff_base_ms", "max_concurrency", "auth_token"});
    auto& ep = cfg.llm;
    ep.base_url = string_field(l, "base_url", "llm", "");
    ep.model_name = string_field(l, "model_name", "llm", ep.model_name);
    if (ep.model_name.empty()) config_error("llm.model_name", "must not be empty");
    ep.temperature = number<double>(l, "temperature", "llm", 0.0, 0.0, 2.0);
    ep.max_output_tokens = number<int>(l, "max_output_tokens", "llm", ep.max_output_tokens, 1,
                                       1 << 20);
    ep.timeout = std::chrono::milliseconds(
        number<std::int64_t>(l, "timeout_ms", "llm", ep.timeout.count(), 1, 3600000));
    ep.max_retries = number<int>(l, "max_retries", "llm", ep.max_retries, 0, kMaxLlmRetries);
    ep.backoff_base = std::chrono::milliseconds(number<std::int64_t>(
        l, "backoff_base_ms", "llm", ep.backoff_base.count(), 0, 600000));
    ep.max_concurrency = number<int>(l, "max_concurrency", "llm", ep.max_concurrency, 1, 1024);
    if (l.contains("auth_token")) ep.auth_token = string_field(l, "auth_token", "llm", "");
  }
  if (auto token = env(kLlmTokenEnv)) cfg.llm.auth_token = *token;

  if (doc.contains("exclusivity_rules")) {
    const auto& rules = doc["exclusivity_rules"];
    if (!rules.is_array()) config_error("exclusivity_rules", "must be a list");
    cfg.exclusivity_rules.clear();
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string where = "exclusivity_rules[" + std::to_string(i) + "]";
      reject_unknown(rules[i], where, {"predicate", "bound_role", "max_partners"});
      ExclusivityRule rule;
      rule.predicate = normalize_predicate(string_field(rules[i], "predicate", where, ""));
      if (rule.predicate.empty()) config_error(where + ".predicate", "must not be empty");
      const auto role = string_field(rules[i], "bound_role", where, "target");
      if (role == "source") {
        rule.bound_role = BoundRole::kSource;
      } else if (role == "target") {
        rule.bound_role = BoundRole::kTarget;
      } else {
        config_error(where + ".bound_role", "must be \"source\" or \"target\"");
      }
      rule.max_partners = number<int>(rules[i], "max_partners", where, 1, 1, 1 << 20);
      cfg.exclusivity_rules.push_back(std::move(rule));
    }
  }

  if (doc.contains("paths")) {
    const auto& p = doc["paths"];
    reject_unknown(p, "paths",
                   {"annotations", "captions", "records", "cache_dir", "output_corpus",
                    "instructions", "template_dir"});
    cfg.paths.annotations = path_field(p, "annotations", base_dir, true);
    cfg.paths.captions = path_field(p, "captions", base_dir, true);
    cfg.paths.records = path_field(p, "records", base_dir, true);
    cfg.paths.template_dir = path_field(p, "template_dir", base_dir, true);
    cfg.paths.cache_dir = path_field(p, "cache_dir", base_dir, false);
    cfg.paths.output_corpus = path_field(p, "output_corpus", base_dir, false);
    cfg.paths.instructions = path_field(p, "instructions", base_dir, false);
  }

  if (doc.contains("eval")) {
    const auto& e = doc["eval"];
    reject_unknown(e, "eval", {"ks", "iou_threshold", "match_mode"});
    if (e.contains("ks")) {
      if (!e["ks"].is_array() || e["ks"].empty()) config_error("eval.ks", "must be a non-empty list");
      cfg.eval.ks.clear();
      for (const auto& k : e["ks"]) {
        if (!k.is_number_integer() || k.get<int>() < 1) {
          config_error("eval.ks", "entries must be positive integers");
        }
        cfg.eval.ks.push_back(k.get<int>());
      }
      if (!std::is_sorted(cfg.eval.ks.begin(), cfg.eval.ks.end())) {
        config_error("eval.ks", "must be sorted ascending");
      }
    }
    cfg.eval.match.iou_threshold = number<double>(e, "iou_threshold", "eval", 0.5, 0.0, 1.0);
    const auto mode = string_field(e, "match_mode", "eval", "union");
    if (mode == "union") {
      cfg.eval.match.mode = MatchMode::kUnion;
    } else if (mode == "per_box") {
      cfg.eval.match.mode = MatchMode::kPerBox;
    } else {
      config_error("eval.match_mode", "must be \"union\" or \"per_box\"");
    }
  }

  try {
    check_endpoint(cfg.llm);
  } catch (const Error& e) {
    config_error(e.detail(), e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    config_error("$", e.what());
  }
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) config_error("$", "not valid JSON");
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  return config_from_json(doc, base, env);
}

PromptTemplate resolve_template(const PipelineConfig& config) {
  if (config.paths.template_dir) {
    return PromptTemplate::load(*config.paths.template_dir, config.template_id);
  }
  auto builtin = PromptTemplate::builtin();
  if (builtin.id() != config.template_id) {
    throw Error(ErrorCode::kConfigError,
                "template " + config.template_id + " is not built in; set paths.template_dir",
                "template_id");
  }
  return builtin;
}

}  // namespace sgsynth
