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

#ifndef SGSYNTH_CONFIG_HPP_
#define SGSYNTH_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgsynth/eval.hpp"
#include "sgsynth/graph.hpp"
#include "sgsynth/llm.hpp"
#include "sgsynth/narrate.hpp"

namespace sgsynth {

inline constexpr const char* kLlmTokenEnv = "SGSYNTH_LLM_API_KEY";
inline constexpr const char* kCaptionerTokenEnv = "SGSYNTH_CAPTIONER_TOKEN";
inline constexpr const char* kDefaultTemplateId = "sgg_v1";

struct CaptionerConfig {
  CaptionerEndpoint endpoint;
  bool mock = false;
  GlobalCaptionSource global_source = GlobalCaptionSource::kService;
  std::string image_root;
};

struct PathsConfig {
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> captions;
  std::optional<std::filesystem::path> records;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> output_corpus;
  std::optional<std::filesystem::path> instructions;
  std::optional<std::filesystem::path> template_dir;
};

struct EvalConfig {
  std::vector<int> ks{20, 50, 100};
  MatchOptions match;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  int n_max_rois = kDefaultMaxRois;
  int batch_size = static_cast<int>(kDefaultBatchCap);
  std::string template_id = kDefaultTemplateId;
  CaptionerConfig captioner;
  LlmEndpoint llm;
  std::vector<ExclusivityRule> exclusivity_rules = default_exclusivity_rules();
  PathsConfig paths;
  EvalConfig eval;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Validates `doc` and applies defaults. Relative paths resolve against
/// `base_dir`. Input paths must exist; output paths need an existing parent.
/// Tokens from the environment win over the file. Unknown keys are errors.
/// Throws Error(kConfigError) with the field path in detail().
PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir,
                                const EnvLookup& env = process_env());

PipelineConfig load_config(const std::filesystem::path& path,
                           const EnvLookup& env = process_env());

/// Reads the configured template, or the built-in one when no template_dir is
/// set.
PromptTemplate resolve_template(const PipelineConfig& config);

}  // namespace sgsynth

#endif  // SGSYNTH_CONFIG_HPP_
