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

#ifndef SGSYNTH_LOG_HPP_
#define SGSYNTH_LOG_HPP_

#include <string_view>

#include "json.hpp"

namespace sgsynth {

enum class LogLevel { kDebug, kInfo, kWarning, kError };

/// Emits one JSON object per line on stderr:
///   {"level": "...", "event": "...", <fields>}
/// Lines from concurrent callers never interleave.
void log_event(LogLevel level, std::string_view event,
               const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());

/// Events below this level are dropped. Defaults to kInfo.
void set_log_level(LogLevel level);

}  // namespace sgsynth

#endif  // SGSYNTH_LOG_HPP_
