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

#ifndef SGSYNTH_ERROR_HPP_
#define SGSYNTH_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgsynth {

enum class ErrorCode {
  kInvalidArgument,
  kUnknownObjectKey,
  kCaptionServiceUnavailable,
  kEmptyCaption,
  kMissingCaptions,
  kBatchTooLarge,
  kTemplateError,
  kLlmUnavailable,
  kLlmRejected,
  kTimeout,
  kMalformedJson,
  kSchemaMismatch,
  kImageIdMismatch,
  kSchemaError,
  kDanglingCategoryId,
  kIoError,
  kEmptyGroundTruth,
  kConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above. The
// message is human-readable; `detail()` holds machine-oriented context such as
// a JSON path, a line number or a field name, and may be empty.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sgsynth

#endif  // SGSYNTH_ERROR_HPP_
