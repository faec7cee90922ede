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

#ifndef SGSYNTH_NARRATE_HPP_
#define SGSYNTH_NARRATE_HPP_

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgsynth/core.hpp"
#include "sgsynth/http.hpp"
#include "sgsynth/roi.hpp"

namespace sgsynth {

/// Pixels to caption: the whole image, or a crop of it.
struct CaptionRequest {
  std::string image_uri;
  std::optional<BBox> crop;
};

/// Clamps `region` to the image and rejects crops left without area.
CaptionRequest make_caption_request(const ImageRecord& record,
                                    const std::optional<BBox>& region);

struct CaptionerEndpoint {
  std::string base_url;
  std::chrono::milliseconds timeout{30000};
  int max_concurrency = 4;
  std::optional<std::string> auth_token;
  RetryPolicy retry;
};

/// Which image each caption belongs to; mocks use it, services ignore it.
struct CaptionContext {
  std::string image_id;
  std::string region;  // rendered region designator
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  /// Returns the raw caption text. May be called concurrently.
  /// Throws Error(kCaptionServiceUnavailable) once retries are exhausted.
  virtual std::string caption(const CaptionRequest& request,
                              const CaptionContext& context) = 0;
};

/// Request body {"image_uri": ..., "crop": [x1, y1, x2, y2] | null}.
std::string caption_request_body(const CaptionRequest& request);

/// POST {base_url}/caption, reply {"caption": "..."}.
class HttpCaptioner : public Captioner {
 public:
  HttpCaptioner(CaptionerEndpoint endpoint,
                std::shared_ptr<HttpTransport> transport,
                Sleeper sleeper = real_sleeper(), std::uint64_t jitter_seed = 0);
  explicit HttpCaptioner(CaptionerEndpoint endpoint);

  std::string caption(const CaptionRequest& request,
                      const CaptionContext& context) override;

 private:
  CaptionerEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  std::uint64_t jitter_seed_;
  std::atomic<std::uint64_t> calls_{0};
};

/// Answers "caption of <image_id>/<region>".
class MockCaptioner : public Captioner {
 public:
  std::string caption(const CaptionRequest& request,
                      const CaptionContext& context) override;
};

/// Where the holistic caption comes from.
enum class GlobalCaptionSource { kService, kDataset };

struct NarrationOptions {
  int max_concurrency = 4;
  GlobalCaptionSource global_source = GlobalCaptionSource::kService;
};

/// Merges regions whose (trimmed) captions are byte-identical. Keys keep the
/// order in which their text first appears; inside a key regions keep input
/// order except that `global` is moved to the front.
CaptionSet group_by_caption(
    std::span<const std::pair<Region, std::string>> entries);

/// Captions the whole image and every pair's union box, then groups the
/// results. Requests run on up to `max_concurrency` threads; the output order
/// is global first, then pairs in the given order. Blank captions drop their
/// region with a warning. With GlobalCaptionSource::kDataset the record's
/// existing global caption is reused instead of asking the service.
CaptionSet generate_narratives(const ImageRecord& record,
                               std::span<const ObjectPair> pairs,
                               Captioner& captioner,
                               const NarrationOptions& options = {});

}  // namespace sgsynth

#endif  // SGSYNTH_NARRATE_HPP_
