// Copyright 2026 The groundrl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GROUNDRL_SEGMENTER_WIRE_HPP_
#define GROUNDRL_SEGMENTER_WIRE_HPP_

#include <chrono>
#include <memory>
#include <string>

#include "groundrl/segmenter.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace groundrl {

// JSON bodies of POST /v1/segment.
nlohmann::json request_to_json(const SegmentRequest& req);
SegmentRequest request_from_json(const nlohmann::json& j);
nlohmann::json response_to_json(const SegmentResponse& resp);
// Throws CorruptRle when the counts do not cover the mask.
SegmentResponse response_from_json(const nlohmann::json& j);

struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
  int max_in_flight = 8;
};

// Client for a segmenter served behind the /v1 HTTP protocol. Endpoint is a
// base URL such as "http://127.0.0.1:8080".
class RemoteSegmenter : public Segmenter {
 public:
  explicit RemoteSegmenter(std::string endpoint, RemoteOptions opts = {});
  ~RemoteSegmenter() override;

  SegmentResponse segment(const SegmentRequest& req) const override;
  // GET /v1/health; returns the model name.
  std::string health() const;

 private:
  struct Gate;
  std::string endpoint_;
  RemoteOptions opts_;
  std::unique_ptr<Gate> gate_;
};

// Installs /v1/segment and /v1/health handlers backed by `seg`.
void mount_segment_service(httplib::Server& server, const Segmenter& seg,
                           std::string model_name);

}  // namespace groundrl

#endif  // GROUNDRL_SEGMENTER_WIRE_HPP_
