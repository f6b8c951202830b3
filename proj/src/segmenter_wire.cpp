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

#include "groundrl/segmenter_wire.hpp"

#include <condition_variable>
#include <mutex>

#include "groundrl/errors.hpp"
#include "httplib.h"

namespace groundrl {

namespace {

using nlohmann::json;

json points_json(const std::vector<Point2>& ps) {
  json a = json::array();
  for (const auto& p : ps) a.push_back({p.x, p.y});
  return a;
}

std::vector<Point2> points_from(const json& a) {
  std::vector<Point2> out;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) throw ConsistencyError("point must be [x, y]");
    out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return out;
}

json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

json request_to_json(const SegmentRequest& req) {
  json image = req.image.id.empty() ? json{{"png_base64", req.image.png_base64}}
                                    : json{{"id", req.image.id}};
  return {{"image", std::move(image)},
          {"box", {req.box.x1, req.box.y1, req.box.x2, req.box.y2}},
          {"pos_points", points_json(req.pos_points)},
          {"neg_points", points_json(req.neg_points)},
          {"mode", prompt_mode_name(req.mode)}};
}

SegmentRequest request_from_json(const json& j) {
  SegmentRequest req;
  try {
    const auto& image = j.at("image");
    if (image.contains("id")) {
      req.image.id = image.at("id").get<std::string>();
    } else {
      req.image.png_base64 = image.at("png_base64").get<std::string>();
    }
    const auto box = j.at("box").get<std::vector<double>>();
    if (box.size() != 4) throw ConsistencyError("box must have 4 numbers");
    req.box = {box[0], box[1], box[2], box[3]};
    req.pos_points = points_from(j.value("pos_points", json::array()));
    req.neg_points = points_from(j.value("neg_points", json::array()));
    const auto mode = parse_prompt_mode(j.at("mode").get<std::string>());
    if (!mode) throw ConsistencyError("unknown prompt mode");
    req.mode = *mode;
  } catch (const json::exception& e) {
    throw ConsistencyError(std::string("malformed segment request: ") + e.what());
  }
  validate_request(req);
  return req;
}

json response_to_json(const SegmentResponse& resp) {
  return {{"mask", rle_to_json(resp.mask)}, {"confidence", resp.confidence}};
}

SegmentResponse response_from_json(const json& j) {
  if (!j.is_object() || !j.contains("mask") || !j.contains("confidence") ||
      !j["confidence"].is_number()) {
    throw SegmenterUnavailable("malformed segment response: " + j.dump());
  }
  return {rle_from_json(j["mask"]), j["confidence"].get<double>()};
}

// Counting semaphore bounding concurrent requests.
struct RemoteSegmenter::Gate {
  std::mutex mu;
  std::condition_variable cv;
  int free = 0;
};

RemoteSegmenter::RemoteSegmenter(std::string endpoint, RemoteOptions opts)
    : endpoint_(std::move(endpoint)), opts_(opts), gate_(std::make_unique<Gate>()) {
  gate_->free = std::max(1, opts_.max_in_flight);
}

RemoteSegmenter::~RemoteSegmenter() = default;

SegmentResponse RemoteSegmenter::segment(const SegmentRequest& req) const {
  const std::string body = request_to_json(req).dump();
  {
    std::unique_lock lock(gate_->mu);
    gate_->cv.wait(lock, [&] { return gate_->free > 0; });
    --gate_->free;
  }
  httplib::Result res = [&] {
    httplib::Client cli(endpoint_);
    cli.set_connection_timeout(opts_.timeout);
    cli.set_read_timeout(opts_.timeout);
    cli.set_write_timeout(opts_.timeout);
    return cli.Post("/v1/segment", body, "application/json");
  }();
  {
    std::lock_guard lock(gate_->mu);
    ++gate_->free;
  }
  gate_->cv.notify_one();

  if (!res) {
    throw SegmenterUnavailable("segmenter at " + endpoint_ + " unreachable: " +
                               httplib::to_string(res.error()));
  }
  const json j = json::parse(res->body, nullptr, false);
  if (res->status < 200 || res->status >= 300) {
    std::string code = "unknown", message = res->body;
    if (!j.is_discarded() && j.is_object() && j.contains("error") && j["error"].is_object()) {
      code = j["error"].value("code", code);
      message = j["error"].value("message", message);
    }
    if (code == "UnknownImage") throw UnknownImage(message);
    throw SegmenterUnavailable("segmenter returned HTTP " + std::to_string(res->status) +
                               " " + code + ": " + message);
  }
  if (j.is_discarded()) throw SegmenterUnavailable("segmenter returned invalid JSON");
  return response_from_json(j);
}

std::string RemoteSegmenter::health() const {
  httplib::Client cli(endpoint_);
  cli.set_connection_timeout(opts_.timeout);
  cli.set_read_timeout(opts_.timeout);
  auto res = cli.Get("/v1/health");
  if (!res) {
    throw SegmenterUnavailable("segmenter at " + endpoint_ + " unreachable: " +
                               httplib::to_string(res.error()));
  }
  const json j = json::parse(res->body, nullptr, false);
  if (res->status != 200 || j.is_discarded() || j.value("status", "") != "ok") {
    throw SegmenterUnavailable("segmenter health check failed: " + res->body);
  }
  return j.value("model", "");
}

void mount_segment_service(httplib::Server& server, const Segmenter& seg,
                           std::string model_name) {
  server.Get("/v1/health", [model_name](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}, {"model", model_name}}.dump(), "application/json");
  });
  server.Post("/v1/segment", [&seg](const httplib::Request& req, httplib::Response& res) {
    auto fail = [&](int status, std::string_view code, std::string_view msg) {
      res.status = status;
      res.set_content(error_body(code, msg).dump(), "application/json");
    };
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return fail(400, "BadRequest", "body is not JSON");
    SegmentRequest sreq;
    try {
      sreq = request_from_json(body);
    } catch (const Error& e) {
      return fail(400, "BadRequest", e.what());
    }
    try {
      res.set_content(response_to_json(seg.segment(sreq)).dump(), "application/json");
    } catch (const UnknownImage& e) {
      fail(404, "UnknownImage", e.what());
    } catch (const std::exception& e) {
      fail(500, "ModelFailure", e.what());
    }
  });
}

}  // namespace groundrl
