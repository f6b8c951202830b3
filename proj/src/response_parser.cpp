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

#include "groundrl/response_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <unordered_set>

#include "json.hpp"

namespace groundrl {

namespace {

using nlohmann::json;

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

struct Block {
  std::string_view body;
  std::size_t end = 0;  // position just past the closing tag
};

std::optional<Block> find_block(std::string_view raw, std::string_view open,
                                std::string_view close, std::size_t from = 0) {
  const std::size_t a = raw.find(open, from);
  if (a == std::string_view::npos) return std::nullopt;
  const std::size_t body = a + open.size();
  const std::size_t b = raw.find(close, body);
  if (b == std::string_view::npos) return std::nullopt;
  return Block{raw.substr(body, b - body), b + close.size()};
}

std::string_view trim(std::string_view s) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

class SchemaReader {
 public:
  explicit SchemaReader(std::vector<FormatFault>& faults) : faults_(faults) {}

  bool out_of_range() const { return out_of_range_; }

  std::optional<GroundingPrediction> read(const json& j) {
    if (!j.is_object()) return fail(FormatFault::kSchemaMismatch);
    const auto nt = j.find("no_target");
    const auto inst = j.find("instances");
    if (nt != j.end()) {
      if (!nt->is_boolean()) return fail(FormatFault::kSchemaMismatch);
      if (nt->get<bool>()) {
        if (inst != j.end()) return fail(FormatFault::kSchemaMismatch);
        return GroundingPrediction{true, {}};
      }
    }
    if (inst == j.end() || !inst->is_array()) return fail(FormatFault::kSchemaMismatch);
    if (inst->empty()) return fail(FormatFault::kEmptyInstances);
    GroundingPrediction pred;
    for (const auto& item : *inst) {
      auto parsed = read_instance(item);
      if (!parsed) return std::nullopt;
      pred.instances.push_back(std::move(*parsed));
    }
    return pred;
  }

 private:
  std::nullopt_t fail(FormatFault f) {
    faults_.push_back(f);
    return std::nullopt;
  }

  std::optional<double> coord(const json& v) {
    if (!v.is_number()) return std::nullopt;
    double x = v.get<double>();
    if (std::isnan(x)) return std::nullopt;
    if (x < 0.0 || x > 1000.0) {
      out_of_range_ = true;
      x = std::clamp(x, 0.0, 1000.0);
    }
    return x;
  }

  std::optional<Point2> point(const json& v) {
    if (!v.is_array() || v.size() != 2) return std::nullopt;
    auto x = coord(v[0]);
    auto y = coord(v[1]);
    if (!x || !y) return std::nullopt;
    return Point2{*x, *y};
  }

  // Reads an optional/required point list; false on a fault already recorded.
  bool points(const json& v, std::size_t min_n, std::size_t max_n,
              std::vector<Point2>& out) {
    FormatFault fault = FormatFault::kSchemaMismatch;
    if (v.is_array()) {
      if (v.size() < min_n || v.size() > max_n) {
        fault = FormatFault::kWrongPointCount;
      } else {
        bool ok = true;
        for (const auto& p : v) {
          auto parsed = point(p);
          if (!parsed) {
            ok = false;
            break;
          }
          out.push_back(*parsed);
        }
        if (ok) return true;
      }
    }
    faults_.push_back(fault);
    return false;
  }

  std::optional<Instance> read_instance(const json& item) {
    if (!item.is_object()) return fail(FormatFault::kSchemaMismatch);
    const auto bb = item.find("bbox");
    const auto pts = item.find("points");
    if (bb == item.end() || pts == item.end()) return fail(FormatFault::kSchemaMismatch);
    if (!bb->is_array() || bb->size() != 4) return fail(FormatFault::kSchemaMismatch);
    double c[4];
    for (std::size_t k = 0; k < 4; ++k) {
      auto v = coord((*bb)[k]);
      if (!v) return fail(FormatFault::kSchemaMismatch);
      c[k] = *v;
    }
    Instance inst;
    inst.bbox = normalize_box({c[0], c[1], c[2], c[3]});
    if (!points(*pts, 2, 2, inst.points)) return std::nullopt;
    if (const auto neg = item.find("neg_points"); neg != item.end() && !neg->is_null()) {
      if (!points(*neg, 0, 2, inst.neg_points)) return std::nullopt;
    }
    return inst;
  }

  std::vector<FormatFault>& faults_;
  bool out_of_range_ = false;
};

}  // namespace

std::string_view fault_name(FormatFault f) {
  switch (f) {
    case FormatFault::kMissingAnswerTag: return "missing_answer_tag";
    case FormatFault::kInvalidJson: return "invalid_json";
    case FormatFault::kSchemaMismatch: return "schema_mismatch";
    case FormatFault::kEmptyInstances: return "empty_instances";
    case FormatFault::kWrongPointCount: return "wrong_point_count";
    case FormatFault::kOutOfRangeCoordinate: return "out_of_range_coordinate";
    case FormatFault::kMultipleAnswerBlocks: return "multiple_answer_blocks";
  }
  return "unknown";
}

bool is_fatal(FormatFault f) {
  return f != FormatFault::kOutOfRangeCoordinate &&
         f != FormatFault::kMultipleAnswerBlocks;
}

ParsedResponse parse_response(std::string_view raw) {
  ParsedResponse out;
  if (auto think = find_block(raw, kThinkOpen, kThinkClose)) {
    out.think_text = std::string(think->body);
  }
  const auto answer = find_block(raw, kAnswerOpen, kAnswerClose);
  if (!answer) {
    out.format_faults.push_back(FormatFault::kMissingAnswerTag);
  } else {
    if (find_block(raw, kAnswerOpen, kAnswerClose, answer->end)) {
      out.format_faults.push_back(FormatFault::kMultipleAnswerBlocks);
    }
    const std::string_view body = trim(answer->body);
    json j = json::parse(body.begin(), body.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      out.format_faults.push_back(FormatFault::kInvalidJson);
    } else {
      SchemaReader reader(out.format_faults);
      out.prediction = reader.read(j);
      if (reader.out_of_range()) {
        out.format_faults.push_back(FormatFault::kOutOfRangeCoordinate);
      }
    }
  }
  out.format_ok = std::none_of(out.format_faults.begin(), out.format_faults.end(), is_fatal);
  if (!out.format_ok) out.prediction.reset();
  return out;
}

double repetition_score(std::string_view raw) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    const std::size_t start = i;
    while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    if (i > start) words.push_back(raw.substr(start, i - start));
  }
  if (words.size() < 4) return 0.0;

  // A 4-gram is identified by its start index; hash and compare via the words.
  struct GramHash {
    const std::vector<std::string_view>* w;
    std::size_t operator()(std::size_t s) const {
      std::size_t h = 0;
      for (std::size_t k = 0; k < 4; ++k) {
        h ^= std::hash<std::string_view>{}((*w)[s + k]) + 0x9e3779b97f4a7c15ULL +
             (h << 6) + (h >> 2);
      }
      return h;
    }
  };
  struct GramEq {
    const std::vector<std::string_view>* w;
    bool operator()(std::size_t a, std::size_t b) const {
      for (std::size_t k = 0; k < 4; ++k) {
        if ((*w)[a + k] != (*w)[b + k]) return false;
      }
      return true;
    }
  };
  const std::size_t n = words.size() - 3;
  std::unordered_set<std::size_t, GramHash, GramEq> seen(n, GramHash{&words},
                                                         GramEq{&words});
  std::size_t dup = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!seen.insert(s).second) ++dup;
  }
  return static_cast<double>(dup) / static_cast<double>(n);
}

bool has_nonempty_think(const ParsedResponse& pr) {
  return pr.think_text && !trim(*pr.think_text).empty();
}

std::string render_response(const GroundingPrediction& pred, std::string_view think) {
  json answer;
  if (pred.no_target) {
    answer = {{"no_target", true}};
  } else {
    auto pts = [](const std::vector<Point2>& ps) {
      json a = json::array();
      for (const auto& p : ps) a.push_back({p.x, p.y});
      return a;
    };
    json inst = json::array();
    for (const auto& i : pred.instances) {
      json o = {{"bbox", {i.bbox.x1, i.bbox.y1, i.bbox.x2, i.bbox.y2}},
                {"points", pts(i.points)}};
      if (!i.neg_points.empty()) o["neg_points"] = pts(i.neg_points);
      inst.push_back(std::move(o));
    }
    answer = {{"instances", std::move(inst)}};
  }
  std::string out;
  if (!think.empty()) {
    out.append(kThinkOpen).append(think).append(kThinkClose);
  }
  out.append(kAnswerOpen).append(answer.dump()).append(kAnswerClose);
  return out;
}

}  // namespace groundrl
