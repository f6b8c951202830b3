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

#include "groundrl/dataset_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <unordered_map>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&)>& fn) {
  std::ifstream in = open_input(path);
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(path.string() + ": line is not a JSON object", line_no);
    }
    try {
      fn(j);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    } catch (const ConsistencyError& e) {
      throw ConsistencyError(path.string() + ": " + e.what() + " (line " +
                             std::to_string(line_no) + ")");
    } catch (const InvalidGeometry& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
}

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConsistencyError("point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

Box box_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw ConsistencyError("box must be [x1, y1, x2, y2]");
  return normalize_box({v[0], v[1], v[2], v[3]});
}

std::vector<Polygon> instance_rings(const json& entry) {
  if (!entry.is_array() || entry.empty()) throw ConsistencyError("empty polygon entry");
  std::vector<Polygon> rings;
  if (entry[0].is_array()) {
    for (const auto& ring : entry) rings.push_back({ring.get<std::vector<double>>()});
  } else {
    rings.push_back({entry.get<std::vector<double>>()});
  }
  return rings;
}

std::string trim_copy(std::string_view s) {
  auto space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

SubsetTotals totals_of(const std::vector<SampleEvaluation>& evals) {
  SubsetTotals t;
  t.refs = static_cast<std::int64_t>(evals.size());
  for (const auto& e : evals) {
    t.intersection += e.intersection;
    t.uni += e.uni;
  }
  return t;
}

json totals_json(const SubsetTotals& t) {
  return {{"refs", t.refs}, {"intersection", t.intersection}, {"union", t.uni}};
}

}  // namespace

void validate_annotation(const AnnotationRecord& rec) {
  if (rec.sample_id.empty()) throw ConsistencyError("record has an empty sample_id");
  validate_space(rec.image_size);
  if (rec.is_no_target != rec.polygons.empty() || rec.polygons.empty() != rec.boxes_px.empty()) {
    throw ConsistencyError("sample " + rec.sample_id +
                           ": no_target must hold exactly when polygons and boxes are empty");
  }
  if (rec.polygons.size() != rec.boxes_px.size()) {
    throw ConsistencyError("sample " + rec.sample_id + ": " + std::to_string(rec.boxes_px.size()) +
                           " boxes but " + std::to_string(rec.polygons.size()) +
                           " polygon instances");
  }
  if (rec.pos_points_px && rec.pos_points_px->size() != rec.boxes_px.size()) {
    throw ConsistencyError("sample " + rec.sample_id + ": pos_points must match the boxes");
  }
  if (rec.neg_points_px && rec.neg_points_px->size() != rec.boxes_px.size()) {
    throw ConsistencyError("sample " + rec.sample_id + ": neg_points must match the boxes");
  }
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord rec;
  rec.sample_id = j.at("sample_id").get<std::string>();
  rec.image_id = j.at("image_id").get<std::string>();
  const auto& size = j.at("image_size");
  if (!size.is_array() || size.size() != 2) throw ConsistencyError("image_size must be [h, w]");
  rec.image_size = {size[1].get<std::int64_t>(), size[0].get<std::int64_t>()};
  rec.expression = j.value("expression", "");
  for (const auto& entry : j.value("polygons", json::array())) {
    rec.polygons.push_back(instance_rings(entry));
  }
  for (const auto& b : j.value("boxes", json::array())) rec.boxes_px.push_back(box_from(b));
  if (j.contains("pos_points") && !j["pos_points"].is_null()) {
    std::vector<std::array<Point2, 2>> pts;
    for (const auto& pair : j["pos_points"]) {
      if (!pair.is_array() || pair.size() != 2) {
        throw ConsistencyError("pos_points entries must hold two points");
      }
      pts.push_back({point_from(pair[0]), point_from(pair[1])});
    }
    rec.pos_points_px = std::move(pts);
  }
  if (j.contains("neg_points") && !j["neg_points"].is_null()) {
    std::vector<std::vector<Point2>> pts;
    for (const auto& list : j["neg_points"]) {
      std::vector<Point2> inst;
      for (const auto& p : list) inst.push_back(point_from(p));
      if (inst.size() > 2) throw ConsistencyError("at most two negative points per instance");
      pts.push_back(std::move(inst));
    }
    rec.neg_points_px = std::move(pts);
  }
  rec.is_no_target = j.at("no_target").get<bool>();
  validate_annotation(rec);
  for (const auto& inst : rec.polygons) {
    for (const auto& ring : inst) {
      if (ring.vertices.size() < 6 || ring.vertices.size() % 2 != 0) {
        throw InvalidGeometry("polygon needs at least 3 vertices");
      }
    }
  }
  return rec;
}

json annotation_to_json(const AnnotationRecord& rec) {
  json polygons = json::array();
  for (const auto& inst : rec.polygons) {
    json rings = json::array();
    for (const auto& ring : inst) rings.push_back(ring.vertices);
    polygons.push_back(inst.size() == 1 ? rings[0] : rings);
  }
  json boxes = json::array();
  for (const auto& b : rec.boxes_px) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
  json pos = nullptr, neg = nullptr;
  if (rec.pos_points_px) {
    pos = json::array();
    for (const auto& pair : *rec.pos_points_px) {
      pos.push_back({point_json(pair[0]), point_json(pair[1])});
    }
  }
  if (rec.neg_points_px) {
    neg = json::array();
    for (const auto& list : *rec.neg_points_px) {
      json inst = json::array();
      for (const auto& p : list) inst.push_back(point_json(p));
      neg.push_back(std::move(inst));
    }
  }
  return {{"sample_id", rec.sample_id},
          {"image_id", rec.image_id},
          {"image_size", {rec.image_size.height, rec.image_size.width}},
          {"expression", rec.expression},
          {"polygons", std::move(polygons)},
          {"boxes", std::move(boxes)},
          {"pos_points", std::move(pos)},
          {"neg_points", std::move(neg)},
          {"no_target", rec.is_no_target}};
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const json& j) {
    AnnotationRecord rec = annotation_from_json(j);
    if (!seen.insert(rec.sample_id).second) {
      throw DuplicateSample("duplicate sample_id " + rec.sample_id + " in " + path.string());
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
  std::vector<PredictionRecord> out;
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const json& j) {
    PredictionRecord rec{j.at("sample_id").get<std::string>(),
                         j.at("response").get<std::string>()};
    if (rec.sample_id.empty()) throw ConsistencyError("prediction has an empty sample_id");
    if (!seen.insert(rec.sample_id).second) {
      throw DuplicateSample("duplicate prediction for " + rec.sample_id);
    }
    out.push_back(std::move(rec));
  });
  return out;
}

std::vector<RolloutRecord> load_rollouts(const std::filesystem::path& path) {
  std::vector<RolloutRecord> out;
  for_each_jsonl(path, [&](const json& j) {
    out.push_back({j.at("group_id").get<std::string>(), j.at("rollout").get<std::string>(),
                   j.at("gt_ref").get<std::string>(), j});
  });
  return out;
}

std::set<std::string> load_id_list(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string id = trim_copy(line);
    if (!id.empty()) out.insert(std::move(id));
  }
  return out;
}

std::vector<SampleEvaluation> load_evaluations(const std::filesystem::path& path) {
  std::vector<SampleEvaluation> out;
  for_each_jsonl(path, [&](const json& j) { out.push_back(evaluation_from_json(j)); });
  return out;
}

std::vector<AnnotationRecord> import_coco(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(path.string() + " is not JSON");
  std::vector<AnnotationRecord> out;
  try {
    std::unordered_map<std::int64_t, std::pair<std::string, CoordSpace>> images;
    for (const auto& img : j.at("images")) {
      images[img.at("id").get<std::int64_t>()] = {
          std::to_string(img.at("id").get<std::int64_t>()),
          {img.at("width").get<std::int64_t>(), img.at("height").get<std::int64_t>()}};
    }
    std::unordered_map<std::int64_t, std::string> categories;
    for (const auto& c : j.value("categories", json::array())) {
      categories[c.at("id").get<std::int64_t>()] = c.value("name", "");
    }
    std::unordered_map<std::int64_t, const json*> anns;
    std::vector<std::int64_t> ann_order;
    for (const auto& a : j.at("annotations")) {
      const auto id = a.at("id").get<std::int64_t>();
      anns[id] = &a;
      ann_order.push_back(id);
    }
    auto add_instance = [&](AnnotationRecord& rec, const json& a) {
      const auto& seg = a.at("segmentation");
      if (!seg.is_array()) {
        throw ParseError("annotation " + a.at("id").dump() + ": only polygon segmentation is supported");
      }
      std::vector<Polygon> rings;
      for (const auto& ring : seg) rings.push_back({ring.get<std::vector<double>>()});
      rec.polygons.push_back(std::move(rings));
      const auto b = a.at("bbox").get<std::vector<double>>();
      if (b.size() != 4) throw ParseError("COCO bbox must be [x, y, w, h]");
      rec.boxes_px.push_back({b[0], b[1], b[0] + b[2], b[1] + b[3]});
    };
    auto image_of = [&](std::int64_t image_id) {
      const auto it = images.find(image_id);
      if (it == images.end()) throw ConsistencyError("unknown image id " + std::to_string(image_id));
      return it->second;
    };

    if (j.contains("refs")) {
      for (const auto& ref : j["refs"]) {
        const auto ref_id = ref.at("ref_id").get<std::int64_t>();
        const auto [image_id, size] = image_of(ref.at("image_id").get<std::int64_t>());
        std::vector<std::int64_t> ann_ids;
        if (ref.contains("ann_ids")) {
          ann_ids = ref["ann_ids"].get<std::vector<std::int64_t>>();
        } else if (ref.contains("ann_id") && !ref["ann_id"].is_null()) {
          ann_ids.push_back(ref["ann_id"].get<std::int64_t>());
        }
        std::vector<std::string> sentences;
        for (const auto& s : ref.value("sentences", json::array())) {
          sentences.push_back(s.is_string() ? s.get<std::string>() : s.at("sent").get<std::string>());
        }
        if (sentences.empty()) sentences.push_back("");
        for (std::size_t k = 0; k < sentences.size(); ++k) {
          AnnotationRecord rec;
          rec.sample_id = "ref-" + std::to_string(ref_id) + "-" + std::to_string(k);
          rec.image_id = image_id;
          rec.image_size = size;
          rec.expression = sentences[k];
          for (auto aid : ann_ids) {
            const auto it = anns.find(aid);
            if (it == anns.end()) throw ConsistencyError("ref references unknown annotation");
            add_instance(rec, *it->second);
          }
          rec.is_no_target = ann_ids.empty();
          validate_annotation(rec);
          out.push_back(std::move(rec));
        }
      }
    } else {
      for (auto id : ann_order) {
        const json& a = *anns[id];
        const auto [image_id, size] = image_of(a.at("image_id").get<std::int64_t>());
        AnnotationRecord rec;
        rec.sample_id = "ann-" + std::to_string(id);
        rec.image_id = image_id;
        rec.image_size = size;
        rec.expression = categories[a.value("category_id", std::int64_t{-1})];
        add_instance(rec, a);
        validate_annotation(rec);
        out.push_back(std::move(rec));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return out;
}

GroundTruth to_ground_truth(const AnnotationRecord& rec) {
  validate_annotation(rec);
  GroundTruth gt;
  gt.image_id = rec.image_id;
  gt.image = rec.image_size;
  gt.is_no_target = rec.is_no_target;
  for (const auto& rings : rec.polygons) gt.gt_masks.push_back(rasterize(rings, rec.image_size));
  for (const auto& b : rec.boxes_px) {
    gt.gt_boxes.push_back(rescale_box(b, rec.image_size, kNormalizedSpace));
  }
  if (rec.pos_points_px) {
    std::vector<std::array<Point2, 2>> pts;
    for (const auto& pair : *rec.pos_points_px) {
      pts.push_back({rescale_point(pair[0], rec.image_size, kNormalizedSpace),
                     rescale_point(pair[1], rec.image_size, kNormalizedSpace)});
    }
    gt.gt_points = std::move(pts);
  }
  return gt;
}

std::map<std::string, SyntheticScene> scenes_from_annotations(
    const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::pair<CoordSpace, std::vector<BinaryMask>>> acc;
  for (const auto& rec : records) {
    auto [it, inserted] = acc.try_emplace(rec.image_id, rec.image_size, std::vector<BinaryMask>{});
    if (it->second.first != rec.image_size) {
      throw ConsistencyError("image " + rec.image_id + " has conflicting sizes");
    }
    for (const auto& rings : rec.polygons) {
      BinaryMask m = rasterize(rings, rec.image_size);
      auto& masks = it->second.second;
      if (std::find(masks.begin(), masks.end(), m) == masks.end()) masks.push_back(std::move(m));
    }
  }
  std::map<std::string, SyntheticScene> out;
  for (auto& [id, entry] : acc) {
    out.emplace(id, SyntheticScene(entry.first, std::move(entry.second)));
  }
  return out;
}

std::string normalize_expression(std::string_view s) {
  std::string out = trim_copy(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

OverlapReport overlap_analysis(const TrainingSet& train,
                               const std::vector<AnnotationRecord>& val_records,
                               const std::vector<SampleEvaluation>& val_evals) {
  std::unordered_map<std::string, const SampleEvaluation*> by_id;
  for (const auto& e : val_evals) {
    if (!by_id.emplace(e.sample_id, &e).second) {
      throw AlignmentError("duplicate evaluation for sample " + e.sample_id);
    }
  }
  if (by_id.size() != val_records.size()) {
    throw AlignmentError(std::to_string(val_evals.size()) + " evaluations for " +
                         std::to_string(val_records.size()) + " records");
  }

  OverlapReport r;
  std::set<std::string> images, overlap_images;
  std::vector<SampleEvaluation> full, clean, overlap;
  for (const auto& rec : val_records) {
    const auto it = by_id.find(rec.sample_id);
    if (it == by_id.end()) throw AlignmentError("no evaluation for sample " + rec.sample_id);
    images.insert(rec.image_id);
    const bool shared = train.image_ids.count(rec.image_id) > 0;
    if (shared) overlap_images.insert(rec.image_id);
    if (!rec.expression.empty() &&
        train.expressions.count(normalize_expression(rec.expression)) > 0) {
      ++r.n_verbatim_expressions;
    }
    full.push_back(*it->second);
    (shared ? overlap : clean).push_back(*it->second);
  }
  r.n_val_images = static_cast<std::int64_t>(images.size());
  r.n_overlap_images = static_cast<std::int64_t>(overlap_images.size());
  r.pct_overlap = r.n_val_images > 0 ? 100.0 * static_cast<double>(r.n_overlap_images) /
                                           static_cast<double>(r.n_val_images)
                                     : 0.0;
  r.total_refs = static_cast<std::int64_t>(full.size());
  r.clean_refs = static_cast<std::int64_t>(clean.size());
  r.overlap_refs = static_cast<std::int64_t>(overlap.size());
  r.full_totals = totals_of(full);
  r.clean_totals = totals_of(clean);
  r.overlap_totals = totals_of(overlap);
  if (!full.empty()) r.full = build_report(full);
  if (!clean.empty()) r.clean = build_report(clean);
  if (!overlap.empty()) r.overlap = build_report(overlap);
  return r;
}

json overlap_to_json(const OverlapReport& r) {
  auto report = [](const std::optional<MetricReport>& m) {
    return m ? report_to_json(*m) : json(nullptr);
  };
  return {{"n_val_images", r.n_val_images},
          {"n_overlap_images", r.n_overlap_images},
          {"pct_overlap", r.pct_overlap},
          {"n_verbatim_expressions", r.n_verbatim_expressions},
          {"total_refs", r.total_refs},
          {"clean_refs", r.clean_refs},
          {"overlap_refs", r.overlap_refs},
          {"totals",
           {{"full", totals_json(r.full_totals)},
            {"clean", totals_json(r.clean_totals)},
            {"overlap", totals_json(r.overlap_totals)}}},
          {"full", report(r.full)},
          {"clean", report(r.clean)},
          {"overlap", report(r.overlap)}};
}

}  // namespace groundrl
