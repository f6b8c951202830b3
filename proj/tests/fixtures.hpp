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

#ifndef GROUNDRL_TESTS_FIXTURES_HPP_
#define GROUNDRL_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "groundrl/dataset_io.hpp"
#include "groundrl/metrics.hpp"

namespace fixtures {

// Validation split with 2573 refs over 1300 images. The first 634 images
// also occur in training and carry 1506 refs; the other 666 carry 1067.
struct OverlapFixture {
  groundrl::TrainingSet train;
  std::vector<groundrl::AnnotationRecord> records;
  std::vector<groundrl::SampleEvaluation> evals;
};

inline OverlapFixture make_overlap_fixture() {
  constexpr int kImages = 1300, kShared = 634, kSharedRefs = 1506, kCleanRefs = 1067;
  OverlapFixture f;
  auto refs_for = [](int image, int n_images, int total) {
    // Spread `total` refs as evenly as possible over `n_images`.
    return total / n_images + (image < total % n_images ? 1 : 0);
  };
  int ref = 0;
  for (int i = 0; i < kImages; ++i) {
    const bool shared = i < kShared;
    const std::string image_id = "val-img-" + std::to_string(i);
    if (shared) f.train.image_ids.insert(image_id);
    const int n = shared ? refs_for(i, kShared, kSharedRefs)
                         : refs_for(i - kShared, kImages - kShared, kCleanRefs);
    for (int k = 0; k < n; ++k, ++ref) {
      groundrl::AnnotationRecord rec;
      rec.sample_id = "ref-" + std::to_string(ref);
      rec.image_id = image_id;
      rec.image_size = {8, 8};
      rec.expression = "object " + std::to_string(ref % 97);
      rec.polygons = {{groundrl::Polygon{{0, 0, 4, 0, 4, 4, 0, 4}}}};
      rec.boxes_px = {{0, 0, 4, 4}};
      f.records.push_back(rec);
      groundrl::SampleEvaluation e;
      e.sample_id = rec.sample_id;
      e.uni = 16 + ref % 13;
      e.intersection = (ref * 7) % (e.uni + 1);
      e.iou = static_cast<double>(e.intersection) / static_cast<double>(e.uni);
      f.evals.push_back(e);
    }
  }
  // Training expressions: one verbatim hit per 97-cycle residue below 5.
  for (int k = 0; k < 5; ++k) f.train.expressions.insert("object " + std::to_string(k));
  return f;
}

inline void write_overlap_fixture(const OverlapFixture& f, const std::filesystem::path& dir) {
  std::ofstream ids(dir / "train_ids.txt");
  for (const auto& id : f.train.image_ids) ids << id << "\n";
  std::ofstream ann(dir / "val.jsonl");
  for (const auto& r : f.records) ann << groundrl::annotation_to_json(r).dump() << "\n";
  std::ofstream ev(dir / "val_evals.jsonl");
  for (const auto& e : f.evals) ev << groundrl::evaluation_to_json(e).dump() << "\n";
}

}  // namespace fixtures

#endif  // GROUNDRL_TESTS_FIXTURES_HPP_
