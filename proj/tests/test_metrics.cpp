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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "groundrl/errors.hpp"
#include "groundrl/metrics.hpp"

using namespace groundrl;

namespace {

SampleEvaluation ev(std::string id, std::int64_t inter, std::int64_t uni, bool nt_gt = false,
                    bool nt_pred = false) {
  SampleEvaluation e;
  e.sample_id = std::move(id);
  e.intersection = inter;
  e.uni = uni;
  e.iou = uni > 0 ? double(inter) / double(uni) : 1.0;
  e.is_no_target_gt = nt_gt;
  e.predicted_no_target = nt_pred;
  return e;
}

std::vector<SampleEvaluation> with_ious(std::initializer_list<double> ious) {
  std::vector<SampleEvaluation> out;
  for (double v : ious) {
    SampleEvaluation e;
    e.iou = v;
    out.push_back(e);
  }
  return out;
}

}  // namespace

TEST(Metrics, EvaluateSample) {
  BinaryMask a(4, 1, {1, 1, 1, 0}), b(4, 1, {0, 1, 1, 1});
  const auto e = evaluate_sample("s", a, b, false, false);
  EXPECT_EQ(e.intersection, 2);
  EXPECT_EQ(e.uni, 4);
  EXPECT_DOUBLE_EQ(e.iou, 0.5);
  EXPECT_DOUBLE_EQ(evaluate_sample("z", BinaryMask(2, 2), BinaryMask(2, 2), true, true).iou, 1.0);
}

TEST(Metrics, CiouVsMiou) {
  const std::vector<SampleEvaluation> s{ev("a", 90, 100), ev("b", 1, 10)};
  EXPECT_NEAR(ciou(s), 91.0 / 110.0, 1e-12);
  EXPECT_NEAR(ciou(s), 0.8273, 1e-4);
  EXPECT_DOUBLE_EQ(miou(s), 0.5);
  const std::vector<SampleEvaluation> rev{s[1], s[0]};
  EXPECT_EQ(miou(rev), miou(s));
  EXPECT_EQ(ciou(rev), ciou(s));
  const std::vector<SampleEvaluation> one{ev("a", 3, 7)};
  EXPECT_DOUBLE_EQ(ciou(one), 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(miou(one), 3.0 / 7.0);
  const std::vector<SampleEvaluation> perfect{ev("a", 5, 5), ev("b", 9, 9)};
  EXPECT_EQ(ciou(perfect), 1.0);
  EXPECT_EQ(miou(perfect), 1.0);
}

TEST(Metrics, EmptyInputThrows) {
  const std::vector<SampleEvaluation> none;
  EXPECT_THROW(ciou(none), EmptyEvaluation);
  EXPECT_THROW(miou(none), EmptyEvaluation);
  EXPECT_THROW(precision_at(none, 0.5), EmptyEvaluation);
}

TEST(Metrics, PrecisionInclusive) {
  const auto s = with_ious({0.4, 0.5, 0.6});
  EXPECT_DOUBLE_EQ(precision_at(s, 0.5), 2.0 / 3.0);
  EXPECT_EQ(precision_at(s, 0.1), 1.0);
  EXPECT_EQ(precision_at(s, 0.9), 0.0);
}

TEST(Metrics, RandomProperties) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> uni(1, 300), n(1, 40);
  for (int t = 0; t < 300; ++t) {
    std::vector<SampleEvaluation> s;
    const int k = n(rng);
    double lo = 1, hi = 0;
    for (int i = 0; i < k; ++i) {
      const int u = uni(rng);
      const int in = std::uniform_int_distribution<int>(0, u)(rng);
      s.push_back(ev("s" + std::to_string(i), in, u));
      lo = std::min(lo, s.back().iou);
      hi = std::max(hi, s.back().iou);
    }
    const double c = ciou(s);
    EXPECT_GE(c, lo - 1e-15);
    EXPECT_LE(c, hi + 1e-15);
    double prev = 2;
    for (int j = 0; j <= 100; ++j) {
      const double p = precision_at(s, j / 100.0);
      EXPECT_LE(p, prev);
      prev = p;
    }
    EXPECT_LE(precision_at(s, 0.9), precision_at(s, 0.7));
    EXPECT_LE(precision_at(s, 0.7), precision_at(s, 0.5));
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(ciou(shuffled), c);
    EXPECT_NEAR(miou(shuffled), miou(s), 1e-12);
  }
}

TEST(Metrics, EqualUnionsMakeCiouEqualMiou) {
  std::vector<SampleEvaluation> s;
  for (int i = 0; i < 17; ++i) s.push_back(ev("s", (i * 7) % 64, 64));
  EXPECT_NEAR(ciou(s), miou(s), 1e-12);
}

TEST(BoxAp, Exact) {
  const std::vector<SampleBoxes> gts{{"a", {{0, 0, 10, 10}}}, {"b", {{5, 5, 9, 9}, {20, 20, 30, 30}}}};
  const auto r = box_ap(gts, gts);
  EXPECT_EQ(r.ap, 1.0);
  EXPECT_EQ(r.ap50, 1.0);
  EXPECT_EQ(r.ap75, 1.0);
  auto fewer = gts;
  fewer[1].boxes.pop_back();
  EXPECT_LT(box_ap(fewer, gts).ap50, 1.0);
}

TEST(BoxAp, NoPredictions) {
  const std::vector<SampleBoxes> gts{{"a", {{0, 0, 10, 10}}}};
  const std::vector<SampleBoxes> preds{{"a", {}}};
  const auto r = box_ap(preds, gts);
  EXPECT_EQ(r.ap, 0.0);
  EXPECT_EQ(r.ap50, 0.0);
}

TEST(BoxAp, HalfMatched) {
  // IoU of [0,0,10,10] with [0,0,10,6] is 0.6.
  std::vector<SampleBoxes> preds, gts;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    gts.push_back({id, {{0, 0, 10, 10}}});
    preds.push_back({id, {i % 2 == 0 ? Box{0, 0, 10, 6} : Box{50, 50, 60, 60}}});
  }
  const auto r = box_ap(preds, gts);
  EXPECT_DOUBLE_EQ(r.ap50, 0.25);
  EXPECT_DOUBLE_EQ(r.ap75, 0.0);
  EXPECT_DOUBLE_EQ(box_ap_at(preds, gts, 0.6), 0.25);
  EXPECT_DOUBLE_EQ(box_ap_at(preds, gts, 0.65), 0.0);
  EXPECT_DOUBLE_EQ(r.ap, 0.25 * 3 / 10);
}

TEST(BoxAp, OneToOne) {
  const std::vector<SampleBoxes> gts{{"a", {{0, 0, 10, 10}}}};
  const std::vector<SampleBoxes> preds{{"a", {{0, 0, 10, 10}, {0, 0, 10, 10}}}};
  EXPECT_DOUBLE_EQ(box_ap_at(preds, gts, 0.5), 0.5);
}

TEST(BoxAp, Alignment) {
  const std::vector<SampleBoxes> a{{"a", {}}}, b{{"b", {}}}, two{{"a", {}}, {"b", {}}};
  EXPECT_THROW(box_ap(a, b), AlignmentError);
  EXPECT_THROW(box_ap(a, two), AlignmentError);
}

TEST(NoTarget, Counts) {
  std::vector<SampleEvaluation> s;
  for (int i = 0; i < 358; ++i) s.push_back(ev("n", 0, 0, true, i < 295));
  for (int i = 0; i < 642; ++i) s.push_back(ev("t", 1, 2, false, i < 3));
  const auto m = no_target_metrics(s);
  EXPECT_NEAR(*m.no_target_acc * 100, 82.40, 0.01);
  EXPECT_NEAR(*m.false_negative_rate * 100, 0.467, 0.01);
  const std::vector<SampleEvaluation> targets_only{ev("t", 1, 2)};
  EXPECT_FALSE(no_target_metrics(targets_only).no_target_acc);
  EXPECT_EQ(*no_target_metrics(targets_only).false_negative_rate, 0.0);
}

TEST(Report, TargetOnlyMaskMetrics) {
  const std::vector<SampleEvaluation> s{ev("a", 9, 10), ev("b", 0, 0, true, true),
                                        ev("c", 0, 5, true, false)};
  const auto r = build_report(s);
  EXPECT_DOUBLE_EQ(*r.ciou, 0.9);
  EXPECT_DOUBLE_EQ(*r.miou, 0.9);
  EXPECT_DOUBLE_EQ(*r.p90, 1.0);
  EXPECT_DOUBLE_EQ(*r.no_target_acc, 0.5);
  EXPECT_FALSE(r.ap);
  EXPECT_FALSE(r.overall_ciou);
  EXPECT_EQ(r.n_target, 1);
  EXPECT_EQ(r.n_no_target, 2);

  const auto o = build_report(s, std::nullopt, ReportOptions{true});
  EXPECT_DOUBLE_EQ(*o.overall_ciou, 9.0 / 15.0);
  EXPECT_DOUBLE_EQ(*o.overall_miou, (0.9 + 1.0 + 0.0) / 3.0);
}

TEST(Report, AbsentValues) {
  const std::vector<SampleEvaluation> s{ev("b", 0, 0, true, true)};
  const auto r = build_report(s);
  EXPECT_FALSE(r.ciou);
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["ciou"].is_null());
  EXPECT_EQ(j["no_target_acc"].get<double>(), 1.0);
  const std::string tsv = report_to_tsv(r);
  EXPECT_EQ(tsv, "ciou\tmiou\tp50\tp70\tp90\tap\tap50\tap75\tno_target_acc\tfnr\n"
                 "NA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t1\tNA\n");
}

TEST(Report, EvaluationJsonRoundTrip) {
  auto e = ev("x", 3, 8, false, false);
  e.box_iou_best = 0.75;
  EXPECT_EQ(evaluation_from_json(evaluation_to_json(e)), e);
  const auto bare = evaluation_from_json(
      nlohmann::json::parse(R"({"sample_id":"y","intersection":1,"union":4})"));
  EXPECT_DOUBLE_EQ(bare.iou, 0.25);
  EXPECT_THROW(evaluation_from_json(
                   nlohmann::json::parse(R"({"sample_id":"y","intersection":5,"union":4})")),
               ConsistencyError);
}
