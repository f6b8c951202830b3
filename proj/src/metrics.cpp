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

#include "groundrl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "groundrl/errors.hpp"

namespace groundrl {

namespace {

void require_samples(std::span<const SampleEvaluation> samples, const char* what) {
  if (samples.empty()) throw EmptyEvaluation(std::string(what) + " of an empty sample set");
}

void check_alignment(std::span<const SampleBoxes> preds, std::span<const SampleBoxes> gts) {
  if (preds.size() != gts.size()) {
    throw AlignmentError("box AP got " + std::to_string(preds.size()) + " prediction and " +
                         std::to_string(gts.size()) + " ground-truth samples");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].sample_id != gts[i].sample_id) {
      throw AlignmentError("box AP sample mismatch: " + preds[i].sample_id + " vs " +
                           gts[i].sample_id);
    }
  }
}

std::size_t greedy_matches(const std::vector<Box>& preds, const std::vector<Box>& gts,
                           double threshold) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double iou = box_iou(preds[i], gts[j]);
      if (iou >= threshold) pairs.emplace_back(iou, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    return std::make_pair(std::get<1>(a), std::get<2>(a)) <
           std::make_pair(std::get<1>(b), std::get<2>(b));
  });
  std::vector<bool> used_p(preds.size(), false), used_g(gts.size(), false);
  std::size_t tp = 0;
  for (const auto& [iou, i, j] : pairs) {
    if (used_p[i] || used_g[j]) continue;
    used_p[i] = used_g[j] = true;
    ++tp;
  }
  return tp;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", *v);
  return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

SampleEvaluation evaluate_sample(std::string sample_id, const BinaryMask& predicted,
                                 const BinaryMask& gt, bool is_no_target_gt,
                                 bool predicted_no_target) {
  const OverlapCounts o = mask_overlap(predicted, gt);
  SampleEvaluation e;
  e.sample_id = std::move(sample_id);
  e.intersection = o.intersection;
  e.uni = o.uni;
  e.iou = o.uni > 0 ? static_cast<double>(o.intersection) / static_cast<double>(o.uni) : 1.0;
  e.is_no_target_gt = is_no_target_gt;
  e.predicted_no_target = predicted_no_target;
  return e;
}

double ciou(std::span<const SampleEvaluation> samples) {
  require_samples(samples, "cIoU");
  std::int64_t inter = 0, uni = 0;
  for (const auto& s : samples) {
    inter += s.intersection;
    uni += s.uni;
  }
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

double miou(std::span<const SampleEvaluation> samples) {
  require_samples(samples, "mIoU");
  double sum = 0.0;
  for (const auto& s : samples) sum += s.iou;
  return sum / static_cast<double>(samples.size());
}

double precision_at(std::span<const SampleEvaluation> samples, double tau) {
  require_samples(samples, "P@tau");
  const auto hits = std::count_if(samples.begin(), samples.end(),
                                  [tau](const SampleEvaluation& s) { return s.iou >= tau; });
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double box_ap_at(std::span<const SampleBoxes> preds, std::span<const SampleBoxes> gts,
                 double threshold) {
  check_alignment(preds, gts);
  std::size_t tp = 0, n_pred = 0, n_gt = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp += greedy_matches(preds[i].boxes, gts[i].boxes, threshold);
    n_pred += preds[i].boxes.size();
    n_gt += gts[i].boxes.size();
  }
  if (n_pred == 0 || n_gt == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(n_pred);
  const double recall = static_cast<double>(tp) / static_cast<double>(n_gt);
  return precision * recall;
}

BoxApResult box_ap(std::span<const SampleBoxes> preds, std::span<const SampleBoxes> gts) {
  BoxApResult out;
  double sum = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double t = static_cast<double>(50 + 5 * k) / 100.0;
    const double v = box_ap_at(preds, gts, t);
    sum += v;
    if (k == 0) out.ap50 = v;
    if (k == 5) out.ap75 = v;
  }
  out.ap = sum / 10.0;
  return out;
}

NoTargetMetrics no_target_metrics(std::span<const SampleEvaluation> samples) {
  std::int64_t n_nt = 0, n_t = 0, correct = 0, false_neg = 0;
  for (const auto& s : samples) {
    if (s.is_no_target_gt) {
      ++n_nt;
      if (s.predicted_no_target) ++correct;
    } else {
      ++n_t;
      if (s.predicted_no_target) ++false_neg;
    }
  }
  NoTargetMetrics out;
  if (n_nt > 0) out.no_target_acc = static_cast<double>(correct) / static_cast<double>(n_nt);
  if (n_t > 0) out.false_negative_rate = static_cast<double>(false_neg) / static_cast<double>(n_t);
  return out;
}

MetricReport build_report(std::span<const SampleEvaluation> samples,
                          const std::optional<BoxApResult>& boxes, ReportOptions opts) {
  MetricReport r;
  std::vector<SampleEvaluation> targets;
  for (const auto& s : samples) {
    if (!s.is_no_target_gt) targets.push_back(s);
  }
  r.n_samples = static_cast<std::int64_t>(samples.size());
  r.n_target = static_cast<std::int64_t>(targets.size());
  r.n_no_target = r.n_samples - r.n_target;
  if (!targets.empty()) {
    r.ciou = ciou(targets);
    r.miou = miou(targets);
    r.p50 = precision_at(targets, 0.5);
    r.p70 = precision_at(targets, 0.7);
    r.p90 = precision_at(targets, 0.9);
  }
  if (boxes) {
    r.ap = boxes->ap;
    r.ap50 = boxes->ap50;
    r.ap75 = boxes->ap75;
  }
  const NoTargetMetrics nt = no_target_metrics(samples);
  r.no_target_acc = nt.no_target_acc;
  r.fnr = nt.false_negative_rate;
  if (opts.overall && !samples.empty()) {
    std::vector<SampleEvaluation> all(samples.begin(), samples.end());
    for (auto& s : all) {
      if (s.is_no_target_gt) s.iou = s.uni == 0 ? 1.0 : 0.0;
    }
    r.overall_ciou = ciou(all);
    r.overall_miou = miou(all);
  }
  return r;
}

nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j = {{"ciou", opt_json(r.ciou)},
                      {"miou", opt_json(r.miou)},
                      {"p50", opt_json(r.p50)},
                      {"p70", opt_json(r.p70)},
                      {"p90", opt_json(r.p90)},
                      {"ap", opt_json(r.ap)},
                      {"ap50", opt_json(r.ap50)},
                      {"ap75", opt_json(r.ap75)},
                      {"no_target_acc", opt_json(r.no_target_acc)},
                      {"fnr", opt_json(r.fnr)},
                      {"n_samples", r.n_samples},
                      {"n_target", r.n_target},
                      {"n_no_target", r.n_no_target}};
  if (r.overall_ciou) j["overall_ciou"] = *r.overall_ciou;
  if (r.overall_miou) j["overall_miou"] = *r.overall_miou;
  return j;
}

std::string report_to_tsv(const MetricReport& r) {
  std::string out = "ciou\tmiou\tp50\tp70\tp90\tap\tap50\tap75\tno_target_acc\tfnr\n";
  const std::optional<double> vals[] = {r.ciou, r.miou, r.p50, r.p70, r.p90,
                                        r.ap,   r.ap50, r.ap75, r.no_target_acc, r.fnr};
  for (std::size_t i = 0; i < std::size(vals); ++i) {
    if (i > 0) out += '\t';
    out += fmt(vals[i]);
  }
  out += '\n';
  return out;
}

nlohmann::json evaluation_to_json(const SampleEvaluation& e) {
  return {{"sample_id", e.sample_id},
          {"intersection", e.intersection},
          {"union", e.uni},
          {"iou", e.iou},
          {"is_no_target_gt", e.is_no_target_gt},
          {"predicted_no_target", e.predicted_no_target},
          {"box_iou_best", opt_json(e.box_iou_best)}};
}

SampleEvaluation evaluation_from_json(const nlohmann::json& j) {
  SampleEvaluation e;
  e.sample_id = j.at("sample_id").get<std::string>();
  e.intersection = j.at("intersection").get<std::int64_t>();
  e.uni = j.at("union").get<std::int64_t>();
  if (e.intersection < 0 || e.uni < e.intersection) {
    throw ConsistencyError("sample " + e.sample_id + " has inconsistent overlap counts");
  }
  e.iou = j.contains("iou") ? j["iou"].get<double>()
                            : (e.uni > 0 ? static_cast<double>(e.intersection) /
                                               static_cast<double>(e.uni)
                                         : 1.0);
  e.is_no_target_gt = j.value("is_no_target_gt", false);
  e.predicted_no_target = j.value("predicted_no_target", false);
  if (j.contains("box_iou_best") && !j["box_iou_best"].is_null()) {
    e.box_iou_best = j["box_iou_best"].get<double>();
  }
  return e;
}

}  // namespace groundrl
