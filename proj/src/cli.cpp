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

#include "groundrl/cli.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "groundrl/config.hpp"
#include "groundrl/dataset_io.hpp"
#include "groundrl/errors.hpp"
#include "groundrl/grpo.hpp"
#include "groundrl/metrics.hpp"
#include "groundrl/parallel.hpp"
#include "groundrl/reward_engine.hpp"
#include "groundrl/segmenter.hpp"
#include "groundrl/segmenter_wire.hpp"

namespace groundrl {

namespace {

using nlohmann::json;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

struct SegmenterOptions {
  std::string kind = "stub";
  std::string endpoint;
  std::string scene_path;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

RunConfig load_run_config(const GlobalOptions& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) load_config_file(cfg, g.config_path);
  if (g.seed) cfg.grpo.seed = *g.seed;
  return cfg;
}

std::unique_ptr<Segmenter> make_segmenter(const SegmenterOptions& opts,
                                          const std::vector<AnnotationRecord>& records,
                                          int jobs) {
  if (opts.kind == "remote") {
    if (opts.endpoint.empty()) throw ConfigError("--segmenter remote needs --endpoint");
    RemoteOptions ro;
    ro.max_in_flight = std::max(1, jobs);
    return std::make_unique<RemoteSegmenter>(opts.endpoint, ro);
  }
  if (opts.kind != "stub") throw ConfigError("unknown segmenter '" + opts.kind + "'");
  if (!opts.scene_path.empty()) return std::make_unique<StubSegmenter>(load_scenes(opts.scene_path));
  return std::make_unique<StubSegmenter>(scenes_from_annotations(records));
}

void add_segmenter_options(CLI::App* cmd, SegmenterOptions& opts) {
  cmd->add_option("--segmenter", opts.kind, "stub or remote")
      ->check(CLI::IsMember({"stub", "remote"}));
  cmd->add_option("--endpoint", opts.endpoint, "base URL of a remote segmenter");
  cmd->add_option("--scene", opts.scene_path,
                  "scene file for the stub (defaults to the annotated instances)");
}

std::map<std::string, const AnnotationRecord*> index_records(
    const std::vector<AnnotationRecord>& records) {
  std::map<std::string, const AnnotationRecord*> out;
  for (const auto& r : records) out[r.sample_id] = &r;
  return out;
}

std::filesystem::path sibling(const std::filesystem::path& p, const std::string& ext) {
  std::filesystem::path out = p;
  out.replace_extension(ext);
  return out;
}

// ---- score ----------------------------------------------------------------

struct ScoreOptions {
  std::string rollouts, annotations, out, mode = "distance";
  SegmenterOptions seg;
};

int cmd_score(const ScoreOptions& o, const GlobalOptions& g, std::ostream& out) {
  const RunConfig cfg = load_run_config(g);
  validate_reward_config(cfg.reward);
  const auto mode = parse_reward_mode(o.mode);
  if (!mode) throw ConfigError("unknown reward mode '" + o.mode + "'");

  const auto records = load_annotations(o.annotations);
  const auto rollouts = load_rollouts(o.rollouts);
  const auto by_id = index_records(records);

  std::map<std::string, GroundTruth> truths;
  for (const auto& r : rollouts) {
    const auto it = by_id.find(r.gt_ref);
    if (it == by_id.end()) throw AlignmentError("rollout references unknown gt_ref " + r.gt_ref);
    if (!truths.count(r.gt_ref)) truths.emplace(r.gt_ref, to_ground_truth(*it->second));
  }
  std::unique_ptr<Segmenter> seg;
  if (*mode == RewardMode::kSamLoop) seg = make_segmenter(o.seg, records, g.jobs);

  std::vector<RewardBreakdown> breakdowns(rollouts.size());
  parallel_for(rollouts.size(), g.jobs, [&](std::size_t i) {
    const auto& r = rollouts[i];
    const GroundTruth& gt = truths.at(r.gt_ref);
    const ParsedResponse pr = parse_response(r.rollout);
    breakdowns[i] = *mode == RewardMode::kDistance
                        ? distance_reward(r.rollout, pr, gt, cfg.reward)
                        : sam_loop_reward(r.rollout, pr, gt, *seg, cfg.reward);
  });

  // Group-relative advantages over rollouts sharing a group_id.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rollouts.size(); ++i) groups[rollouts[i].group_id].push_back(i);
  std::vector<std::optional<double>> advantages(rollouts.size());
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) continue;
    std::vector<double> totals;
    for (auto i : members) totals.push_back(breakdowns[i].total);
    const auto adv = normalize_group(totals, cfg.grpo.std_epsilon);
    for (std::size_t k = 0; k < members.size(); ++k) advantages[members[k]] = adv[k];
  }

  std::string body;
  RewardComponents sums;
  double total_sum = 0.0;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    json line = rollouts[i].source;
    line["breakdown"] = breakdown_to_json(breakdowns[i]);
    if (advantages[i]) line["advantage"] = *advantages[i];
    body += line.dump() + "\n";
    const auto& c = breakdowns[i].components;
    total_sum += breakdowns[i].total;
    sums.format += c.format;
    sums.think += c.think;
    sums.bbox += c.bbox;
    sums.point += c.point;
    sums.repetition += c.repetition;
    sums.sam_iou += c.sam_iou;
    sums.neg_validity += c.neg_validity;
    sums.no_target += c.no_target;
  }
  const std::string out_path = o.out.empty() ? o.rollouts + ".scored.jsonl" : o.out;
  write_file_atomic(out_path, body);

  const double n = std::max<double>(1.0, static_cast<double>(rollouts.size()));
  out << "scored " << rollouts.size() << " rollouts in " << groups.size() << " groups ("
      << reward_mode_name(*mode) << ")\n";
  out << "mean total: " << fmt(total_sum / n) << "\n";
  for (const auto& [name, value] : sums.named()) {
    out << "  " << name << ": " << fmt(value / n) << "\n";
  }
  out << "wrote " << out_path << "\n";
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string predictions, annotations, report, evals_out, prompt_mode = "box_2pt";
  bool overall = false;
  SegmenterOptions seg;
};

struct EvalResult {
  std::vector<SampleEvaluation> samples;
  std::vector<SampleBoxes> pred_boxes, gt_boxes;
};

EvalResult evaluate_predictions(const std::vector<AnnotationRecord>& records,
                                const std::map<std::string, const PredictionRecord*>& preds,
                                const Segmenter& seg, PromptMode mode, int jobs) {
  EvalResult res;
  res.samples.resize(records.size());
  res.pred_boxes.resize(records.size());
  res.gt_boxes.resize(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const AnnotationRecord& rec = records[i];
    const GroundTruth gt = to_ground_truth(rec);
    BinaryMask gt_mask = gt.gt_masks.empty() ? BinaryMask(gt.image.width, gt.image.height)
                                             : mask_union(gt.gt_masks);
    BinaryMask pred_mask(gt.image.width, gt.image.height);
    bool predicted_no_target = false;
    std::vector<Box> boxes;
    const auto it = preds.find(rec.sample_id);
    if (it != preds.end()) {
      const ParsedResponse pr = parse_response(it->second->raw_response);
      if (pr.prediction && pr.prediction->no_target) {
        predicted_no_target = true;
      } else if (pr.prediction) {
        std::vector<BinaryMask> masks;
        for (const auto& inst : pr.prediction->instances) {
          boxes.push_back(inst.bbox);
          SegmentRequest req;
          req.image.id = rec.image_id;
          req.box = rescale_box(inst.bbox, kNormalizedSpace, gt.image);
          for (const auto& p : inst.points) {
            req.pos_points.push_back(rescale_point(p, kNormalizedSpace, gt.image));
          }
          for (const auto& p : inst.neg_points) {
            req.neg_points.push_back(rescale_point(p, kNormalizedSpace, gt.image));
          }
          req.mode = mode;
          masks.push_back(rle_decode(seg.segment(req).mask));
        }
        pred_mask = mask_union(masks);
      }
    }
    SampleEvaluation e =
        evaluate_sample(rec.sample_id, pred_mask, gt_mask, rec.is_no_target, predicted_no_target);
    if (!boxes.empty() && !gt.gt_boxes.empty()) {
      double best = 0.0;
      for (const auto& b : boxes) {
        for (const auto& gb : gt.gt_boxes) best = std::max(best, box_iou(b, gb));
      }
      e.box_iou_best = best;
    }
    res.samples[i] = std::move(e);
    res.pred_boxes[i] = {rec.sample_id, std::move(boxes)};
    res.gt_boxes[i] = {rec.sample_id, gt.gt_boxes};
  });
  return res;
}

int cmd_eval(const EvalOptions& o, const GlobalOptions& g, std::ostream& out) {
  std::vector<PromptMode> modes;
  if (o.prompt_mode == "all") {
    modes.assign(std::begin(kAllPromptModes), std::end(kAllPromptModes));
  } else {
    const auto m = parse_prompt_mode(o.prompt_mode);
    if (!m) throw ConfigError("unknown prompt mode '" + o.prompt_mode + "'");
    modes.push_back(*m);
  }
  const auto records = load_annotations(o.annotations);
  const auto predictions = load_predictions(o.predictions);
  const auto by_id = index_records(records);
  std::map<std::string, const PredictionRecord*> preds;
  for (const auto& p : predictions) {
    if (!by_id.count(p.sample_id)) {
      throw AlignmentError("prediction for unknown sample_id " + p.sample_id);
    }
    preds[p.sample_id] = &p;
  }
  const auto seg = make_segmenter(o.seg, records, g.jobs);

  for (PromptMode mode : modes) {
    const EvalResult res = evaluate_predictions(records, preds, *seg, mode, g.jobs);
    const MetricReport report = build_report(res.samples, box_ap(res.pred_boxes, res.gt_boxes),
                                             ReportOptions{o.overall});
    std::filesystem::path report_path = o.report;
    std::filesystem::path evals_path = o.evals_out;
    if (modes.size() > 1) {
      const std::string suffix = "." + std::string(prompt_mode_name(mode));
      report_path = report_path.parent_path() /
                    (report_path.stem().string() + suffix + report_path.extension().string());
      if (!evals_path.empty()) {
        evals_path = evals_path.parent_path() /
                     (evals_path.stem().string() + suffix + evals_path.extension().string());
      }
    }
    json j = report_to_json(report);
    j["prompt_mode"] = prompt_mode_name(mode);
    write_file_atomic(report_path, j.dump(2) + "\n");
    write_file_atomic(sibling(report_path, ".tsv"), report_to_tsv(report));
    if (!evals_path.empty()) {
      std::string body;
      for (const auto& e : res.samples) body += evaluation_to_json(e).dump() + "\n";
      write_file_atomic(evals_path, body);
    }
    out << prompt_mode_name(mode) << ": " << report.n_samples << " samples";
    if (report.ciou) out << ", cIoU " << fmt(*report.ciou) << ", mIoU " << fmt(*report.miou);
    if (report.no_target_acc) out << ", no-target acc " << fmt(*report.no_target_acc);
    out << "\n  wrote " << report_path.string() << "\n";
  }
  const auto missing = records.size() - preds.size();
  if (missing > 0) out << missing << " samples had no prediction and were scored as empty\n";
  return kExitOk;
}

// ---- overlap --------------------------------------------------------------

struct OverlapOptions {
  std::string train_ids, train_annotations, annotations, evals, report;
};

int cmd_overlap(const OverlapOptions& o, std::ostream& out) {
  TrainingSet train;
  train.image_ids = load_id_list(o.train_ids);
  if (!o.train_annotations.empty()) {
    for (const auto& r : load_annotations(o.train_annotations)) {
      train.image_ids.insert(r.image_id);
      if (!r.expression.empty()) train.expressions.insert(normalize_expression(r.expression));
    }
  }
  const auto records = load_annotations(o.annotations);
  const auto evals = load_evaluations(o.evals);
  const OverlapReport r = overlap_analysis(train, records, evals);
  write_file_atomic(o.report, overlap_to_json(r).dump(2) + "\n");
  out << r.n_overlap_images << " of " << r.n_val_images << " validation images overlap ("
      << fmt(r.pct_overlap) << "%)\n";
  out << "refs: " << r.total_refs << " total, " << r.clean_refs << " clean, " << r.overlap_refs
      << " overlap; " << r.n_verbatim_expressions << " verbatim expressions\n";
  auto line = [&](const char* name, const std::optional<MetricReport>& m) {
    out << "  " << name << ": ";
    if (m && m->ciou) {
      out << "cIoU " << fmt(*m->ciou) << "\n";
    } else {
      out << "absent\n";
    }
  };
  line("full", r.full);
  line("clean", r.clean);
  line("overlap", r.overlap);
  out << "wrote " << o.report << "\n";
  return kExitOk;
}

// ---- train-toy ------------------------------------------------------------

struct TrainOptions {
  long steps = 2000;
  std::string mode = "distance", trace;
};

int cmd_train_toy(const TrainOptions& o, const GlobalOptions& g, std::ostream& out) {
  const RunConfig cfg = load_run_config(g);
  const auto mode = parse_reward_mode(o.mode);
  if (!mode) throw ConfigError("unknown reward mode '" + o.mode + "'");
  const TrainingTrace trace = train_toy(cfg.grpo, o.steps, *mode, cfg.reward, g.jobs);
  write_file_atomic(o.trace, trace_to_csv(trace.steps));
  if (!trace.steps.empty()) {
    const std::size_t window = std::min<std::size_t>(100, trace.steps.size());
    double tail = 0.0;
    for (std::size_t i = trace.steps.size() - window; i < trace.steps.size(); ++i) {
      tail += trace.steps[i].mean_reward;
    }
    out << "step 0 mean reward: " << fmt(trace.steps.front().mean_reward) << "\n";
    out << "final mean reward (last " << window << " steps): " << fmt(tail / window) << "\n";
  }
  out << "held-out no-target accuracy: " << fmt(trace.held_out.no_target_acc)
      << ", false-negative rate: " << fmt(trace.held_out.false_negative_rate) << "\n";
  out << "wrote " << o.trace << "\n";
  return kExitOk;
}

// ---- import-coco ----------------------------------------------------------

int cmd_import_coco(const std::string& input, const std::string& output, std::ostream& out) {
  const auto records = import_coco(input);
  std::string body;
  for (const auto& r : records) body += annotation_to_json(r).dump() + "\n";
  write_file_atomic(output, body);
  out << "imported " << records.size() << " records into " << output << "\n";
  return kExitOk;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw ParseError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ParseError("cannot move output into place at " + path.string());
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reward computation and evaluation for box-and-keypoint grounding"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value file overriding defaults");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  ScoreOptions so;
  auto* score = app.add_subcommand("score", "score rollouts against annotations");
  score->add_option("--rollouts", so.rollouts, "rollout JSONL")->required();
  score->add_option("--annotations", so.annotations, "annotation JSONL")->required();
  score->add_option("--mode", so.mode, "distance or sam_loop")
      ->check(CLI::IsMember({"distance", "sam_loop"}));
  score->add_option("--out", so.out, "output JSONL (default <rollouts>.scored.jsonl)");
  add_segmenter_options(score, so.seg);

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "segment predictions and compute metrics");
  eval->add_option("--predictions", eo.predictions, "prediction JSONL")->required();
  eval->add_option("--annotations", eo.annotations, "annotation JSONL")->required();
  eval->add_option("--prompt-mode", eo.prompt_mode, "box_only, box_1pt, box_2pt or all")
      ->check(CLI::IsMember({"box_only", "box_1pt", "box_2pt", "all"}));
  eval->add_option("--report", eo.report, "report JSON path; TSV written alongside")->required();
  eval->add_option("--evals-out", eo.evals_out, "per-sample evaluation JSONL");
  eval->add_flag("--overall", eo.overall, "also aggregate no-target samples");
  add_segmenter_options(eval, eo.seg);

  OverlapOptions oo;
  auto* overlap = app.add_subcommand("overlap", "clean/overlap subset analysis");
  overlap->add_option("--train-ids", oo.train_ids, "training image ids, one per line")->required();
  overlap->add_option("--train-annotations", oo.train_annotations,
                      "training annotation JSONL, for verbatim expression matching");
  overlap->add_option("--annotations", oo.annotations, "validation annotation JSONL")->required();
  overlap->add_option("--evals", oo.evals, "per-sample evaluation JSONL")->required();
  overlap->add_option("--report", oo.report, "report JSON path")->required();

  TrainOptions to;
  auto* train = app.add_subcommand("train-toy", "run the toy GRPO trainer");
  train->add_option("--steps", to.steps, "number of steps")->check(CLI::NonNegativeNumber);
  train->add_option("--mode", to.mode, "distance or sam_loop")
      ->check(CLI::IsMember({"distance", "sam_loop"}));
  train->add_option("--trace", to.trace, "CSV trace path")->required();

  std::string coco_in, coco_out;
  auto* coco = app.add_subcommand("import-coco", "convert COCO-style JSON to annotation JSONL");
  coco->add_option("--input", coco_in, "COCO JSON")->required();
  coco->add_option("--out", coco_out, "annotation JSONL")->required();

  std::vector<std::string> argv_store{"groundrl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (*score) return cmd_score(so, g, out);
    if (*eval) return cmd_eval(eo, g, out);
    if (*overlap) return cmd_overlap(oo, out);
    if (*train) return cmd_train_toy(to, g, out);
    if (*coco) return cmd_import_coco(coco_in, coco_out, out);
  } catch (const SegmenterUnavailable& e) {
    err << "segmenter unavailable: " << e.what() << "\n";
    return kExitSegmenterUnavailable;
  } catch (const TrainingDiverged& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace groundrl
