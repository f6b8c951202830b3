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

#include "groundrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "groundrl/errors.hpp"
#include "groundrl/parallel.hpp"

namespace groundrl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// Serves every request from one scene, whatever the image id.
class SceneSegmenter : public Segmenter {
 public:
  explicit SceneSegmenter(const SyntheticScene& scene) : scene_(scene) {}
  SegmentResponse segment(const SegmentRequest& req) const override {
    return stub_segment(req, scene_);
  }

 private:
  const SyntheticScene& scene_;
};

Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(200.0, 500.0);
  const double w = size(rng), h = size(rng);
  const double x1 = std::uniform_real_distribution<double>(0.0, 1000.0 - w)(rng);
  const double y1 = std::uniform_real_distribution<double>(0.0, 1000.0 - h)(rng);
  return {x1, y1, x1 + w, y1 + h};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void validate_grpo_config(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw ConfigError("group_size must be at least 2");
  if (!(cfg.kl_coef >= 0.0)) throw ConfigError("kl_coef must be non-negative");
  if (!(cfg.clip_range > 0.0)) throw ConfigError("clip_range must be positive");
  if (!(cfg.std_epsilon > 0.0)) throw ConfigError("std_epsilon must be positive");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(cfg.max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive");
  if (cfg.tasks_per_step < 1) throw ConfigError("tasks_per_step must be at least 1");
  if (!(cfg.no_target_fraction >= 0.0 && cfg.no_target_fraction <= 1.0)) {
    throw ConfigError("no_target_fraction must lie in [0, 1]");
  }
}

std::vector<double> normalize_group(std::span<const double> rewards, double std_epsilon) {
  if (rewards.empty()) return {};
  for (double r : rewards) {
    if (!std::isfinite(r)) throw InvalidReward("group contains a non-finite reward");
  }
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double denom = std::sqrt(var / n) + std_epsilon;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg) {
  if (rewards.size() != static_cast<std::size_t>(cfg.group_size)) {
    throw InvalidReward("expected a group of " + std::to_string(cfg.group_size) +
                        " rewards, got " + std::to_string(rewards.size()));
  }
  return normalize_group(rewards, cfg.std_epsilon);
}

double kl_penalty(double logp_new, double logp_ref) {
  const double d = logp_ref - logp_new;
  return std::max(0.0, std::expm1(d) - d);
}

ToyPolicy::ToyPolicy() : params_(kNumParams, 0.0) {
  for (std::size_t k = 0; k < kToyActionDims; ++k) {
    params_[kMeanOffset + k * kToyFeatures + 0] = 0.5;
    params_[kMeanOffset + k * kToyFeatures + 5] = 0.5;
    params_[kLogStdOffset + k] = std::log(0.1);
  }
}

ToyPolicy::ToyPolicy(std::vector<double> params) : params_(std::move(params)) {
  if (params_.size() != kNumParams) {
    throw ConfigError("toy policy expects " + std::to_string(kNumParams) + " parameters");
  }
}

double ToyPolicy::no_target_logit(const ToyFeatures& f) const {
  double l = 0.0;
  for (std::size_t j = 0; j < kToyFeatures; ++j) l += params_[kHeadOffset + j] * f[j];
  return l;
}

double ToyPolicy::mean(const ToyFeatures& f, std::size_t dim) const {
  double m = 0.0;
  for (std::size_t j = 0; j < kToyFeatures; ++j) {
    m += params_[kMeanOffset + dim * kToyFeatures + j] * f[j];
  }
  return m;
}

double ToyPolicy::log_std(std::size_t dim) const {
  return std::clamp(params_[kLogStdOffset + dim], kMinLogStd, kMaxLogStd);
}

ToyAction ToyPolicy::sample(const ToyFeatures& f, std::mt19937_64& rng) const {
  ToyAction a;
  const double p = sigmoid(no_target_logit(f));
  a.no_target = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  std::normal_distribution<double> normal(0.0, 1.0);
  // Draw coordinates even when abstaining so the stream stays aligned.
  for (std::size_t k = 0; k < kToyActionDims; ++k) {
    a.coords[k] = mean(f, k) + std::exp(log_std(k)) * normal(rng);
  }
  return a;
}

ToyAction ToyPolicy::greedy(const ToyFeatures& f) const {
  ToyAction a;
  a.no_target = no_target_logit(f) > 0.0;
  for (std::size_t k = 0; k < kToyActionDims; ++k) a.coords[k] = mean(f, k);
  return a;
}

double ToyPolicy::log_prob(const ToyFeatures& f, const ToyAction& a) const {
  const double l = no_target_logit(f);
  if (a.no_target) return -softplus(-l);
  double lp = -softplus(l);
  for (std::size_t k = 0; k < kToyActionDims; ++k) {
    const double s = log_std(k);
    const double z = (a.coords[k] - mean(f, k)) * std::exp(-s);
    lp += -0.5 * z * z - s - kHalfLog2Pi;
  }
  return lp;
}

void ToyPolicy::accumulate_log_prob_grad(const ToyFeatures& f, const ToyAction& a,
                                         double scale, std::span<double> grad) const {
  const double l = no_target_logit(f);
  const double dl = a.no_target ? sigmoid(-l) : -sigmoid(l);
  for (std::size_t j = 0; j < kToyFeatures; ++j) grad[kHeadOffset + j] += scale * dl * f[j];
  if (a.no_target) return;
  for (std::size_t k = 0; k < kToyActionDims; ++k) {
    const double raw = params_[kLogStdOffset + k];
    const double s = log_std(k);
    const double inv_std = std::exp(-s);
    const double z = (a.coords[k] - mean(f, k)) * inv_std;
    const double dmu = z * inv_std;
    for (std::size_t j = 0; j < kToyFeatures; ++j) {
      grad[kMeanOffset + k * kToyFeatures + j] += scale * dmu * f[j];
    }
    if (raw > kMinLogStd && raw < kMaxLogStd) grad[kLogStdOffset + k] += scale * (z * z - 1.0);
  }
}

GroundingPrediction action_to_prediction(const ToyAction& a) {
  GroundingPrediction pred;
  if (a.no_target) {
    pred.no_target = true;
    return pred;
  }
  auto px = [&](std::size_t k) { return std::round(std::clamp(a.coords[k], 0.0, 1.0) * 1000.0); };
  Instance inst;
  inst.bbox = normalize_box({px(0), px(1), px(2), px(3)});
  const Point2 p{px(4), px(5)};
  inst.points = {p, p};
  pred.instances.push_back(std::move(inst));
  return pred;
}

SyntheticTask TaskGenerator::make(bool no_target) {
  const CoordSpace image{kImageSize, kImageSize};
  SyntheticTask task;
  task.gt.image_id = "toy-" + std::to_string(counter_++);
  task.gt.image = image;
  const Box distractor = random_box(rng_);
  std::vector<BinaryMask> objects{
      rasterize_box(rescale_box(distractor, kNormalizedSpace, image), image)};
  if (no_target) {
    task.features = {0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    task.gt.is_no_target = true;
  } else {
    const Box target = random_box(rng_);
    task.features = {1.0, target.x1 / 1000.0, target.y1 / 1000.0, target.x2 / 1000.0,
                     target.y2 / 1000.0, 0.0};
    BinaryMask mask = rasterize_box(rescale_box(target, kNormalizedSpace, image), image);
    task.gt.gt_boxes = {target};
    task.gt.gt_masks = {mask};
    // Object order is random so that stub tie-breaking favours neither.
    if (std::bernoulli_distribution(0.5)(rng_)) {
      objects.insert(objects.begin(), std::move(mask));
    } else {
      objects.push_back(std::move(mask));
    }
  }
  task.scene = SyntheticScene(image, std::move(objects));
  return task;
}

std::vector<SyntheticTask> TaskGenerator::batch(int n, double no_target_fraction) {
  const int negatives = static_cast<int>(std::lround(no_target_fraction * n));
  std::vector<bool> flags(static_cast<std::size_t>(n), false);
  std::fill(flags.begin(), flags.begin() + std::min(negatives, n), true);
  std::shuffle(flags.begin(), flags.end(), rng_);
  std::vector<SyntheticTask> out;
  out.reserve(flags.size());
  for (bool f : flags) out.push_back(make(f));
  return out;
}

LossAndGrad grpo_loss(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                      std::span<const std::vector<Rollout>> groups, const GrpoConfig& cfg) {
  LossAndGrad out;
  out.grad.assign(ToyPolicy::kNumParams, 0.0);
  std::size_t count = 0;
  for (const auto& g : groups) count += g.size();
  if (count == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(count);

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const ToyFeatures& f = tasks[t].features;
    for (const Rollout& r : groups[t]) {
      const double logp = policy.log_prob(f, r.action);
      const double ratio = std::exp(logp - r.logp_old);
      const double surr = ratio * r.advantage;
      double objective = surr;
      bool through_ratio = true;
      if (cfg.use_clipping) {
        const double clipped =
            std::clamp(ratio, 1.0 - cfg.clip_range, 1.0 + cfg.clip_range) * r.advantage;
        objective = std::min(surr, clipped);
        through_ratio = surr <= clipped;
      }
      const double d = r.logp_ref - logp;
      const double kl = kl_penalty(logp, r.logp_ref);
      out.loss += inv_n * (-objective + cfg.kl_coef * kl);
      out.mean_kl += inv_n * kl;
      const double coeff =
          -(through_ratio ? r.advantage * ratio : 0.0) - cfg.kl_coef * std::expm1(d);
      policy.accumulate_log_prob_grad(f, r.action, inv_n * coeff, out.grad);
    }
  }
  return out;
}

ToyRewardFn make_toy_reward(RewardMode mode, RewardConfig cfg) {
  return [mode, cfg](const ToyAction& a, const SyntheticTask& task) {
    const std::string raw = render_response(action_to_prediction(a), "toy rollout");
    const ParsedResponse pr = parse_response(raw);
    if (mode == RewardMode::kDistance) return distance_reward(raw, pr, task.gt, cfg).total;
    const SceneSegmenter seg(task.scene);
    return sam_loop_reward(raw, pr, task.gt, seg, cfg).total;
  };
}

GrpoTrainer::GrpoTrainer(GrpoConfig cfg, ToyRewardFn reward, int jobs)
    : GrpoTrainer(cfg, std::move(reward), ToyPolicy(), jobs) {}

GrpoTrainer::GrpoTrainer(GrpoConfig cfg, ToyRewardFn reward, ToyPolicy init, int jobs)
    : cfg_(cfg),
      reward_(std::move(reward)),
      jobs_(jobs),
      policy_(std::move(init)),
      reference_(policy_),
      rng_(cfg.seed),
      adam_m_(ToyPolicy::kNumParams, 0.0),
      adam_v_(ToyPolicy::kNumParams, 0.0) {
  validate_grpo_config(cfg_);
}

StepStats GrpoTrainer::step(std::span<const SyntheticTask> tasks) {
  const auto n = static_cast<std::size_t>(cfg_.group_size);
  std::vector<std::vector<Rollout>> groups(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    groups[t].resize(n);
    for (auto& r : groups[t]) {
      r.action = policy_.sample(tasks[t].features, rng_);
      r.logp_old = policy_.log_prob(tasks[t].features, r.action);
      r.logp_ref = reference_.log_prob(tasks[t].features, r.action);
    }
  }

  std::vector<double> rewards(tasks.size() * n);
  parallel_for(rewards.size(), jobs_, [&](std::size_t i) {
    rewards[i] = reward_(groups[i / n][i % n].action, tasks[i / n]);
  });

  StepStats stats;
  stats.step = t_;
  double abs_adv = 0.0, negatives = 0.0, abstained = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::span<const double> group(rewards.data() + t * n, n);
    const auto adv = group_advantages(group, cfg_);
    for (std::size_t r = 0; r < n; ++r) {
      groups[t][r].advantage = adv[r];
      abs_adv += std::abs(adv[r]);
      if (tasks[t].gt.is_no_target) {
        negatives += 1.0;
        if (groups[t][r].action.no_target) abstained += 1.0;
      }
    }
  }
  const auto total = static_cast<double>(rewards.size());
  stats.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) / total;
  stats.mean_abs_adv = abs_adv / total;
  stats.no_target_acc = negatives > 0.0 ? abstained / negatives : std::nan("");

  LossAndGrad lg = grpo_loss(policy_, tasks, groups, cfg_);
  stats.mean_kl = lg.mean_kl;
  double norm = 0.0;
  for (double g : lg.grad) norm += g * g;
  norm = std::sqrt(norm);
  if (!std::isfinite(lg.loss) || !std::isfinite(norm)) {
    throw TrainingDiverged("non-finite GRPO loss", t_);
  }
  stats.grad_norm = norm;
  const double scale = norm > cfg_.max_grad_norm ? cfg_.max_grad_norm / norm : 1.0;

  ++t_;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
  auto params = policy_.mutable_params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = lg.grad[i] * scale;
    adam_m_[i] = kAdamBeta1 * adam_m_[i] + (1.0 - kAdamBeta1) * g;
    adam_v_[i] = kAdamBeta2 * adam_v_[i] + (1.0 - kAdamBeta2) * g * g;
    const double update = (adam_m_[i] / bias1) / (std::sqrt(adam_v_[i] / bias2) + kAdamEps);
    params[i] -= cfg_.learning_rate * update;
  }
  return stats;
}

HeldOutEval evaluate_toy(const ToyPolicy& policy, const ToyRewardFn& reward,
                         std::uint64_t seed, int n_target, int n_no_target) {
  TaskGenerator gen(seed);
  HeldOutEval out;
  out.n_target = n_target;
  out.n_no_target = n_no_target;
  double reward_sum = 0.0;
  int abstained = 0, false_neg = 0;
  for (int i = 0; i < n_target + n_no_target; ++i) {
    const bool negative = i >= n_target;
    const SyntheticTask task = gen.make(negative);
    const ToyAction a = policy.greedy(task.features);
    reward_sum += reward(a, task);
    if (negative && a.no_target) ++abstained;
    if (!negative && a.no_target) ++false_neg;
  }
  out.no_target_acc = n_no_target > 0 ? static_cast<double>(abstained) / n_no_target : 0.0;
  out.false_negative_rate = n_target > 0 ? static_cast<double>(false_neg) / n_target : 0.0;
  out.mean_reward = reward_sum / std::max(1, n_target + n_no_target);
  return out;
}

TrainingTrace train_toy(const GrpoConfig& cfg, long steps, RewardMode mode,
                        const RewardConfig& reward_cfg, int jobs) {
  validate_grpo_config(cfg);
  const ToyRewardFn reward = make_toy_reward(mode, reward_cfg);
  TaskGenerator gen(cfg.seed * 2654435761ULL + 17);
  GrpoTrainer trainer(cfg, reward, jobs);
  TrainingTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(std::max(0L, steps)));
  for (long s = 0; s < steps; ++s) {
    const auto tasks = gen.batch(cfg.tasks_per_step, cfg.no_target_fraction);
    trace.steps.push_back(trainer.step(tasks));
  }
  trace.final_policy = trainer.policy();
  trace.held_out = evaluate_toy(trace.final_policy, reward, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  return trace;
}

std::string trace_to_csv(const std::vector<StepStats>& steps) {
  std::string out = "step,mean_reward,mean_abs_adv,mean_kl,no_target_acc\n";
  for (const auto& s : steps) {
    out += std::to_string(s.step) + "," + format_double(s.mean_reward) + "," +
           format_double(s.mean_abs_adv) + "," + format_double(s.mean_kl) + "," +
           format_double(s.no_target_acc) + "\n";
  }
  return out;
}

}  // namespace groundrl
