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

#ifndef GROUNDRL_GRPO_HPP_
#define GROUNDRL_GRPO_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "groundrl/response_parser.hpp"
#include "groundrl/reward_engine.hpp"
#include "groundrl/segmenter.hpp"

namespace groundrl {

struct GrpoConfig {
  int group_size = 8;
  double kl_coef = 5e-3;  // weight of the k3 estimator
  double clip_range = 0.2;
  bool use_clipping = true;
  double std_epsilon = 1e-6;
  // Toy policy only. A billion-parameter VLM would use 1e-6 here.
  double learning_rate = 1e-3;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 0;
  int tasks_per_step = 10;
  double no_target_fraction = 0.2;
};

void validate_grpo_config(const GrpoConfig& cfg);

// (r_i - mean) / (population_std + std_epsilon). Requires
// rewards.size() == cfg.group_size; throws InvalidReward on non-finite input.
std::vector<double> group_advantages(std::span<const double> rewards, const GrpoConfig& cfg);
// Same normalizer for a group of any size >= 1.
std::vector<double> normalize_group(std::span<const double> rewards, double std_epsilon);

// k3 = exp(d) - d - 1 with d = logp_ref - logp_new. Non-negative.
double kl_penalty(double logp_new, double logp_ref);

// Feature layout: [is_target, x1, y1, x2, y2, is_no_target], the box in
// [0, 1] units.
inline constexpr std::size_t kToyFeatures = 6;
// Action layout: [x1, y1, x2, y2, px, py] in [0, 1] units.
inline constexpr std::size_t kToyActionDims = 6;
using ToyFeatures = std::array<double, kToyFeatures>;

struct ToyAction {
  bool no_target = false;
  std::array<double, kToyActionDims> coords{};  // unclamped Gaussian sample
};

// Linear-Gaussian grounding policy with a Bernoulli abstention head:
//   mean = W f,  log_std = clamp(s, -5, 2),  P(no_target) = sigmoid(w . f).
// Coordinates are only drawn (and only scored) when the head does not
// abstain.
class ToyPolicy {
 public:
  static constexpr std::size_t kMeanOffset = 0;
  static constexpr std::size_t kLogStdOffset = kToyActionDims * kToyFeatures;
  static constexpr std::size_t kHeadOffset = kLogStdOffset + kToyActionDims;
  static constexpr std::size_t kNumParams = kHeadOffset + kToyFeatures;
  static constexpr double kMinLogStd = -5.0;
  static constexpr double kMaxLogStd = 2.0;

  // Mean 0.5 everywhere, std 0.1, abstention probability 0.5.
  ToyPolicy();
  explicit ToyPolicy(std::vector<double> params);

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }

  double no_target_logit(const ToyFeatures& f) const;
  double mean(const ToyFeatures& f, std::size_t dim) const;
  double log_std(std::size_t dim) const;

  ToyAction sample(const ToyFeatures& f, std::mt19937_64& rng) const;
  // Mode of the policy: abstain iff the logit is positive, else the mean.
  ToyAction greedy(const ToyFeatures& f) const;

  double log_prob(const ToyFeatures& f, const ToyAction& a) const;
  // grad += scale * d log_prob / d params
  void accumulate_log_prob_grad(const ToyFeatures& f, const ToyAction& a, double scale,
                                std::span<double> grad) const;

  bool operator==(const ToyPolicy&) const = default;

 private:
  std::vector<double> params_;
};

// Renders an action in the answer grammar; the one sampled point is
// emitted twice.
GroundingPrediction action_to_prediction(const ToyAction& a);

struct SyntheticTask {
  ToyFeatures features{};
  GroundTruth gt;
  SyntheticScene scene;  // target plus one distractor in pixels
};

// Deterministic task stream.
class TaskGenerator {
 public:
  static constexpr std::int64_t kImageSize = 64;

  explicit TaskGenerator(std::uint64_t seed) : rng_(seed) {}
  SyntheticTask make(bool no_target);
  // Stratified batch: round(no_target_fraction * n) negatives, shuffled.
  std::vector<SyntheticTask> batch(int n, double no_target_fraction);

 private:
  std::mt19937_64 rng_;
  std::uint64_t counter_ = 0;
};

// One sampled rollout within a group.
struct Rollout {
  ToyAction action;
  double logp_old = 0.0;  // sampling policy
  double logp_ref = 0.0;  // reference policy
  double advantage = 0.0;
};

struct LossAndGrad {
  double loss = 0.0;
  double mean_kl = 0.0;
  std::vector<double> grad;
};

// Clipped surrogate plus kl_coef * k3, averaged over every (task, rollout)
// pair. groups[t] holds the rollouts sampled for tasks[t].
LossAndGrad grpo_loss(const ToyPolicy& policy, std::span<const SyntheticTask> tasks,
                      std::span<const std::vector<Rollout>> groups, const GrpoConfig& cfg);

// Scalar reward of one toy action against its task.
using ToyRewardFn = std::function<double(const ToyAction&, const SyntheticTask&)>;
ToyRewardFn make_toy_reward(RewardMode mode, RewardConfig cfg = {});

struct StepStats {
  long step = 0;
  double mean_reward = 0.0;
  double mean_abs_adv = 0.0;
  double mean_kl = 0.0;
  double no_target_acc = 0.0;  // sampled abstention rate on batch negatives
  double grad_norm = 0.0;
};

class GrpoTrainer {
 public:
  GrpoTrainer(GrpoConfig cfg, ToyRewardFn reward, int jobs = 1);
  GrpoTrainer(GrpoConfig cfg, ToyRewardFn reward, ToyPolicy init, int jobs = 1);

  // Samples group_size actions per task, scores them, normalizes within
  // groups and applies one clipped-norm Adam step. Throws TrainingDiverged.
  StepStats step(std::span<const SyntheticTask> tasks);

  const ToyPolicy& policy() const { return policy_; }
  const ToyPolicy& reference() const { return reference_; }
  const GrpoConfig& config() const { return cfg_; }

 private:
  GrpoConfig cfg_;
  ToyRewardFn reward_;
  int jobs_;
  ToyPolicy policy_;
  ToyPolicy reference_;
  std::mt19937_64 rng_;
  std::vector<double> adam_m_, adam_v_;
  long t_ = 0;
};

struct HeldOutEval {
  double no_target_acc = 0.0;
  double false_negative_rate = 0.0;
  double mean_reward = 0.0;
  int n_target = 0;
  int n_no_target = 0;
};

// Greedy policy on fresh tasks drawn from an independent seed.
HeldOutEval evaluate_toy(const ToyPolicy& policy, const ToyRewardFn& reward,
                         std::uint64_t seed, int n_target = 200, int n_no_target = 200);

struct TrainingTrace {
  std::vector<StepStats> steps;
  ToyPolicy final_policy;
  HeldOutEval held_out;
};

TrainingTrace train_toy(const GrpoConfig& cfg, long steps, RewardMode mode,
                        const RewardConfig& reward_cfg = {}, int jobs = 1);

// CSV with header step,mean_reward,mean_abs_adv,mean_kl,no_target_acc
std::string trace_to_csv(const std::vector<StepStats>& steps);

}  // namespace groundrl

#endif  // GROUNDRL_GRPO_HPP_
