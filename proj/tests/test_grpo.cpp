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

#include <cmath>
#include <numeric>
#include <random>

#include "groundrl/errors.hpp"
#include "groundrl/grpo.hpp"

using namespace groundrl;

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

ToyPolicy random_policy(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(-1.0, 1.0), s(-2.0, 1.0);
  std::vector<double> p(ToyPolicy::kNumParams);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool is_std = i >= ToyPolicy::kLogStdOffset && i < ToyPolicy::kHeadOffset;
    p[i] = is_std ? s(rng) : w(rng);
  }
  return ToyPolicy(p);
}

// Relative error with an absolute floor for near-zero entries.
double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

}  // namespace

TEST(Advantages, Examples) {
  GrpoConfig cfg;
  const std::vector<double> flat(8, 1.0);
  for (double a : group_advantages(flat, cfg)) EXPECT_EQ(a, 0.0);
  cfg.group_size = 2;
  const auto two = group_advantages(std::vector<double>{0, 2}, cfg);
  EXPECT_NEAR(two[0], -1.0, 1e-5);
  EXPECT_NEAR(two[1], 1.0, 1e-5);
  cfg.group_size = 4;
  const auto four = group_advantages(std::vector<double>{0, 0, 0, 4}, cfg);
  EXPECT_NEAR(four[0], -1.0 / std::sqrt(3.0), 1e-6);
  EXPECT_NEAR(four[3], std::sqrt(3.0), 1e-6);
}

TEST(Advantages, Errors) {
  GrpoConfig cfg;
  EXPECT_THROW(group_advantages(std::vector<double>{1, 2, 3}, cfg), InvalidReward);
  cfg.group_size = 2;
  EXPECT_THROW(group_advantages(std::vector<double>{1, NAN}, cfg), InvalidReward);
  EXPECT_THROW(group_advantages(std::vector<double>{1, INFINITY}, cfg), InvalidReward);
}

TEST(Advantages, ZeroMeanUnitStd) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> r(-20, 20);
  GrpoConfig cfg;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> rewards(8);
    for (double& x : rewards) x = r(rng);
    const auto adv = group_advantages(rewards, cfg);
    EXPECT_LT(std::abs(mean_of(adv)), 1e-9);
    EXPECT_NEAR(pop_std(adv), 1.0, 1e-6);
  }
}

TEST(Advantages, TranslationInvariant) {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> r(-5, 5), c(-100, 100);
  GrpoConfig cfg;
  for (int g = 0; g < 200; ++g) {
    std::vector<double> rewards(8), shifted(8);
    const double k = c(rng);
    for (std::size_t i = 0; i < 8; ++i) {
      rewards[i] = r(rng);
      shifted[i] = rewards[i] + k;
    }
    const auto a = group_advantages(rewards, cfg), b = group_advantages(shifted, cfg);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(Kl, Examples) {
  EXPECT_EQ(kl_penalty(-1.3, -1.3), 0.0);
  EXPECT_NEAR(kl_penalty(0.0, 0.1), std::exp(0.1) - 1.1, 1e-15);
  EXPECT_NEAR(kl_penalty(0.0, 0.1), 0.005171, 1e-6);
}

TEST(Kl, NonNegativeSweep) {
  for (int i = 0; i <= 1000; ++i) {
    const double d = -3.0 + 6.0 * i / 1000.0;
    const double k = kl_penalty(0.0, d);
    EXPECT_GE(k, 0.0);
    if (std::abs(d) > 1e-3) {
      EXPECT_GT(k, 0.0);
    }
  }
}

TEST(ToyPolicy, Layout) {
  const ToyPolicy p;
  EXPECT_EQ(p.params().size(), 48u);
  const ToyFeatures f{1, 0.2, 0.3, 0.4, 0.5, 0};
  EXPECT_DOUBLE_EQ(p.mean(f, 0), 0.5);
  EXPECT_DOUBLE_EQ(std::exp(p.log_std(3)), 0.1);
  EXPECT_EQ(p.no_target_logit(f), 0.0);
  EXPECT_THROW(ToyPolicy(std::vector<double>(3)), ConfigError);
}

TEST(ToyPolicy, LogProbGradientMatchesFiniteDifference) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0, 1);
  const double h = 1e-4;
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const ToyPolicy pol = random_policy(rng);
    const ToyFeatures f = t % 5 == 0 ? ToyFeatures{0, 0, 0, 0, 0, 1}
                                     : ToyFeatures{1, u(rng), u(rng), u(rng), u(rng), 0};
    ToyAction a = pol.sample(f, rng);
    a.no_target = t % 4 == 0;
    std::vector<double> grad(ToyPolicy::kNumParams, 0.0);
    pol.accumulate_log_prob_grad(f, a, 1.0, grad);
    for (std::size_t i = 0; i < ToyPolicy::kNumParams; ++i) {
      std::vector<double> plus(pol.params().begin(), pol.params().end()), minus = plus;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (ToyPolicy(plus).log_prob(f, a) - ToyPolicy(minus).log_prob(f, a)) / (2 * h);
      ASSERT_LT(rel_err(grad[i], fd), 1e-3) << "point " << t << " param " << i;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 100 * 48);
}

TEST(ToyPolicy, ClampedLogStdHasNoGradient) {
  const ToyPolicy base;
  std::vector<double> p(base.params().begin(), base.params().end());
  p[ToyPolicy::kLogStdOffset] = 4.0;
  const ToyPolicy pol(p);
  EXPECT_DOUBLE_EQ(pol.log_std(0), ToyPolicy::kMaxLogStd);
  std::vector<double> grad(ToyPolicy::kNumParams, 0.0);
  ToyAction a;
  a.coords = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  pol.accumulate_log_prob_grad({1, 0, 0, 0, 0, 0}, a, 1.0, grad);
  EXPECT_EQ(grad[ToyPolicy::kLogStdOffset], 0.0);
}

TEST(ToyPolicy, AbstentionNormalizes) {
  const ToyFeatures f{1, 0.2, 0.3, 0.4, 0.5, 0};
  const ToyPolicy base;
  std::vector<double> p(base.params().begin(), base.params().end());
  for (std::size_t j = 0; j < kToyFeatures; ++j) p[ToyPolicy::kHeadOffset + j] = 0.3 * j - 0.4;
  const ToyPolicy pol(p);
  ToyAction yes;
  yes.no_target = true;
  const double p_yes = std::exp(pol.log_prob(f, yes));
  const double expect = 1.0 / (1.0 + std::exp(-pol.no_target_logit(f)));
  EXPECT_NEAR(p_yes, expect, 1e-12);
}

TEST(GrpoLoss, GradientMatchesFiniteDifference) {
  std::mt19937_64 rng(59);
  TaskGenerator gen(3);
  const double h = 1e-4;
  for (const bool clip : {false, true}) {
    for (int t = 0; t < 10; ++t) {
      const ToyPolicy sampler = random_policy(rng);
      const auto tasks = gen.batch(4, 0.25);
      std::vector<std::vector<Rollout>> groups(tasks.size());
      std::normal_distribution<double> adv(0, 1);
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        for (int r = 0; r < 4; ++r) {
          Rollout ro;
          ro.action = sampler.sample(tasks[k].features, rng);
          ro.logp_old = sampler.log_prob(tasks[k].features, ro.action);
          ro.logp_ref = ro.logp_old + 0.3 * adv(rng);
          ro.advantage = adv(rng);
          groups[k].push_back(ro);
        }
      }
      // Evaluate at the sampling policy so clipped ratios sit well inside
      // the trust region, away from the kinks.
      GrpoConfig cfg;
      cfg.use_clipping = clip;
      cfg.kl_coef = 0.1;
      const ToyPolicy& pol = sampler;
      const LossAndGrad lg = grpo_loss(pol, tasks, groups, cfg);
      for (std::size_t i = 0; i < ToyPolicy::kNumParams; ++i) {
        std::vector<double> plus(pol.params().begin(), pol.params().end()), minus = plus;
        plus[i] += h;
        minus[i] -= h;
        const double fd = (grpo_loss(ToyPolicy(plus), tasks, groups, cfg).loss -
                           grpo_loss(ToyPolicy(minus), tasks, groups, cfg).loss) /
                          (2 * h);
        ASSERT_LT(rel_err(lg.grad[i], fd), 1e-3) << "clip " << clip << " case " << t << " param " << i;
      }
    }
  }
}

TEST(GrpoLoss, ClippingStopsGradient) {
  TaskGenerator gen(5);
  const auto tasks = gen.batch(1, 0.0);
  ToyPolicy pol;
  ToyAction a = pol.greedy(tasks[0].features);
  a.coords[0] += 0.05;
  Rollout r;
  r.action = a;
  r.logp_old = pol.log_prob(tasks[0].features, a) - 1.0;  // ratio e^1, outside 1 + 0.2
  r.logp_ref = pol.log_prob(tasks[0].features, a);
  r.advantage = 1.0;
  const std::vector<std::vector<Rollout>> groups{{r}};
  GrpoConfig cfg;
  cfg.kl_coef = 0.0;
  const auto clipped = grpo_loss(pol, tasks, groups, cfg);
  for (double g : clipped.grad) EXPECT_EQ(g, 0.0);
  EXPECT_NEAR(clipped.loss, -1.2, 1e-12);
  cfg.use_clipping = false;
  const auto raw = grpo_loss(pol, tasks, groups, cfg);
  EXPECT_NEAR(raw.loss, -std::exp(1.0), 1e-9);
  EXPECT_NE(raw.grad[0], 0.0);
}

TEST(ActionToPrediction, RoundsAndDuplicatesPoint) {
  ToyAction a;
  a.coords = {0.6, 0.2, 0.1, 0.5004, 0.3333, 1.7};
  const auto p = action_to_prediction(a);
  ASSERT_EQ(p.instances.size(), 1u);
  EXPECT_EQ(p.instances[0].bbox, (Box{100, 200, 600, 500}));
  EXPECT_EQ(p.instances[0].points[0], (Point2{333, 1000}));
  EXPECT_EQ(p.instances[0].points[0], p.instances[0].points[1]);
  a.no_target = true;
  EXPECT_TRUE(action_to_prediction(a).no_target);
}

TEST(TaskGenerator, StratifiedAndDeterministic) {
  TaskGenerator a(9), b(9);
  const auto ba = a.batch(10, 0.2), bb = b.batch(10, 0.2);
  int neg = 0;
  for (std::size_t i = 0; i < ba.size(); ++i) {
    neg += ba[i].gt.is_no_target;
    EXPECT_EQ(ba[i].features, bb[i].features);
    EXPECT_EQ(ba[i].gt.image_id, bb[i].gt.image_id);
    EXPECT_NO_THROW(validate_ground_truth(ba[i].gt));
    if (!ba[i].gt.is_no_target) {
      EXPECT_EQ(ba[i].scene.objects().size(), 2u);
      const Box& g = ba[i].gt.gt_boxes[0];
      EXPECT_GE(g.width(), 200.0);
      EXPECT_LE(g.width(), 500.0);
      EXPECT_DOUBLE_EQ(ba[i].features[1], g.x1 / 1000.0);
    } else {
      EXPECT_EQ(ba[i].scene.objects().size(), 1u);
      EXPECT_EQ(ba[i].features[5], 1.0);
    }
  }
  EXPECT_EQ(neg, 2);
}

TEST(ToyReward, PerfectActionScores) {
  TaskGenerator gen(4);
  const auto task = gen.make(false);
  const Box& g = task.gt.gt_boxes[0];
  ToyAction a;
  a.coords = {g.x1 / 1000, g.y1 / 1000, g.x2 / 1000, g.y2 / 1000, g.center().x / 1000,
              g.center().y / 1000};
  const double d = make_toy_reward(RewardMode::kDistance)(a, task);
  EXPECT_GT(d, 3.0);
  const double s = make_toy_reward(RewardMode::kSamLoop)(a, task);
  EXPECT_GT(s, d + 4.0);
  const auto neg = gen.make(true);
  ToyAction abstain;
  abstain.no_target = true;
  EXPECT_DOUBLE_EQ(make_toy_reward(RewardMode::kDistance)(abstain, neg), 11.25);
}

TEST(Trainer, ZeroLearningRateIsNullUpdate) {
  GrpoConfig cfg;
  cfg.learning_rate = 0.0;
  GrpoTrainer tr(cfg, make_toy_reward(RewardMode::kDistance));
  TaskGenerator gen(1);
  const auto tasks = gen.batch(10, 0.2);
  const ToyPolicy before = tr.policy();
  (void)tr.step(tasks);
  EXPECT_EQ(tr.policy(), before);
}

TEST(Trainer, EqualRewardsWithoutKlDoNotMove) {
  GrpoConfig cfg;
  cfg.kl_coef = 0.0;
  GrpoTrainer tr(cfg, [](const ToyAction&, const SyntheticTask&) { return 2.0; });
  TaskGenerator gen(1);
  const ToyPolicy before = tr.policy();
  for (int i = 0; i < 3; ++i) {
    const auto s = tr.step(gen.batch(10, 0.2));
    EXPECT_EQ(s.mean_abs_adv, 0.0);
  }
  EXPECT_EQ(tr.policy(), before);
}

TEST(Trainer, DeterministicAcrossRunsAndJobs) {
  GrpoConfig cfg;
  cfg.seed = 11;
  const auto a = train_toy(cfg, 20, RewardMode::kSamLoop, {}, 1);
  const auto b = train_toy(cfg, 20, RewardMode::kSamLoop, {}, 4);
  EXPECT_EQ(trace_to_csv(a.steps), trace_to_csv(b.steps));
  EXPECT_EQ(a.final_policy, b.final_policy);
  EXPECT_EQ(a.held_out.no_target_acc, b.held_out.no_target_acc);
}

TEST(Trainer, NonFiniteRewardRejected) {
  GrpoTrainer tr(GrpoConfig{}, [](const ToyAction&, const SyntheticTask&) { return INFINITY; });
  TaskGenerator gen(2);
  EXPECT_THROW(tr.step(gen.batch(10, 0.2)), InvalidReward);
}

TEST(Trainer, NonFiniteLossDiverges) {
  const ToyPolicy base;
  std::vector<double> p(base.params().begin(), base.params().end());
  p[ToyPolicy::kMeanOffset] = NAN;
  GrpoTrainer tr(GrpoConfig{}, [](const ToyAction&, const SyntheticTask&) { return 1.0; },
                 ToyPolicy(p));
  TaskGenerator gen(2);
  try {
    (void)tr.step(gen.batch(10, 0.2));
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_EQ(e.step(), 0);
  }
}

TEST(Trainer, ConfigValidation) {
  GrpoConfig cfg;
  cfg.group_size = 1;
  EXPECT_THROW(validate_grpo_config(cfg), ConfigError);
  cfg = {};
  cfg.no_target_fraction = 1.5;
  EXPECT_THROW(validate_grpo_config(cfg), ConfigError);
}

TEST(Trainer, TraceCsv) {
  StepStats s;
  s.step = 3;
  s.mean_reward = 1.5;
  s.mean_abs_adv = 0.25;
  s.mean_kl = 1e-7;
  s.no_target_acc = 0.5;
  EXPECT_EQ(trace_to_csv({s}),
            "step,mean_reward,mean_abs_adv,mean_kl,no_target_acc\n3,1.5,0.25,1e-07,0.5\n");
}
