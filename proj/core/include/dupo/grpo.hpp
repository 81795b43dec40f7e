// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "dupo/reward.hpp"
#include "dupo/tasks.hpp"

namespace dupo::grpo {

/// Error offsets the toy policy can emit around the true sum.
inline constexpr std::array<int, 5> kOffsets{-2, -1, 0, 1, 2};
inline constexpr std::size_t kCorrectOffsetIndex = 2;  // offset 0

/// Five-logit categorical policy over error offsets; the emitted primal
/// output is a + b + offset.
struct ToyPolicy {
  std::array<double, 5> logits{};

  std::array<double, 5> probs(double temperature = 1.0) const;
  /// P(offset == 0) under the sampling distribution.
  double forward_accuracy(double temperature = 1.0) const;
  std::size_t sample_offset_index(std::mt19937_64& rng, double temperature = 1.0) const;
};

/// Group-standardized advantages: (r - mean) / population std. Groups whose
/// std falls at or below the floor get all-zero advantages. Throws
/// GroupTooSmallError for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards);

inline constexpr double kStdFloor = 1e-8;

struct GroupRollout {
  tasks::TwoSumInstance instance;
  std::vector<std::size_t> offset_index;  // G sampled offsets
  std::vector<long long> outputs;         // a + b + offset
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct TrainConfig {
  int group_size = 16;
  int batch_prompts = 64;
  int minibatch = 32;
  double lr = 0.1;          // toy scale; the paper_scale preset uses 1e-6
  double grad_clip = 1.0;
  int steps = 500;
  double temperature = 1.0;
  std::uint64_t seed = 42;
  tasks::TwoSumRange a_range{};
  tasks::TwoSumRange b_range{};
};

struct StepStats {
  int step = 0;
  double mean_reward = 0.0;
  double forward_acc_analytic = 0.0;
  double forward_acc_empirical = 0.0;
  double grad_norm = 0.0;  // post-clip, averaged over the step's updates
};

struct ReinforceResult {
  ToyPolicy policy;
  double grad_norm_preclip = 0.0;
  double grad_norm_applied = 0.0;
};

/// One clipped gradient-ascent update on sum(advantage * grad log pi),
/// averaged over every trajectory in `groups` (one minibatch). Throws
/// NonFiniteGradientError if the estimate degenerates.
ReinforceResult reinforce_step(const ToyPolicy& policy, std::span<const GroupRollout> groups,
                               const TrainConfig& cfg);

/// Reward source for the trainer. The degenerate variant models a dual
/// whose hidden component has no effect on the primal output, so every
/// reconstruction matches and the reward carries no signal; the selection
/// filter would normally drop such a dual.
struct TwoSumAdapter {
  reward::RewardConfig reward_cfg;
  bool degenerate = false;

  double reward_for(const tasks::TwoSumInstance& instance, long long output) const;
};

struct TrainReport {
  std::vector<StepStats> steps;
  ToyPolicy final_policy;

  void write_csv(std::ostream& out) const;
};

/// Rollout -> reward -> group advantages -> minibatch reinforce loop.
/// Deterministic given cfg.seed.
TrainReport train(const TrainConfig& cfg, const TwoSumAdapter& adapter);

}  // namespace dupo::grpo
