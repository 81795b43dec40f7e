// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "dupo/errors.hpp"

namespace dupo::grpo {

std::array<double, 5> ToyPolicy::probs(double temperature) const {
  if (!(temperature > 0.0)) throw DataError("ToyPolicy: temperature must be positive");
  std::array<double, 5> p{};
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp((logits[i] - max_logit) / temperature);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double ToyPolicy::forward_accuracy(double temperature) const {
  return probs(temperature)[kCorrectOffsetIndex];
}

std::size_t ToyPolicy::sample_offset_index(std::mt19937_64& rng, double temperature) const {
  const auto p = probs(temperature);
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw GroupTooSmallError("group_advantages: need at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= n;
  const double std_dev = std::sqrt(var);

  std::vector<double> adv(rewards.size(), 0.0);
  if (std_dev <= kStdFloor) return adv;  // constant group carries no signal
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / std_dev;
  return adv;
}

ReinforceResult reinforce_step(const ToyPolicy& policy, std::span<const GroupRollout> groups,
                               const TrainConfig& cfg) {
  const auto p = policy.probs(cfg.temperature);

  std::array<double, 5> grad{};
  std::size_t samples = 0;
  for (const auto& group : groups) {
    for (std::size_t j = 0; j < group.offset_index.size(); ++j) {
      const double a = group.advantages[j];
      const std::size_t e = group.offset_index[j];
      // d/dlogits of log softmax: onehot(e) - p (temperature folded into lr
      // scale at T=1; the sampling distribution is what we differentiate).
      for (std::size_t k = 0; k < grad.size(); ++k) {
        grad[k] += a * ((k == e ? 1.0 : 0.0) - p[k]);
      }
      ++samples;
    }
  }
  if (samples == 0) throw DataError("reinforce_step: no trajectories");
  for (auto& g : grad) g /= static_cast<double>(samples);

  double norm_sq = 0.0;
  for (double g : grad) norm_sq += g * g;
  const double norm = std::sqrt(norm_sq);
  if (!std::isfinite(norm)) throw NonFiniteGradientError("reinforce_step: non-finite gradient");

  double scale = 1.0;
  if (norm > cfg.grad_clip && norm > 0.0) scale = cfg.grad_clip / norm;

  ReinforceResult result;
  result.policy = policy;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    result.policy.logits[k] += cfg.lr * grad[k] * scale;
  }
  result.grad_norm_preclip = norm;
  result.grad_norm_applied = norm * scale;
  return result;
}

double TwoSumAdapter::reward_for(const tasks::TwoSumInstance& instance, long long output) const {
  if (degenerate) {
    // Hidden component has coefficient zero: any output "reconstructs" it.
    return reward::dual_reward(0.0, reward_cfg.lambda);
  }
  return tasks::twosum_reward(instance, output, reward_cfg);
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "step,mean_reward,forward_acc_analytic,forward_acc_empirical,grad_norm\n";
  for (const auto& s : steps) {
    out << s.step << ',' << s.mean_reward << ',' << s.forward_acc_analytic << ','
        << s.forward_acc_empirical << ',' << s.grad_norm << '\n';
  }
}

TrainReport train(const TrainConfig& cfg, const TwoSumAdapter& adapter) {
  if (cfg.group_size < 2 || cfg.batch_prompts < 1 || cfg.minibatch < 1 ||
      cfg.minibatch > cfg.batch_prompts || cfg.steps < 1 || !(cfg.lr > 0.0) ||
      !(cfg.grad_clip > 0.0)) {
    throw ConfigError("train: invalid TrainConfig");
  }

  std::mt19937_64 rng(cfg.seed);
  ToyPolicy policy;  // uniform init
  TrainReport report;
  report.steps.reserve(cfg.steps);

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<GroupRollout> groups;
    groups.reserve(cfg.batch_prompts);
    double reward_sum = 0.0;
    long correct = 0;
    long total = 0;

    for (int b = 0; b < cfg.batch_prompts; ++b) {
      GroupRollout group;
      group.instance = tasks::twosum_generate(1, rng, cfg.a_range, cfg.b_range)[0];
      group.offset_index.reserve(cfg.group_size);
      for (int g = 0; g < cfg.group_size; ++g) {
        const std::size_t e = policy.sample_offset_index(rng, cfg.temperature);
        group.offset_index.push_back(e);
        const long long output = group.instance.answer() + kOffsets[e];
        group.outputs.push_back(output);
        const double r = adapter.reward_for(group.instance, output);
        group.rewards.push_back(r);
        reward_sum += r;
        correct += e == kCorrectOffsetIndex ? 1 : 0;
        ++total;
      }
      group.advantages = group_advantages(group.rewards);
      groups.push_back(std::move(group));
    }

    double applied_norm_sum = 0.0;
    int updates = 0;
    for (int begin = 0; begin < cfg.batch_prompts; begin += cfg.minibatch) {
      const int end = std::min(cfg.batch_prompts, begin + cfg.minibatch);
      const auto slice = std::span<const GroupRollout>(groups).subspan(begin, end - begin);
      auto result = reinforce_step(policy, slice, cfg);
      policy = result.policy;
      applied_norm_sum += result.grad_norm_applied;
      ++updates;
    }

    StepStats stats;
    stats.step = step;
    stats.mean_reward = reward_sum / static_cast<double>(total);
    stats.forward_acc_analytic = policy.forward_accuracy(cfg.temperature);
    stats.forward_acc_empirical = static_cast<double>(correct) / static_cast<double>(total);
    stats.grad_norm = applied_norm_sum / updates;
    report.steps.push_back(stats);
  }

  report.final_policy = policy;
  return report;
}

}  // namespace dupo::grpo
