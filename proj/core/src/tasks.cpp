// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/tasks.hpp"

#include <cmath>

#include "dupo/errors.hpp"

namespace dupo::tasks {

namespace {

int draw_uniform(std::mt19937_64& rng, TwoSumRange range) {
  if (range.hi < range.lo) throw DataError("twosum_generate: empty range");
  const std::uint64_t width = static_cast<std::uint64_t>(range.hi - range.lo) + 1;
  return range.lo + static_cast<int>(rng() % width);
}

}  // namespace

std::vector<TwoSumInstance> twosum_generate(int n, std::mt19937_64& rng, TwoSumRange a_range,
                                            TwoSumRange b_range) {
  if (n < 1) throw DataError("twosum_generate: n must be >= 1");
  std::vector<TwoSumInstance> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    TwoSumInstance inst;
    inst.known_a = draw_uniform(rng, a_range);
    inst.hidden_b = draw_uniform(rng, b_range);
    out.push_back(inst);
  }
  return out;
}

long long twosum_dual_solve(long long c, long long a) { return c - a; }

double twosum_reward(const TwoSumInstance& instance, long long primal_output,
                     const reward::RewardConfig& cfg) {
  const bool consistent = twosum_dual_solve(primal_output, instance.known_a) == instance.hidden_b;
  return reward::dual_reward(consistent ? 0.0 : 1.0, cfg.lambda);
}

std::string twosum_prompt(const TwoSumInstance& instance) {
  return "What is " + std::to_string(instance.known_a) + " plus " +
         std::to_string(instance.hidden_b) + "?";
}

DualityInstance to_duality_instance(const TwoSumInstance& instance) {
  DualityInstance d;
  d.x_known = std::to_string(instance.known_a);
  d.x_unknown = std::to_string(instance.hidden_b);
  d.primal_prompt = twosum_prompt(instance);
  d.domain = dualgen::Domain::SyntheticTwoSum;
  return d;
}

reward::RewardRecord math_adapter_score(const dualgen::RedactedQuestion& primal,
                                        const dualgen::CandidateTrajectory& trajectory,
                                        std::span<const dualgen::DualQuestion> kept_duals,
                                        client::ModelBackend& backend,
                                        const reward::RewardConfig& cfg,
                                        const SolveParams& params) {
  if (kept_duals.empty()) throw DataError("math_adapter_score: no kept duals");

  reward::RewardRecord rec;
  rec.primal_id = primal.id;
  rec.sample_index = trajectory.sample_index;

  if (!trajectory.extracted_answer) {
    // Zero credit for rollouts whose final answer could not be read off.
    rec.unparseable = true;
    rec.backward_accuracy = 0.0;
    rec.reward = reward::dual_reward(1.0, cfg.lambda);
    return rec;
  }

  for (const auto& dual : kept_duals) {
    client::CompletionRequest req;
    req.prompt = dualgen::render_dual_prompt(dual, *trajectory.extracted_answer);
    req.temperature = params.temperature;
    req.max_tokens = params.max_tokens;
    req.n = cfg.k_dual_samples;
    req.seed = params.seed;
    req.tag = client::RequestTag{primal.id, client::Role::Dual, trajectory.sample_index,
                                 dual.dual_index};

    std::vector<std::string> samples;
    try {
      samples = backend.complete(req);
    } catch (const BackendError& e) {
      throw SolverFailureError("dual '" + dual.id() + "': " + e.what());
    }

    reward::DualAttemptCounts counts;
    counts.dual_id = dual.id();
    counts.attempts = static_cast<int>(samples.size());
    for (const auto& text : samples) {
      const auto boxed = client::extract_boxed_answer(text);
      const std::string& reconstruction = boxed ? *boxed : text;
      if (reward::numeric_equal(reconstruction, dual.hidden_value, cfg.tolerance)) {
        ++counts.successes;
      }
    }
    rec.per_dual.push_back(std::move(counts));
  }

  rec.backward_accuracy = reward::backward_accuracy(rec.per_dual);
  rec.reward = reward::dual_reward(1.0 - rec.backward_accuracy, cfg.lambda);
  return rec;
}

std::vector<std::string> BackendDualSolver::reconstruct(const dualgen::DualQuestion& dual,
                                                        const std::string& answer) {
  client::CompletionRequest req;
  req.prompt = dualgen::render_dual_prompt(dual, answer);
  req.temperature = params_.temperature;
  req.max_tokens = params_.max_tokens;
  req.n = k_;
  req.seed = params_.seed;
  req.tag = client::RequestTag{dual.primal_id, client::Role::Dual, -1, dual.dual_index};

  const std::vector<std::string> texts = backend_.complete(req);
  std::vector<std::string> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    const auto boxed = client::extract_boxed_answer(text);
    out.push_back(boxed ? *boxed : text);
  }
  return out;
}

std::string back_translation_prompt(const TranslationInstance& instance,
                                    std::string_view forward_translation) {
  return "Translate the following " + instance.target_lang + " text to " +
         instance.source_lang + ". Output only the translation.\n\n" +
         std::string(forward_translation);
}

reward::RewardRecord translation_adapter_score(const TranslationInstance& instance,
                                               std::string_view forward_translation,
                                               client::ModelBackend& backend,
                                               const reward::RewardConfig& cfg,
                                               int k_back_translations,
                                               const SolveParams& params) {
  if (forward_translation.empty()) {
    throw DataError("translation_adapter_score: empty forward translation");
  }
  if (k_back_translations < 1) {
    throw DataError("translation_adapter_score: k_back_translations must be >= 1");
  }

  client::CompletionRequest req;
  req.prompt = back_translation_prompt(instance, forward_translation);
  req.temperature = params.temperature;
  req.max_tokens = params.max_tokens;
  req.n = k_back_translations;
  req.seed = params.seed;
  req.tag = client::RequestTag{instance.source_text.substr(0, 32), client::Role::Dual, 0, 0};

  const std::vector<std::string> backs = backend.complete(req);

  reward::RewardRecord rec;
  rec.primal_id = instance.source_text.substr(0, 32);
  double bleu_sum = 0.0;
  for (const auto& back : backs) {
    const double d = reward::round_trip_distance(instance.source_text, back);
    rec.bleu_samples.push_back(1.0 - d);
    bleu_sum += 1.0 - d;
  }
  rec.backward_accuracy = bleu_sum / static_cast<double>(backs.size());
  rec.reward = reward::dual_reward(1.0 - rec.backward_accuracy, cfg.lambda);
  return rec;
}

}  // namespace dupo::tasks
