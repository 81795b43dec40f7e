// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dupo/client.hpp"
#include "dupo/dualgen.hpp"
#include "dupo/reward.hpp"

namespace dupo::tasks {

/// One primal task instance split into its known and unknown components.
/// The unknown never appears in a prompt handed to a dual solver; the
/// primal prompt, which the policy solves, carries the full input.
struct DualityInstance {
  std::string x_known;
  std::string x_unknown;
  std::string primal_prompt;
  dualgen::Domain domain = dualgen::Domain::Math;
};

// --- two-sum family ----------------------------------------------------------

struct TwoSumRange {
  int lo = 0;
  int hi = 99;
};

/// A + B with A known and B the hidden component. The correct primal
/// output is a + b; the exact dual reconstruction is C - a.
struct TwoSumInstance {
  int known_a = 0;
  int hidden_b = 0;

  long long answer() const { return static_cast<long long>(known_a) + hidden_b; }
};

std::vector<TwoSumInstance> twosum_generate(int n, std::mt19937_64& rng,
                                            TwoSumRange a_range = {},
                                            TwoSumRange b_range = {});

/// B' = C - A, exactly.
long long twosum_dual_solve(long long c, long long a);

/// exp(-lambda) when the reconstruction misses b, 1 otherwise.
double twosum_reward(const TwoSumInstance& instance, long long primal_output,
                     const reward::RewardConfig& cfg);

/// Natural-language rendering for backend-driven demos; the toy policy
/// itself works on the numeric protocol and never sees this.
std::string twosum_prompt(const TwoSumInstance& instance);

DualityInstance to_duality_instance(const TwoSumInstance& instance);

// --- model-backed adapters -----------------------------------------------------

struct SolveParams {
  double temperature = 0.8;
  int max_tokens = 1024;
  std::uint64_t seed = 0;
};

/// Renders each kept dual with the trajectory's final answer, draws
/// cfg.k_dual_samples reconstructions per dual, and pools the successes
/// into a RewardRecord. A trajectory without an extracted answer gets
/// backward accuracy 0 and the unparseable flag.
reward::RewardRecord math_adapter_score(const dualgen::RedactedQuestion& primal,
                                        const dualgen::CandidateTrajectory& trajectory,
                                        std::span<const dualgen::DualQuestion> kept_duals,
                                        client::ModelBackend& backend,
                                        const reward::RewardConfig& cfg,
                                        const SolveParams& params = {});

/// Dual solver that asks a model backend: renders the dual prompt with the
/// candidate answer, draws k samples, and reports the boxed contents (raw
/// text when nothing is boxed, so mismatches count as failures).
class BackendDualSolver : public dualgen::DualSolver {
 public:
  BackendDualSolver(client::ModelBackend& backend, int k, SolveParams params = {})
      : backend_(backend), k_(k), params_(params) {}

  std::vector<std::string> reconstruct(const dualgen::DualQuestion& dual,
                                       const std::string& answer) override;

 private:
  client::ModelBackend& backend_;
  int k_;
  SolveParams params_;
};

// --- translation round trip ----------------------------------------------------

struct TranslationInstance {
  std::string source_text;
  std::string source_lang = "en";
  std::string target_lang = "zh";
};

std::string back_translation_prompt(const TranslationInstance& instance,
                                    std::string_view forward_translation);

/// Scores a forward translation by round-trip distance: the backend
/// back-translates into the source language and d = 1 - mean BLEU against
/// the source over k_back_translations samples.
reward::RewardRecord translation_adapter_score(const TranslationInstance& instance,
                                               std::string_view forward_translation,
                                               client::ModelBackend& backend,
                                               const reward::RewardConfig& cfg,
                                               int k_back_translations = 1,
                                               const SolveParams& params = {});

}  // namespace dupo::tasks
