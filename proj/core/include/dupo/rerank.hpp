// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dupo/client.hpp"
#include "dupo/dualgen.hpp"
#include "dupo/reward.hpp"
#include "dupo/tasks.hpp"

namespace dupo::rerank {

struct RerankRequest {
  dualgen::RedactedQuestion primal;
  int n_trajectories = 8;
  double gen_temperature = 0.8;
  int max_tokens = 1024;
  int k_dual_samples = 8;
  bool selection_enabled = true;
  int max_duals = 4;
  std::uint64_t seed = 0;
};

struct TableRow {
  int sample_index = 0;
  std::optional<std::string> extracted_answer;
  double backward_accuracy = 0.0;
  double reward = 0.0;
};

struct RerankResult {
  dualgen::CandidateTrajectory winner;
  std::vector<TableRow> table;  // sorted by descending (backward_accuracy, tie key)
  std::vector<dualgen::DualQuestion> kept_duals;
  bool tie_break_used = false;
  bool degraded = false;        // majority-vote fallback was taken
  std::string degraded_reason;
};

/// Majority vote restricted to the tied trajectories; parseable answers
/// beat unparseable ones and remaining ties go to the lowest sample index.
const dualgen::CandidateTrajectory& tie_break(
    std::span<const dualgen::CandidateTrajectory> tied, double tolerance);

/// Three stages: sample n trajectories, construct and filter dual questions
/// from the primal alone, then return the trajectory with the highest
/// backward accuracy over the kept duals. Falls back to majority vote
/// (flagged degraded, never silent) when no dual survives or no trajectory
/// parses.
RerankResult rerank(const RerankRequest& req, client::ModelBackend& backend,
                    const reward::RewardConfig& cfg);

}  // namespace dupo::rerank
