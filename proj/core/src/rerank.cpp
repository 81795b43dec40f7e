// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/rerank.hpp"

#include <algorithm>
#include <random>

#include "dupo/errors.hpp"

namespace dupo::rerank {

namespace {

int votes_for(const dualgen::CandidateTrajectory& member,
              std::span<const dualgen::CandidateTrajectory> electorate, double tolerance) {
  if (!member.extracted_answer) return 0;
  int votes = 0;
  for (const auto& other : electorate) {
    if (other.extracted_answer &&
        reward::numeric_equal(*member.extracted_answer, *other.extracted_answer, tolerance)) {
      ++votes;
    }
  }
  return votes;
}

}  // namespace

const dualgen::CandidateTrajectory& tie_break(
    std::span<const dualgen::CandidateTrajectory> tied, double tolerance) {
  if (tied.empty()) throw DataError("tie_break: empty set");
  const dualgen::CandidateTrajectory* best = &tied.front();
  int best_votes = votes_for(*best, tied, tolerance);
  for (const auto& member : tied.subspan(1)) {
    const int votes = votes_for(member, tied, tolerance);
    const bool better =
        std::make_tuple(member.extracted_answer.has_value(), votes, -member.sample_index) >
        std::make_tuple(best->extracted_answer.has_value(), best_votes, -best->sample_index);
    if (better) {
      best = &member;
      best_votes = votes;
    }
  }
  return *best;
}

namespace {

struct Scored {
  const dualgen::CandidateTrajectory* trajectory;
  reward::RewardRecord record;
};

const dualgen::CandidateTrajectory& majority_fallback(
    std::span<const dualgen::CandidateTrajectory> all, double tolerance) {
  return tie_break(all, tolerance);
}

}  // namespace

RerankResult rerank(const RerankRequest& req, client::ModelBackend& backend,
                    const reward::RewardConfig& cfg) {
  if (req.n_trajectories < 1) throw DataError("rerank: n_trajectories must be >= 1");
  if (req.k_dual_samples < 1) throw DataError("rerank: K must be >= 1");

  // All calls go through an in-memory memo so the principle checks and the
  // per-trajectory scoring see the same reconstruction samples.
  client::CachedBackend memo(backend, "");

  // Stage 1: sample trajectories.
  client::CompletionRequest gen;
  gen.prompt = dualgen::render_primal_prompt(req.primal.text);
  gen.temperature = req.gen_temperature;
  gen.max_tokens = req.max_tokens;
  gen.n = req.n_trajectories;
  gen.seed = req.seed;
  gen.tag = client::RequestTag{req.primal.id, client::Role::Primal, -1, -1};
  const std::vector<std::string> texts = memo.complete(gen);

  std::vector<dualgen::CandidateTrajectory> trajectories;
  trajectories.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    dualgen::CandidateTrajectory traj;
    traj.primal_id = req.primal.id;
    traj.sample_index = static_cast<int>(i);
    traj.full_text = texts[i];
    traj.extracted_answer = client::extract_boxed_answer(texts[i]);
    traj.gen_params = dualgen::GenParams{req.gen_temperature, req.max_tokens, req.seed};
    trajectories.push_back(std::move(traj));
  }

  RerankResult result;

  // Stage 2: construct duals from the primal alone, then filter against the
  // sampled answer pool.
  std::vector<dualgen::DualQuestion> kept;
  std::mt19937_64 rng(req.seed);
  try {
    auto duals = dualgen::generate_dual_questions(req.primal, req.max_duals, rng);
    tasks::BackendDualSolver solver(memo, req.k_dual_samples,
                                    tasks::SolveParams{req.gen_temperature, req.max_tokens,
                                                       req.seed});
    auto filtered = dualgen::filter_dual_questions(std::move(duals), trajectories, solver,
                                                   req.selection_enabled, cfg.tolerance);
    kept = std::move(filtered.kept);
  } catch (const NoMaskableCandidatesError&) {
    kept.clear();
  }
  result.kept_duals = kept;

  const bool any_parseable = std::any_of(trajectories.begin(), trajectories.end(),
                                         [](const auto& t) { return t.extracted_answer.has_value(); });

  auto emit_fallback = [&](const char* reason) {
    result.degraded = true;
    result.degraded_reason = reason;
    result.winner = majority_fallback(trajectories, cfg.tolerance);
    for (const auto& traj : trajectories) {
      result.table.push_back(TableRow{traj.sample_index, traj.extracted_answer, 0.0,
                                      reward::dual_reward(1.0, cfg.lambda)});
    }
    return result;
  };

  if (kept.empty()) return emit_fallback("no dual question survived filtering");
  if (!any_parseable) return emit_fallback("no trajectory has an extractable answer");

  // Stage 3: score every trajectory on the kept duals and take the argmax.
  reward::RewardConfig score_cfg = cfg;
  score_cfg.k_dual_samples = req.k_dual_samples;
  std::vector<Scored> scored;
  scored.reserve(trajectories.size());
  for (const auto& traj : trajectories) {
    scored.push_back(Scored{
        &traj, tasks::math_adapter_score(req.primal, traj, kept, memo, score_cfg,
                                         tasks::SolveParams{req.gen_temperature,
                                                            req.max_tokens, req.seed})});
  }

  double best_acc = -1.0;
  for (const auto& s : scored) best_acc = std::max(best_acc, s.record.backward_accuracy);

  std::vector<dualgen::CandidateTrajectory> tied;
  for (const auto& s : scored) {
    if (s.record.backward_accuracy == best_acc) tied.push_back(*s.trajectory);
  }
  result.tie_break_used = tied.size() > 1;
  result.winner = tie_break(tied, cfg.tolerance);

  std::vector<const Scored*> order;
  order.reserve(scored.size());
  for (const auto& s : scored) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [&](const Scored* x, const Scored* y) {
    const auto key = [&](const Scored* s) {
      return std::make_tuple(s->record.backward_accuracy,
                             s->trajectory->extracted_answer.has_value(),
                             votes_for(*s->trajectory, trajectories, cfg.tolerance),
                             -s->trajectory->sample_index);
    };
    return key(x) > key(y);
  });
  for (const Scored* s : order) {
    result.table.push_back(TableRow{s->trajectory->sample_index,
                                    s->trajectory->extracted_answer,
                                    s->record.backward_accuracy, s->record.reward});
  }
  return result;
}

}  // namespace dupo::rerank
