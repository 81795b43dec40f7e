// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/dualgen.hpp"

#include <algorithm>
#include <unordered_set>

#include "dupo/errors.hpp"
#include "dupo/reward.hpp"

namespace dupo::dualgen {

const char* to_string(Domain d) {
  switch (d) {
    case Domain::Math: return "math";
    case Domain::Translation: return "translation";
    case Domain::SyntheticTwoSum: return "two_sum";
  }
  return "?";
}

std::optional<Domain> domain_from_string(std::string_view s) {
  if (s == "math") return Domain::Math;
  if (s == "translation") return Domain::Translation;
  if (s == "two_sum") return Domain::SyntheticTwoSum;
  return std::nullopt;
}

const char* to_string(DualStatus s) {
  switch (s) {
    case DualStatus::Unfiltered: return "unfiltered";
    case DualStatus::Kept: return "kept";
    case DualStatus::DroppedNotAnswerable: return "dropped_not_answerable";
    case DualStatus::DroppedNotUnique: return "dropped_not_unique";
  }
  return "?";
}

std::optional<DualStatus> dual_status_from_string(std::string_view s) {
  if (s == "unfiltered") return DualStatus::Unfiltered;
  if (s == "kept") return DualStatus::Kept;
  if (s == "dropped_not_answerable") return DualStatus::DroppedNotAnswerable;
  if (s == "dropped_not_unique") return DualStatus::DroppedNotUnique;
  return std::nullopt;
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::string_view kAnswerPlaceholder = "{boxed_answer}";
constexpr std::string_view kBoxedInstruction = "Put your final value in \\boxed{}.";

}  // namespace

std::string make_prompt_template(TemplateId id, std::string_view variable_name) {
  std::string var(variable_name);
  switch (id) {
    case TemplateId::AppendixDetermine:
      return "Given that the correct answer is {boxed_answer}, determine the value of " +
             var + ".";
    case TemplateId::CheckYourWork:
      return "Check your work: If the solution for above question is {boxed_answer}, "
             "what must " + var + " have been?";
    case TemplateId::CorrespondingValue:
      return "When the solution for above question is {boxed_answer}, what's the "
             "corresponding " + var + "?";
  }
  throw DataError("make_prompt_template: bad template id");
}

std::vector<DualQuestion> generate_dual_questions(const RedactedQuestion& primal,
                                                  int max_duals, std::mt19937_64& rng) {
  if (max_duals < 1) throw DataError("generate_dual_questions: max_duals must be >= 1");
  if (primal.domain == Domain::Translation) {
    throw DataError("generate_dual_questions: translation duals are structural, not masked");
  }

  const auto tokens = mathexpr::tokenize(primal.text);
  std::vector<mathexpr::NumericCandidate> maskable;
  for (auto& cand : mathexpr::find_numeric_candidates(tokens)) {
    if (cand.context == mathexpr::ContextClass::Maskable) maskable.push_back(cand);
  }
  if (maskable.empty()) {
    throw NoMaskableCandidatesError("no maskable numeric candidate in primal '" +
                                    primal.id + "'");
  }
  if (static_cast<int>(maskable.size()) > max_duals) maskable.resize(max_duals);

  std::unordered_set<std::string> used_names;
  std::vector<DualQuestion> duals;
  duals.reserve(maskable.size());
  for (std::size_t i = 0; i < maskable.size(); ++i) {
    mathexpr::VariableId var;
    for (int attempt = 0;; ++attempt) {
      var = mathexpr::generate_variable_id(rng);
      if (!used_names.contains(var.name) &&
          primal.text.find(var.name) == std::string::npos) {
        break;
      }
      if (attempt > 64) throw DataError("could not draw a fresh variable id");
    }
    used_names.insert(var.name);

    DualQuestion dual;
    dual.primal_id = primal.id;
    dual.dual_index = static_cast<int>(i);
    dual.masked = mathexpr::mask_candidate(tokens, maskable[i], var);
    dual.template_id =
        static_cast<TemplateId>((fnv1a64(primal.id) + i) % kTemplateCount);
    dual.rendered_prompt_template = make_prompt_template(dual.template_id, var.name);
    dual.hidden_value = dual.masked.hidden_value;
    dual.status = DualStatus::Unfiltered;
    duals.push_back(std::move(dual));
  }
  return duals;
}

std::string render_dual_prompt(const DualQuestion& dual, std::string_view boxed_answer) {
  if (boxed_answer.empty()) throw DataError("render_dual_prompt: empty answer");
  std::string sentence = dual.rendered_prompt_template;
  const std::size_t at = sentence.find(kAnswerPlaceholder);
  if (at == std::string::npos) {
    throw DataError("dual '" + dual.id() + "' template lacks the {boxed_answer} placeholder");
  }
  sentence.replace(at, kAnswerPlaceholder.size(), boxed_answer);
  return dual.masked.masked_text + "\n\n" + sentence + "\n" + std::string(kBoxedInstruction);
}

std::string render_primal_prompt(std::string_view question_text) {
  return std::string(question_text) +
         "\n\nPlease reason step by step, and put your final answer in \\boxed{}.";
}

bool solver_verdict(const DualQuestion& dual, const std::string& answer, DualSolver& solver,
                    double tolerance) {
  std::vector<std::string> samples;
  try {
    samples = solver.reconstruct(dual, answer);
  } catch (const BackendError& e) {
    throw SolverFailureError("dual '" + dual.id() + "': " + e.what());
  }
  if (samples.empty()) return false;
  std::size_t successes = 0;
  for (const auto& s : samples) {
    if (reward::numeric_equal(s, dual.hidden_value, tolerance)) ++successes;
  }
  return 2 * successes > samples.size();
}

std::vector<std::string> distinct_pool_answers(std::span<const CandidateTrajectory> pool,
                                               double tolerance) {
  std::vector<std::string> distinct;
  for (const auto& traj : pool) {
    if (!traj.extracted_answer) continue;
    const std::string& answer = *traj.extracted_answer;
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const auto& rep) {
      return reward::numeric_equal(rep, answer, tolerance);
    });
    if (!seen) distinct.push_back(answer);
  }
  return distinct;
}

namespace {

int count_solving(const DualQuestion& dual, std::span<const CandidateTrajectory> pool,
                  DualSolver& solver, double tolerance) {
  int solving = 0;
  for (const auto& answer : distinct_pool_answers(pool, tolerance)) {
    if (solver_verdict(dual, answer, solver, tolerance)) ++solving;
  }
  return solving;
}

}  // namespace

bool check_answerability(const DualQuestion& dual, std::span<const CandidateTrajectory> pool,
                         DualSolver& solver, double tolerance) {
  if (pool.empty()) throw DataError("check_answerability: empty pool");
  for (const auto& answer : distinct_pool_answers(pool, tolerance)) {
    if (solver_verdict(dual, answer, solver, tolerance)) return true;
  }
  return false;
}

bool check_uniqueness(const DualQuestion& dual, std::span<const CandidateTrajectory> pool,
                      DualSolver& solver, double tolerance) {
  return count_solving(dual, pool, solver, tolerance) <= 1;
}

FilterResult filter_dual_questions(std::vector<DualQuestion> duals,
                                   std::span<const CandidateTrajectory> pool,
                                   DualSolver& solver, bool selection_enabled,
                                   double tolerance) {
  FilterResult result;
  result.report.ablation = !selection_enabled;

  for (auto& dual : duals) {
    FilterEntry entry;
    entry.dual_id = dual.id();
    if (!selection_enabled) {
      dual.status = DualStatus::Kept;
      entry.kept = true;
      entry.reason = "ablation: selection disabled";
      entry.n_candidates_solving = -1;  // not evaluated
    } else {
      const int solving = count_solving(dual, pool, solver, tolerance);
      entry.n_candidates_solving = solving;
      if (solving == 0) {
        dual.status = DualStatus::DroppedNotAnswerable;
        entry.reason = "no candidate answer solves the dual";
      } else if (solving > 1) {
        dual.status = DualStatus::DroppedNotUnique;
        entry.reason = "multiple distinct answers solve the dual";
      } else {
        dual.status = DualStatus::Kept;
        entry.kept = true;
        entry.reason = "exactly one solving answer";
      }
    }
    if (dual.status == DualStatus::Kept) result.kept.push_back(dual);
    result.report.entries.push_back(std::move(entry));
  }
  result.all = std::move(duals);
  return result;
}

}  // namespace dupo::dualgen
