// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dupo/mathexpr.hpp"

namespace dupo::dualgen {

enum class Domain { Math, Translation, SyntheticTwoSum };

const char* to_string(Domain d);
std::optional<Domain> domain_from_string(std::string_view s);

/// Everything scoring code is allowed to see about a question. The
/// reference answer deliberately does not travel with this view.
struct RedactedQuestion {
  std::string id;
  std::string text;
  Domain domain = Domain::Math;
};

struct PrimalQuestion {
  std::string id;
  std::string text;
  Domain domain = Domain::Math;
  // Oracle use only: consumed by evaluation reports and test oracles,
  // never by reward, grpo, or rerank logic.
  std::optional<std::string> reference_answer;

  RedactedQuestion redacted() const { return RedactedQuestion{id, text, domain}; }
};

enum class DualStatus { Unfiltered, Kept, DroppedNotAnswerable, DroppedNotUnique };

const char* to_string(DualStatus s);
std::optional<DualStatus> dual_status_from_string(std::string_view s);

enum class TemplateId : int {
  AppendixDetermine = 0,
  CheckYourWork = 1,
  CorrespondingValue = 2,
};

inline constexpr int kTemplateCount = 3;

struct DualQuestion {
  std::string primal_id;
  int dual_index = 0;
  mathexpr::MaskedExpression masked;
  TemplateId template_id = TemplateId::AppendixDetermine;
  // Template sentence with the variable substituted and the literal
  // placeholder "{boxed_answer}" left for render time.
  std::string rendered_prompt_template;
  std::string hidden_value;
  DualStatus status = DualStatus::Unfiltered;

  std::string id() const { return primal_id + "#" + std::to_string(dual_index); }
};

struct GenParams {
  double temperature = 0.8;
  int max_tokens = 1024;
  std::uint64_t seed = 0;
};

struct CandidateTrajectory {
  std::string primal_id;
  int sample_index = 0;
  std::string full_text;
  std::optional<std::string> extracted_answer;
  GenParams gen_params;
};

/// One dual question per maskable numeric candidate, earliest candidates
/// first, capped at max_duals. Throws NoMaskableCandidatesError when the
/// question has no maskable number.
std::vector<DualQuestion> generate_dual_questions(const RedactedQuestion& primal,
                                                  int max_duals, std::mt19937_64& rng);

/// Builds the template sentence for one dual (variable substituted,
/// "{boxed_answer}" placeholder intact).
std::string make_prompt_template(TemplateId id, std::string_view variable_name);

/// Full dual prompt: masked question, template sentence with the answer
/// substituted, and a closing \boxed{} output instruction.
std::string render_dual_prompt(const DualQuestion& dual, std::string_view boxed_answer);

/// Primal prompt with the uniform boxed-answer instruction appended.
std::string render_primal_prompt(std::string_view question_text);

/// Answers dual questions. Model-backed solvers return k samples;
/// exact solvers return one.
class DualSolver {
 public:
  virtual ~DualSolver() = default;
  virtual std::vector<std::string> reconstruct(const DualQuestion& dual,
                                               const std::string& answer) = 0;
};

/// Majority verdict over the solver's reconstruction samples: does this
/// candidate answer solve the dual question?
bool solver_verdict(const DualQuestion& dual, const std::string& answer, DualSolver& solver,
                    double tolerance);

/// Principle 1: at least one pool answer solves the dual.
bool check_answerability(const DualQuestion& dual, std::span<const CandidateTrajectory> pool,
                         DualSolver& solver, double tolerance);

/// Principle 2: at most one distinct pool answer value solves the dual.
bool check_uniqueness(const DualQuestion& dual, std::span<const CandidateTrajectory> pool,
                      DualSolver& solver, double tolerance);

struct FilterEntry {
  std::string dual_id;
  int n_candidates_solving = 0;
  bool kept = false;
  std::string reason;
};

struct FilterReport {
  std::vector<FilterEntry> entries;
  bool ablation = false;  // selection disabled; everything passed through
};

struct FilterResult {
  std::vector<DualQuestion> all;   // statuses written
  std::vector<DualQuestion> kept;
  FilterReport report;
};

/// Applies both principles over distinct pool answer values and writes
/// statuses. With selection_enabled=false everything is kept and the
/// report is flagged as an ablation run.
FilterResult filter_dual_questions(std::vector<DualQuestion> duals,
                                   std::span<const CandidateTrajectory> pool,
                                   DualSolver& solver, bool selection_enabled,
                                   double tolerance);

/// Distinct extracted answers in first-appearance order (numeric-equal
/// duplicates collapse onto their first representative).
std::vector<std::string> distinct_pool_answers(std::span<const CandidateTrajectory> pool,
                                               double tolerance);

}  // namespace dupo::dualgen
