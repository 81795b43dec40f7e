// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dupo::reward {

struct RewardConfig {
  double lambda = 1.0;       // reward sensitivity
  double tolerance = 1e-6;   // numeric-equality tolerance
  int k_dual_samples = 8;    // reconstruction samples per dual question
};

/// Canonical form of an answer string: boxed wrapper and $..$ stripped,
/// commas/spaces removed, plus the parsed numeric value when the remainder
/// reads as a rational (`p/q`, `\frac{p}{q}`) or decimal literal.
struct NormalizedAnswer {
  std::string canonical;
  std::optional<long double> value;
};

NormalizedAnswer normalize_answer(std::string_view raw);

/// Numeric equality with tolerance; falls back to exact comparison of the
/// canonical strings when either side fails to parse.
bool numeric_equal(std::string_view a, std::string_view b, double tolerance);

/// BLEU word tokenization: lowercase, split on whitespace and punctuation,
/// CJK codepoints one token each. Exposed for tests.
std::vector<std::string> bleu_tokenize(std::string_view text);

/// Sentence BLEU in [0,1]: geometric mean of modified n-gram precisions up
/// to min(max_n, candidate length, reference length), brevity penalty
/// exp(1 - ref/cand) when the candidate is shorter, and eps=0.1 substituted
/// for zero match counts. bleu(x, x) == 1 for any nonempty x.
/// Throws EmptyReferenceError when the reference has no tokens.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

/// exp(-lambda * distance). Throws DomainError unless 0 <= distance <= 1
/// and lambda > 0.
double dual_reward(double distance, double lambda);

/// Normalized distance d(reconstruction, target) in [0,1] with d(x,x) = 0.
/// ExactMatch and NumericEqual are binary; OneMinusBleu is continuous.
struct DistanceMetric {
  enum class Kind { ExactMatch, NumericEqual, OneMinusBleu };

  Kind kind = Kind::NumericEqual;
  double tolerance = 1e-6;  // NumericEqual only

  double operator()(std::string_view reconstruction, std::string_view target) const;
};

struct DualAttemptCounts {
  std::string dual_id;
  int successes = 0;
  int attempts = 0;
};

/// Pooled success fraction over all duals and samples.
/// Throws NoAttemptsError when there are no attempts at all.
double backward_accuracy(std::span<const DualAttemptCounts> results);

/// 1 - bleu(back_translation, source, 4).
double round_trip_distance(std::string_view source, std::string_view back_translation);

/// Duality-reward bookkeeping for one candidate trajectory.
struct RewardRecord {
  std::string primal_id;
  int sample_index = 0;
  std::vector<DualAttemptCounts> per_dual;
  double backward_accuracy = 0.0;
  double reward = 0.0;  // exp(-lambda * (1 - backward_accuracy))
  bool unparseable = false;
  std::vector<double> bleu_samples;  // translation adapter only
};

/// Assembles a record under the default binding d = 1 - backward_accuracy.
RewardRecord make_reward_record(std::string primal_id, int sample_index,
                                std::vector<DualAttemptCounts> per_dual, double lambda);

}  // namespace dupo::reward
