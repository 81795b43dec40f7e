// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dupo/dualgen.hpp"

namespace dupo::pipeline {

// JSON-Lines record shapes, one object per line, each carrying "v": 1.
// Readers reject unknown keys and report malformed lines as
// "<path>:<line>: <problem>".

struct PrimalRecord {
  std::string id;
  std::string text;
  dualgen::Domain domain = dualgen::Domain::Math;
  std::optional<std::string> reference_answer;

  dualgen::PrimalQuestion to_question() const;
  static PrimalRecord from_question(const dualgen::PrimalQuestion& q);
};

struct DualRecord {
  std::string primal_id;
  std::string masked_text;
  std::string variable;
  std::string hidden_value;
  int template_id = 0;
  std::string status = "unfiltered";
};

/// Rebuilds a DualQuestion against its primal text; validates the single
/// variable occurrence and the span round trip.
dualgen::DualQuestion dual_from_record(const DualRecord& record, const std::string& primal_text,
                                       int dual_index);
DualRecord dual_to_record(const dualgen::DualQuestion& dual);

struct RolloutRecord {
  std::string primal_id;
  int sample_index = 0;
  std::string text;
  std::optional<std::string> extracted_answer;
};

struct RerankTableEntry {
  int sample_index = 0;
  std::optional<std::string> extracted_answer;
  double backward_accuracy = 0.0;
  double reward = 0.0;
};

struct RerankRecord {
  std::string primal_id;
  int winner_index = 0;
  std::vector<RerankTableEntry> table;
  bool degraded = false;
  bool tie_break_used = false;
};

struct MtPairRecord {
  std::string id;
  std::string source;
  std::string candidate_translation;
  std::string source_lang = "en";
  std::string target_lang = "zh";
};

struct MtScoreRecord {
  std::string id;
  double mean_bleu = 0.0;
  double reward = 0.0;
  std::vector<double> bleu_samples;
};

std::vector<PrimalRecord> read_primal_records(const std::string& path);
void write_primal_records(const std::string& path, const std::vector<PrimalRecord>& records);

std::vector<DualRecord> read_dual_records(const std::string& path);
void write_dual_records(const std::string& path, const std::vector<DualRecord>& records);

std::vector<MtPairRecord> read_mt_pair_records(const std::string& path);

void write_rerank_records(const std::string& path, const std::vector<RerankRecord>& records);
std::vector<RerankRecord> read_rerank_records(const std::string& path);

void write_mt_score_records(const std::string& path, const std::vector<MtScoreRecord>& records);

}  // namespace dupo::pipeline
