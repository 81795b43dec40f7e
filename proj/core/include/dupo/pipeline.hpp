// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>

#include "dupo/config.hpp"
#include "dupo/records.hpp"

namespace dupo::pipeline {

struct DedupStats {
  std::size_t read = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

/// Exact-text dedup after whitespace normalization, stable first-occurrence
/// order. Originals are written, not the normalized forms.
DedupStats cmd_dedup(const std::string& in_path, const std::string& out_path);

struct ConstructStats {
  std::size_t primals = 0;
  std::size_t duals = 0;
  std::size_t no_candidates = 0;            // primals without a maskable number
  std::map<int, std::size_t> duals_per_primal;  // histogram
};

/// Generates unfiltered dual records for every primal. Questions without a
/// maskable number are logged and skipped, never fatal.
ConstructStats cmd_construct(const std::string& in_path, const std::string& out_path,
                             const PipelineConfig& cfg);

struct SampleFilterStats {
  std::size_t primals = 0;
  std::size_t duals_in = 0;
  std::size_t kept = 0;
  std::size_t dropped_not_answerable = 0;
  std::size_t dropped_not_unique = 0;
  std::size_t failed_primals = 0;  // backend failures, skipped
  bool ablation = false;
};

/// Samples a candidate answer pool per primal and applies the two duality
/// principles to its dual questions. Already-dropped records pass through
/// unchanged, so a second pass filters the survivors of the first.
SampleFilterStats cmd_sample_and_filter(const std::string& primals_path,
                                        const std::string& duals_path,
                                        const std::string& out_path,
                                        const std::string& report_path,
                                        client::ModelBackend& backend,
                                        const PipelineConfig& cfg);

struct RerankSummary {
  std::size_t total = 0;
  std::size_t degraded = 0;
  std::size_t with_reference = 0;
  std::size_t picked_correct = 0;
  std::optional<double> pick_accuracy;  // evaluation only; needs references
};

RerankSummary cmd_rerank(const std::string& primals_path, const std::string& out_path,
                         client::ModelBackend& backend, const PipelineConfig& cfg);

struct TrainToySummary {
  double final_forward_acc_analytic = 0.0;
  double final_mean_reward = 0.0;
  int steps = 0;
};

TrainToySummary cmd_train_toy(const std::string& csv_path, const PipelineConfig& cfg);

struct MtScoreStats {
  std::size_t pairs = 0;
  std::size_t failed = 0;
};

MtScoreStats cmd_mt_score(const std::string& pairs_path, const std::string& out_path,
                          client::ModelBackend& backend, const PipelineConfig& cfg);

}  // namespace dupo::pipeline
