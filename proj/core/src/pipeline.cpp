// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/pipeline.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "dupo/errors.hpp"
#include "dupo/rerank.hpp"
#include "dupo/tasks.hpp"
#include "json.hpp"

namespace dupo::pipeline {

namespace {

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out.push_back(' ');
    in_space = false;
    out.push_back(c);
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t per_primal_seed(const PipelineConfig& cfg, const std::string& id) {
  return cfg.seed ^ fnv1a64(id);
}

}  // namespace

DedupStats cmd_dedup(const std::string& in_path, const std::string& out_path) {
  const auto records = read_primal_records(in_path);
  DedupStats stats;
  stats.read = records.size();

  std::unordered_set<std::string> seen;
  std::vector<PrimalRecord> kept;
  for (const auto& rec : records) {
    if (seen.insert(normalize_whitespace(rec.text)).second) {
      kept.push_back(rec);
    } else {
      ++stats.dropped;
    }
  }
  stats.kept = kept.size();
  write_primal_records(out_path, kept);
  return stats;
}

ConstructStats cmd_construct(const std::string& in_path, const std::string& out_path,
                             const PipelineConfig& cfg) {
  const auto primals = read_primal_records(in_path);
  ConstructStats stats;
  stats.primals = primals.size();

  std::vector<DualRecord> out;
  for (const auto& primal : primals) {
    if (primal.domain == dualgen::Domain::Translation) {
      std::fprintf(stderr, "construct: skipping translation primal '%s'\n", primal.id.c_str());
      ++stats.no_candidates;
      continue;
    }
    std::mt19937_64 rng(per_primal_seed(cfg, primal.id));
    try {
      const auto duals =
          dualgen::generate_dual_questions(primal.to_question().redacted(), cfg.max_duals, rng);
      for (const auto& dual : duals) out.push_back(dual_to_record(dual));
      stats.duals += duals.size();
      ++stats.duals_per_primal[static_cast<int>(duals.size())];
    } catch (const NoMaskableCandidatesError&) {
      std::fprintf(stderr, "construct: no maskable number in primal '%s'\n", primal.id.c_str());
      ++stats.no_candidates;
      ++stats.duals_per_primal[0];
    }
  }
  write_dual_records(out_path, out);
  return stats;
}

namespace {

struct IndexedDual {
  std::size_t file_order;
  dualgen::DualQuestion dual;
};

std::vector<dualgen::CandidateTrajectory> sample_pool(const PrimalRecord& primal,
                                                      client::ModelBackend& backend,
                                                      const PipelineConfig& cfg) {
  client::CompletionRequest req;
  req.prompt = dualgen::render_primal_prompt(primal.text);
  req.temperature = cfg.gen_temperature;
  req.max_tokens = cfg.max_tokens;
  req.n = cfg.n_trajectories;
  req.seed = per_primal_seed(cfg, primal.id);
  req.tag = client::RequestTag{primal.id, client::Role::Primal, -1, -1};
  const auto texts = backend.complete(req);

  std::vector<dualgen::CandidateTrajectory> pool;
  pool.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    dualgen::CandidateTrajectory traj;
    traj.primal_id = primal.id;
    traj.sample_index = static_cast<int>(i);
    traj.full_text = texts[i];
    traj.extracted_answer = client::extract_boxed_answer(texts[i]);
    traj.gen_params = dualgen::GenParams{cfg.gen_temperature, cfg.max_tokens, *req.seed};
    pool.push_back(std::move(traj));
  }
  return pool;
}

}  // namespace

SampleFilterStats cmd_sample_and_filter(const std::string& primals_path,
                                        const std::string& duals_path,
                                        const std::string& out_path,
                                        const std::string& report_path,
                                        client::ModelBackend& backend,
                                        const PipelineConfig& cfg) {
  const auto primals = read_primal_records(primals_path);
  const auto dual_records = read_dual_records(duals_path);

  std::unordered_map<std::string, const PrimalRecord*> by_id;
  for (const auto& p : primals) by_id[p.id] = &p;

  // Rebuild questions grouped per primal, keeping file positions so the
  // output preserves input order.
  std::unordered_map<std::string, std::vector<IndexedDual>> grouped;
  std::vector<std::string> primal_order;
  for (std::size_t i = 0; i < dual_records.size(); ++i) {
    const auto& rec = dual_records[i];
    const auto it = by_id.find(rec.primal_id);
    if (it == by_id.end()) {
      throw DataError(duals_path + ": dual references unknown primal '" + rec.primal_id + "'");
    }
    auto& bucket = grouped[rec.primal_id];
    if (bucket.empty()) primal_order.push_back(rec.primal_id);
    const int dual_index = static_cast<int>(bucket.size());
    bucket.push_back(
        IndexedDual{i, dual_from_record(rec, it->second->text, dual_index)});
  }

  SampleFilterStats stats;
  stats.primals = primal_order.size();
  stats.duals_in = dual_records.size();
  stats.ablation = !cfg.selection_enabled;

  std::vector<DualRecord> out(dual_records);
  nlohmann::json report_lines = nlohmann::json::array();

  for (const auto& primal_id : primal_order) {
    auto& bucket = grouped[primal_id];
    std::vector<dualgen::DualQuestion> candidates;
    std::vector<std::size_t> positions;
    for (auto& entry : bucket) {
      if (entry.dual.status == dualgen::DualStatus::DroppedNotAnswerable ||
          entry.dual.status == dualgen::DualStatus::DroppedNotUnique) {
        continue;  // earlier pass already dropped it
      }
      candidates.push_back(entry.dual);
      positions.push_back(entry.file_order);
    }
    if (candidates.empty()) continue;

    try {
      const auto pool = sample_pool(*by_id[primal_id], backend, cfg);
      tasks::BackendDualSolver solver(
          backend, cfg.k_dual_samples,
          tasks::SolveParams{cfg.gen_temperature, cfg.max_tokens,
                             per_primal_seed(cfg, primal_id)});
      auto filtered = dualgen::filter_dual_questions(std::move(candidates), pool, solver,
                                                     cfg.selection_enabled, cfg.tolerance);
      for (std::size_t i = 0; i < filtered.all.size(); ++i) {
        out[positions[i]] = dual_to_record(filtered.all[i]);
        switch (filtered.all[i].status) {
          case dualgen::DualStatus::Kept: ++stats.kept; break;
          case dualgen::DualStatus::DroppedNotAnswerable: ++stats.dropped_not_answerable; break;
          case dualgen::DualStatus::DroppedNotUnique: ++stats.dropped_not_unique; break;
          default: break;
        }
      }
      for (const auto& entry : filtered.report.entries) {
        report_lines.push_back({{"v", 1},
                                {"primal_id", primal_id},
                                {"dual_id", entry.dual_id},
                                {"n_candidates_solving", entry.n_candidates_solving},
                                {"kept", entry.kept},
                                {"reason", entry.reason},
                                {"ablation", filtered.report.ablation}});
      }
    } catch (const BackendError& e) {
      std::fprintf(stderr, "sample-filter: primal '%s' failed: %s\n", primal_id.c_str(),
                   e.what());
      ++stats.failed_primals;
    }
  }

  write_dual_records(out_path, out);
  if (!report_path.empty()) {
    std::ofstream report(report_path, std::ios::trunc);
    if (!report) throw DataError("cannot write '" + report_path + "'");
    for (const auto& line : report_lines) report << line.dump() << '\n';
  }
  return stats;
}

RerankSummary cmd_rerank(const std::string& primals_path, const std::string& out_path,
                         client::ModelBackend& backend, const PipelineConfig& cfg) {
  const auto primals = read_primal_records(primals_path);
  RerankSummary summary;

  std::vector<RerankRecord> out;
  for (const auto& primal : primals) {
    if (primal.domain == dualgen::Domain::Translation) {
      std::fprintf(stderr, "rerank: skipping translation primal '%s'\n", primal.id.c_str());
      continue;
    }
    rerank::RerankRequest req;
    req.primal = primal.to_question().redacted();
    req.n_trajectories = cfg.n_trajectories;
    req.gen_temperature = cfg.gen_temperature;
    req.max_tokens = cfg.max_tokens;
    req.k_dual_samples = cfg.k_dual_samples;
    req.selection_enabled = cfg.selection_enabled;
    req.max_duals = cfg.max_duals;
    req.seed = per_primal_seed(cfg, primal.id);

    const auto result = rerank::rerank(req, backend, cfg.reward_config());

    RerankRecord rec;
    rec.primal_id = primal.id;
    rec.winner_index = result.winner.sample_index;
    rec.degraded = result.degraded;
    rec.tie_break_used = result.tie_break_used;
    for (const auto& row : result.table) {
      rec.table.push_back(RerankTableEntry{row.sample_index, row.extracted_answer,
                                           row.backward_accuracy, row.reward});
    }
    out.push_back(std::move(rec));

    ++summary.total;
    if (result.degraded) ++summary.degraded;
    // Evaluation only: references never reach scoring.
    if (primal.reference_answer) {
      ++summary.with_reference;
      if (result.winner.extracted_answer &&
          reward::numeric_equal(*result.winner.extracted_answer, *primal.reference_answer,
                                cfg.tolerance)) {
        ++summary.picked_correct;
      }
    }
  }
  if (summary.with_reference > 0) {
    summary.pick_accuracy = static_cast<double>(summary.picked_correct) /
                            static_cast<double>(summary.with_reference);
  }
  write_rerank_records(out_path, out);
  return summary;
}

TrainToySummary cmd_train_toy(const std::string& csv_path, const PipelineConfig& cfg) {
  grpo::TwoSumAdapter adapter;
  adapter.reward_cfg = cfg.reward_config();
  adapter.degenerate = !cfg.selection_enabled;

  const auto report = grpo::train(cfg.train, adapter);

  std::ofstream out(csv_path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + csv_path + "'");
  report.write_csv(out);

  TrainToySummary summary;
  summary.steps = static_cast<int>(report.steps.size());
  if (!report.steps.empty()) {
    summary.final_forward_acc_analytic = report.steps.back().forward_acc_analytic;
    summary.final_mean_reward = report.steps.back().mean_reward;
  }
  return summary;
}

MtScoreStats cmd_mt_score(const std::string& pairs_path, const std::string& out_path,
                          client::ModelBackend& backend, const PipelineConfig& cfg) {
  const auto pairs = read_mt_pair_records(pairs_path);
  MtScoreStats stats;

  std::vector<MtScoreRecord> out;
  for (const auto& pair : pairs) {
    tasks::TranslationInstance instance{pair.source, pair.source_lang, pair.target_lang};
    try {
      const auto rec = tasks::translation_adapter_score(
          instance, pair.candidate_translation, backend, cfg.reward_config(),
          cfg.mt_k_back_translations,
          tasks::SolveParams{cfg.gen_temperature, cfg.max_tokens,
                             per_primal_seed(cfg, pair.id)});
      out.push_back(MtScoreRecord{pair.id, rec.backward_accuracy, rec.reward, rec.bleu_samples});
      ++stats.pairs;
    } catch (const EmptyReferenceError& e) {
      std::fprintf(stderr, "mt-score: pair '%s' failed: %s\n", pair.id.c_str(), e.what());
      ++stats.failed;
    }
  }
  write_mt_score_records(out_path, out);
  return stats;
}

}  // namespace dupo::pipeline
