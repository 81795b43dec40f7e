// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0
//
// dupo: desk-scale dual-learning preference optimization engine.
//
//   dupo dedup         --in primals.jsonl --out deduped.jsonl
//   dupo construct     --in primals.jsonl --out duals.jsonl
//   dupo sample-filter --primals p.jsonl --duals d.jsonl --out kept.jsonl
//   dupo rerank        --primals p.jsonl --out results.jsonl
//   dupo train-toy     --out train_report.csv
//   dupo mt-score      --pairs pairs.jsonl --out scores.jsonl
//
// Global flags: --config <file>, --preset desk|paper_scale, --seed <n>,
// --backend scripted|remote|cached, --no-selection.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dupo/errors.hpp"
#include "dupo/pipeline.hpp"

namespace {

using dupo::pipeline::PipelineConfig;

struct GlobalFlags {
  std::string config_path;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  bool no_selection = false;
};

PipelineConfig resolve_config(const GlobalFlags& flags) {
  PipelineConfig cfg = PipelineConfig::preset(flags.preset);
  if (!flags.config_path.empty()) cfg = dupo::pipeline::load_config_file(flags.config_path, cfg);
  // command line wins over the file
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.train.seed = *flags.seed;
  }
  if (flags.backend) cfg.backend_type = *flags.backend;
  if (flags.no_selection) cfg.selection_enabled = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DuPO: duality rewards, toy GRPO training, and best-of-N reranking"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalFlags flags;
  app.add_option("--config", flags.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  app.add_option("--preset", flags.preset, "desk or paper_scale");
  app.add_option("--seed", flags.seed, "override every seed");
  app.add_option("--backend", flags.backend, "scripted, remote or cached")
      ->check(CLI::IsMember({"scripted", "remote", "cached"}));
  app.add_flag("--no-selection", flags.no_selection,
               "ablation: disable the unknown-component selection filter");

  std::string in_path, out_path, primals_path, duals_path, pairs_path, report_path;

  auto* dedup = app.add_subcommand("dedup", "whitespace-normalized exact-text deduplication");
  dedup->add_option("--in", in_path)->required()->check(CLI::ExistingFile);
  dedup->add_option("--out", out_path)->required();

  auto* construct = app.add_subcommand("construct", "generate dual questions per primal");
  construct->add_option("--in", in_path)->required()->check(CLI::ExistingFile);
  construct->add_option("--out", out_path)->required();

  auto* filter = app.add_subcommand("sample-filter",
                                    "sample candidate answers and apply both duality principles");
  filter->add_option("--primals", primals_path)->required()->check(CLI::ExistingFile);
  filter->add_option("--duals", duals_path)->required()->check(CLI::ExistingFile);
  filter->add_option("--out", out_path)->required();
  filter->add_option("--report", report_path, "filter report JSONL");

  auto* rerank = app.add_subcommand("rerank", "best-of-N selection by backward accuracy");
  rerank->add_option("--primals", primals_path)->required()->check(CLI::ExistingFile);
  rerank->add_option("--out", out_path)->required();

  auto* train = app.add_subcommand("train-toy", "GRPO on the two-sum toy policy");
  train->add_option("--out", out_path, "training curve CSV")->required();

  auto* mt = app.add_subcommand("mt-score", "round-trip translation rewards");
  mt->add_option("--pairs", pairs_path)->required()->check(CLI::ExistingFile);
  mt->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  try {
    const PipelineConfig cfg = resolve_config(flags);

    if (dedup->parsed()) {
      const auto stats = dupo::pipeline::cmd_dedup(in_path, out_path);
      std::printf("dedup: read=%zu kept=%zu dropped=%zu\n", stats.read, stats.kept,
                  stats.dropped);
      return 0;
    }
    if (construct->parsed()) {
      const auto stats = dupo::pipeline::cmd_construct(in_path, out_path, cfg);
      std::printf("construct: primals=%zu duals=%zu no_candidates=%zu\n", stats.primals,
                  stats.duals, stats.no_candidates);
      for (const auto& [count, primals] : stats.duals_per_primal) {
        std::printf("  duals=%d: %zu primals\n", count, primals);
      }
      return 0;
    }
    if (filter->parsed()) {
      auto backend = dupo::pipeline::make_backend(cfg);
      const auto stats = dupo::pipeline::cmd_sample_and_filter(
          primals_path, duals_path, out_path, report_path, backend.get(), cfg);
      std::printf(
          "sample-filter: primals=%zu duals=%zu kept=%zu not_answerable=%zu not_unique=%zu "
          "failed=%zu%s\n",
          stats.primals, stats.duals_in, stats.kept, stats.dropped_not_answerable,
          stats.dropped_not_unique, stats.failed_primals,
          stats.ablation ? " (ablation: selection disabled)" : "");
      return 0;
    }
    if (rerank->parsed()) {
      auto backend = dupo::pipeline::make_backend(cfg);
      const auto summary = dupo::pipeline::cmd_rerank(primals_path, out_path, backend.get(), cfg);
      std::printf("rerank: total=%zu degraded=%zu", summary.total, summary.degraded);
      if (summary.pick_accuracy) {
        std::printf(" pick_accuracy=%.4f (%zu/%zu)", *summary.pick_accuracy,
                    summary.picked_correct, summary.with_reference);
      }
      std::printf("\n");
      return 0;
    }
    if (train->parsed()) {
      const auto summary = dupo::pipeline::cmd_train_toy(out_path, cfg);
      std::printf("train-toy: steps=%d final_forward_acc=%.4f final_mean_reward=%.4f\n",
                  summary.steps, summary.final_forward_acc_analytic, summary.final_mean_reward);
      return 0;
    }
    if (mt->parsed()) {
      auto backend = dupo::pipeline::make_backend(cfg);
      const auto stats = dupo::pipeline::cmd_mt_score(pairs_path, out_path, backend.get(), cfg);
      std::printf("mt-score: pairs=%zu failed=%zu\n", stats.pairs, stats.failed);
      return 0;
    }
  } catch (const dupo::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const dupo::BackendError& e) {
    std::fprintf(stderr, "backend error: %s\n", e.what());
    return 3;
  } catch (const dupo::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
