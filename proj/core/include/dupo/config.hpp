// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dupo/client.hpp"
#include "dupo/grpo.hpp"

namespace dupo::pipeline {

// Scripted backend rules in config-file form.
struct ScriptedProgramSpec {
  std::string type = "fixed";  // fixed | echo | round_robin | bernoulli
  std::string text;
  std::vector<std::string> responses;
  double p = 0.5;
  std::string success_text;
  std::string failure_text;
  std::uint64_t seed = 0;
};

struct ScriptedRuleSpec {
  std::vector<std::string> prompt_contains;
  std::optional<std::string> role;  // "primal" | "dual"
  ScriptedProgramSpec program;
};

struct ScriptedSettings {
  // Fallback rule keeps the backend a total function.
  ScriptedProgramSpec default_program{"fixed", "\\boxed{0}", {}, 0.5, "", "", 0};
  std::vector<ScriptedRuleSpec> rules;
};

struct PipelineConfig {
  // reward
  double lambda = 1.0;
  double tolerance = 1e-6;
  int k_dual_samples = 8;

  // sampling / rerank
  int n_trajectories = 8;
  double gen_temperature = 0.8;
  int max_tokens = 1024;
  int max_duals = 4;
  std::uint64_t seed = 42;
  bool selection_enabled = true;
  int mt_k_back_translations = 1;

  grpo::TrainConfig train;

  // backend selection
  std::string backend_type = "scripted";  // scripted | remote | cached
  std::string cached_inner = "scripted";  // what a cached backend wraps
  std::string cache_path = "dupo_cache.jsonl";
  client::RemoteConfig remote;
  ScriptedSettings scripted;

  reward::RewardConfig reward_config() const {
    return reward::RewardConfig{lambda, tolerance, k_dual_samples};
  }

  /// "desk" (defaults above) or "paper_scale" (batch 512, minibatch 32,
  /// lr 1e-6, 32 trajectories, 30k output tokens).
  static PipelineConfig preset(const std::string& name);
};

/// Overlays a JSON config file onto `base`. Unknown keys anywhere in the
/// document are rejected with ConfigError.
PipelineConfig load_config_file(const std::string& path, PipelineConfig base);

/// Owns whichever backends the configuration composes.
struct BackendHandle {
  std::unique_ptr<client::ModelBackend> inner;
  std::unique_ptr<client::ModelBackend> outer;

  client::ModelBackend& get() { return outer ? *outer : *inner; }
};

BackendHandle make_backend(const PipelineConfig& cfg);

/// Builds just the scripted backend described by the settings block.
std::unique_ptr<client::ModelBackend> make_scripted_backend(const ScriptedSettings& settings);

}  // namespace dupo::pipeline
