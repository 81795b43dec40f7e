// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/config.hpp"

#include <fstream>

#include "dupo/errors.hpp"
#include "json.hpp"

namespace dupo::pipeline {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + where + key + "'");
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

ScriptedProgramSpec parse_program(const json& obj, const std::string& where) {
  check_keys(obj, where, {"type", "text", "responses", "p", "success_text", "failure_text", "seed"});
  ScriptedProgramSpec spec;
  maybe(obj, "type", spec.type);
  maybe(obj, "text", spec.text);
  maybe(obj, "responses", spec.responses);
  maybe(obj, "p", spec.p);
  maybe(obj, "success_text", spec.success_text);
  maybe(obj, "failure_text", spec.failure_text);
  maybe(obj, "seed", spec.seed);
  if (spec.type != "fixed" && spec.type != "echo" && spec.type != "round_robin" &&
      spec.type != "bernoulli") {
    throw ConfigError("config: unknown scripted program type '" + spec.type + "'");
  }
  return spec;
}

}  // namespace

PipelineConfig PipelineConfig::preset(const std::string& name) {
  PipelineConfig cfg;
  if (name == "desk") return cfg;
  if (name == "paper_scale") {
    cfg.n_trajectories = 32;
    cfg.max_tokens = 30000;
    cfg.train.batch_prompts = 512;
    cfg.train.minibatch = 32;
    cfg.train.group_size = 16;
    cfg.train.lr = 1e-6;
    cfg.train.grad_clip = 1.0;
    cfg.train.temperature = 1.0;
    return cfg;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper_scale)");
}

PipelineConfig load_config_file(const std::string& path, PipelineConfig cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json obj;
  try {
    obj = json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!obj.is_object()) throw ConfigError("config '" + path + "': expected a JSON object");

  check_keys(obj, "",
             {"lambda", "tolerance", "k_dual_samples", "n_trajectories", "gen_temperature",
              "max_tokens", "max_duals", "seed", "selection_enabled", "mt_k_back_translations",
              "train", "backend"});
  maybe(obj, "lambda", cfg.lambda);
  maybe(obj, "tolerance", cfg.tolerance);
  maybe(obj, "k_dual_samples", cfg.k_dual_samples);
  maybe(obj, "n_trajectories", cfg.n_trajectories);
  maybe(obj, "gen_temperature", cfg.gen_temperature);
  maybe(obj, "max_tokens", cfg.max_tokens);
  maybe(obj, "max_duals", cfg.max_duals);
  maybe(obj, "seed", cfg.seed);
  maybe(obj, "selection_enabled", cfg.selection_enabled);
  maybe(obj, "mt_k_back_translations", cfg.mt_k_back_translations);

  if (obj.contains("train")) {
    const json& t = obj.at("train");
    check_keys(t, "train.",
               {"group_size", "batch_prompts", "minibatch", "lr", "grad_clip", "steps",
                "temperature", "seed"});
    maybe(t, "group_size", cfg.train.group_size);
    maybe(t, "batch_prompts", cfg.train.batch_prompts);
    maybe(t, "minibatch", cfg.train.minibatch);
    maybe(t, "lr", cfg.train.lr);
    maybe(t, "grad_clip", cfg.train.grad_clip);
    maybe(t, "steps", cfg.train.steps);
    maybe(t, "temperature", cfg.train.temperature);
    maybe(t, "seed", cfg.train.seed);
  }

  if (obj.contains("backend")) {
    const json& b = obj.at("backend");
    check_keys(b, "backend.", {"type", "inner", "cache_path", "remote", "scripted"});
    maybe(b, "type", cfg.backend_type);
    maybe(b, "inner", cfg.cached_inner);
    maybe(b, "cache_path", cfg.cache_path);
    if (b.contains("remote")) {
      const json& r = b.at("remote");
      check_keys(r, "backend.remote.",
                 {"base_url", "model", "auth_env", "path", "timeout_ms", "max_retries",
                  "max_in_flight"});
      maybe(r, "base_url", cfg.remote.base_url);
      maybe(r, "model", cfg.remote.model);
      maybe(r, "auth_env", cfg.remote.auth_env);
      maybe(r, "path", cfg.remote.path);
      maybe(r, "timeout_ms", cfg.remote.timeout_ms);
      maybe(r, "max_retries", cfg.remote.max_retries);
      maybe(r, "max_in_flight", cfg.remote.max_in_flight);
    }
    if (b.contains("scripted")) {
      const json& s = b.at("scripted");
      check_keys(s, "backend.scripted.", {"default", "rules"});
      if (s.contains("default")) {
        cfg.scripted.default_program = parse_program(s.at("default"), "backend.scripted.default.");
      }
      if (s.contains("rules")) {
        cfg.scripted.rules.clear();
        for (const json& r : s.at("rules")) {
          check_keys(r, "backend.scripted.rules[].", {"contains", "role", "program"});
          ScriptedRuleSpec rule;
          maybe(r, "contains", rule.prompt_contains);
          if (r.contains("role")) {
            const auto role = r.at("role").get<std::string>();
            if (role != "primal" && role != "dual") {
              throw ConfigError("config: rule role must be primal or dual");
            }
            rule.role = role;
          }
          if (!r.contains("program")) throw ConfigError("config: rule without program");
          rule.program = parse_program(r.at("program"), "backend.scripted.rules[].program.");
          cfg.scripted.rules.push_back(std::move(rule));
        }
      }
    }
  }

  if (cfg.lambda <= 0 || cfg.tolerance < 0 || cfg.k_dual_samples < 1 ||
      cfg.n_trajectories < 1 || cfg.max_duals < 1) {
    throw ConfigError("config: values out of range");
  }
  return cfg;
}

namespace {

client::Program to_program(const ScriptedProgramSpec& spec) {
  if (spec.type == "fixed") return client::FixedText{spec.text};
  if (spec.type == "echo") return client::EchoPrompt{};
  if (spec.type == "round_robin") return client::RoundRobin{spec.responses};
  return client::BernoulliProgram{spec.p, spec.success_text, spec.failure_text, spec.seed};
}

}  // namespace

std::unique_ptr<client::ModelBackend> make_scripted_backend(const ScriptedSettings& settings) {
  auto backend = std::make_unique<client::ScriptedBackend>(to_program(settings.default_program));
  for (const auto& rule : settings.rules) {
    client::Matcher matcher;
    matcher.prompt_contains = rule.prompt_contains;
    if (rule.role) {
      matcher.role = *rule.role == "primal" ? client::Role::Primal : client::Role::Dual;
    }
    backend->add_rule(std::move(matcher), to_program(rule.program));
  }
  return backend;
}

BackendHandle make_backend(const PipelineConfig& cfg) {
  BackendHandle handle;
  if (cfg.backend_type == "scripted") {
    handle.inner = make_scripted_backend(cfg.scripted);
    return handle;
  }
  if (cfg.backend_type == "remote") {
    handle.inner = client::make_remote_backend(cfg.remote);
    return handle;
  }
  if (cfg.backend_type == "cached") {
    handle.inner = cfg.cached_inner == "remote"
                       ? client::make_remote_backend(cfg.remote)
                       : make_scripted_backend(cfg.scripted);
    handle.outer = client::cached(*handle.inner, cfg.cache_path);
    return handle;
  }
  throw ConfigError("unknown backend type '" + cfg.backend_type + "'");
}

}  // namespace dupo::pipeline
