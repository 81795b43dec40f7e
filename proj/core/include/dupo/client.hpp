// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace dupo::client {

enum class Role { Primal, Dual };

struct RequestTag {
  std::string primal_id;
  Role role = Role::Primal;
  int trajectory_index = -1;
  int dual_index = -1;
};

struct CompletionRequest {
  std::string prompt;
  double temperature = 0.8;
  int max_tokens = 1024;
  int n = 1;
  std::optional<std::uint64_t> seed;
  RequestTag tag;
};

/// Abstract text-completion source. Implementations must be callable from
/// concurrent workers.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  /// Returns exactly req.n completion texts.
  virtual std::vector<std::string> complete(const CompletionRequest& req) = 0;

  virtual std::string model_name() const = 0;
};

// --- scripted backend ------------------------------------------------------

struct Matcher {
  std::vector<std::string> prompt_contains;  // all substrings must occur
  std::optional<Role> role;

  bool matches(const CompletionRequest& req) const;
};

struct FixedText {
  std::string text;
};

struct EchoPrompt {};

struct RoundRobin {
  std::vector<std::string> responses;
};

struct BernoulliProgram {
  double p = 0.5;
  std::string success_text;
  std::string failure_text;
  std::uint64_t seed = 0;
};

using Program = std::variant<FixedText, EchoPrompt, RoundRobin, BernoulliProgram>;

/// Deterministic rule-driven backend for offline fixtures. The first
/// matching rule answers; the default program guarantees a total function.
/// Same rules + same seed + same request sequence => same transcript.
class ScriptedBackend : public ModelBackend {
 public:
  explicit ScriptedBackend(Program default_program);
  ~ScriptedBackend() override;

  void add_rule(Matcher matcher, Program program);

  std::vector<std::string> complete(const CompletionRequest& req) override;
  std::string model_name() const override { return "scripted"; }

 private:
  struct Rule;
  std::string run_program(Rule& rule, const CompletionRequest& req);

  std::vector<std::unique_ptr<Rule>> rules_;
  std::unique_ptr<Rule> default_rule_;
  std::mutex mu_;
};

// --- remote backend --------------------------------------------------------

struct RemoteConfig {
  std::string base_url;            // e.g. http://localhost:8000
  std::string model;               // provider model name
  std::string auth_env = "DUPO_API_TOKEN";
  std::string path = "/v1/chat/completions";
  int timeout_ms = 30000;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_base_ms = 200;       // exponential, with jitter
};

/// Chat-completions wire client with bounded parallelism and retries on
/// transport errors, 429 and 5xx. The auth token is read from the
/// environment and never logged.
std::unique_ptr<ModelBackend> make_remote_backend(RemoteConfig config);

// --- cache wrapper ---------------------------------------------------------

/// Append-only JSON-Lines request/response cache keyed by
/// hash(prompt, temperature, max_tokens, seed, n, model). Hits are served
/// without touching the wrapped backend. An empty path keeps the cache in
/// memory only. Corrupt lines are skipped with a warning.
class CachedBackend : public ModelBackend {
 public:
  CachedBackend(ModelBackend& inner, std::string cache_path);

  std::vector<std::string> complete(const CompletionRequest& req) override;
  std::string model_name() const override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  void load();

  ModelBackend& inner_;
  std::string path_;
  std::unordered_map<std::string, std::vector<std::string>> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
  std::mutex mu_;
};

std::unique_ptr<CachedBackend> cached(ModelBackend& inner, std::string cache_path);

/// Cache key for a request against a given model. Exposed for tests.
std::string cache_key(const CompletionRequest& req, std::string_view model);

// --- helpers ---------------------------------------------------------------

/// Contents of the last balanced \boxed{...} in the text (brace-aware),
/// falling back to the last "answer:"-style line. nullopt when nothing
/// answer-like is found.
std::optional<std::string> extract_boxed_answer(std::string_view text);

/// Fans requests out over at most max_parallel workers; results come back
/// in request order.
std::vector<std::vector<std::string>> complete_many(ModelBackend& backend,
                                                    std::span<const CompletionRequest> requests,
                                                    int max_parallel);

}  // namespace dupo::client
