// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include "dupo/client.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "dupo/errors.hpp"
#include "json.hpp"

namespace dupo::client {

bool Matcher::matches(const CompletionRequest& req) const {
  if (role && *role != req.tag.role) return false;
  return std::all_of(prompt_contains.begin(), prompt_contains.end(), [&](const auto& s) {
    return req.prompt.find(s) != std::string::npos;
  });
}

struct ScriptedBackend::Rule {
  Matcher matcher;
  Program program;
  std::size_t round_robin_next = 0;
  std::mt19937_64 rng;

  explicit Rule(Matcher m, Program p) : matcher(std::move(m)), program(std::move(p)) {
    if (const auto* b = std::get_if<BernoulliProgram>(&program)) rng.seed(b->seed);
  }
};

ScriptedBackend::ScriptedBackend(Program default_program)
    : default_rule_(std::make_unique<Rule>(Matcher{}, std::move(default_program))) {}

ScriptedBackend::~ScriptedBackend() = default;

void ScriptedBackend::add_rule(Matcher matcher, Program program) {
  rules_.push_back(std::make_unique<Rule>(std::move(matcher), std::move(program)));
}

std::string ScriptedBackend::run_program(Rule& rule, const CompletionRequest& req) {
  if (const auto* f = std::get_if<FixedText>(&rule.program)) return f->text;
  if (std::get_if<EchoPrompt>(&rule.program)) return req.prompt;
  if (const auto* r = std::get_if<RoundRobin>(&rule.program)) {
    if (r->responses.empty()) return {};
    const std::string& out = r->responses[rule.round_robin_next % r->responses.size()];
    ++rule.round_robin_next;
    return out;
  }
  const auto& b = std::get<BernoulliProgram>(rule.program);
  const double u =
      static_cast<double>(rule.rng() >> 11) * 0x1.0p-53;  // uniform in [0,1)
  return u < b.p ? b.success_text : b.failure_text;
}

std::vector<std::string> ScriptedBackend::complete(const CompletionRequest& req) {
  if (req.n < 1) throw DataError("scripted backend: n must be >= 1");
  std::scoped_lock lock(mu_);
  Rule* rule = default_rule_.get();
  for (const auto& r : rules_) {
    if (r->matcher.matches(req)) {
      rule = r.get();
      break;
    }
  }
  std::vector<std::string> out;
  out.reserve(req.n);
  for (int i = 0; i < req.n; ++i) out.push_back(run_program(*rule, req));
  return out;
}

// --- cache ------------------------------------------------------------------

namespace {

std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string cache_key(const CompletionRequest& req, std::string_view model) {
  char num[64];
  std::uint64_t h = fnv1a64(model);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(req.prompt, h);
  std::snprintf(num, sizeof num, "\x1f%.17g\x1f%d\x1f%d", req.temperature, req.max_tokens,
                req.n);
  h = fnv1a64(num, h);
  std::snprintf(num, sizeof num, "\x1f%llu",
                req.seed ? static_cast<unsigned long long>(*req.seed) : 0ull);
  h = fnv1a64(num, h);
  h = fnv1a64(req.seed ? "s" : "u", h);
  return hex64(h);
}

CachedBackend::CachedBackend(ModelBackend& inner, std::string cache_path)
    : inner_(inner), path_(std::move(cache_path)) {
  if (!path_.empty()) load();
}

std::string CachedBackend::model_name() const { return inner_.model_name(); }

void CachedBackend::load() {
  std::ifstream in(path_);
  if (!in) return;  // fresh cache
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      const std::string key = obj.at("key").get<std::string>();
      std::vector<std::string> completions =
          obj.at("completions").get<std::vector<std::string>>();
      entries_[key] = std::move(completions);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: %s:%zu: skipping corrupt cache line (%s)\n",
                   path_.c_str(), lineno, e.what());
    }
  }
}

std::vector<std::string> CachedBackend::complete(const CompletionRequest& req) {
  const std::string key = cache_key(req, inner_.model_name());
  {
    std::scoped_lock lock(mu_);
    const auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  std::vector<std::string> completions = inner_.complete(req);
  std::scoped_lock lock(mu_);
  const auto [it, inserted] = entries_.emplace(key, completions);
  if (inserted) {
    ++misses_;
    if (!path_.empty()) {
      nlohmann::json obj{
          {"v", 1},
          {"key", key},
          {"request",
           {{"prompt", req.prompt},
            {"temperature", req.temperature},
            {"max_tokens", req.max_tokens},
            {"n", req.n},
            {"seed", req.seed ? nlohmann::json(*req.seed) : nlohmann::json()},
            {"model", inner_.model_name()}}},
          {"completions", completions},
          {"timestamp",
           std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
               .count()},
      };
      std::ofstream out(path_, std::ios::app);
      out << obj.dump() << '\n';
    }
  }
  return it->second;
}

std::unique_ptr<CachedBackend> cached(ModelBackend& inner, std::string cache_path) {
  return std::make_unique<CachedBackend>(inner, std::move(cache_path));
}

// --- boxed answer extraction -------------------------------------------------

namespace {

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::string> answer_marker_fallback(std::string_view text) {
  // Scan lines from the end for "answer ... :" / "answer is ...".
  std::size_t end = text.size();
  while (end > 0) {
    std::size_t begin = text.rfind('\n', end - 1);
    const std::size_t line_start = begin == std::string_view::npos ? 0 : begin + 1;
    std::string_view line = text.substr(line_start, end - line_start);

    std::string lower(line);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const std::size_t at = lower.rfind("answer");
    if (at != std::string::npos) {
      std::string_view rest = line.substr(at + 6);
      if (!rest.empty() && rest.front() == 's') rest.remove_prefix(1);  // "answers"
      rest = trim_view(rest);
      if (!rest.empty() && (rest.front() == ':' || rest.front() == '=')) {
        rest.remove_prefix(1);
      } else if (rest.substr(0, 3) == "is " || rest.substr(0, 3) == "is\t") {
        rest.remove_prefix(3);
      } else {
        rest = {};
      }
      rest = trim_view(rest);
      while (!rest.empty() && (rest.back() == '.' || rest.back() == '!')) {
        rest.remove_suffix(1);
        rest = trim_view(rest);
      }
      if (!rest.empty()) return std::string(rest);
    }
    if (line_start == 0) break;
    end = line_start - 1;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_boxed_answer(std::string_view text) {
  constexpr std::string_view marker = "\\boxed{";
  std::size_t search_end = text.size();
  while (true) {
    const std::size_t at = text.rfind(marker, search_end == 0 ? 0 : search_end - 1);
    if (at == std::string_view::npos) break;
    const std::size_t open = at + marker.size() - 1;
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
      if (text[i] == '\\' && i + 1 < text.size() && (text[i + 1] == '{' || text[i + 1] == '}')) {
        ++i;
        continue;
      }
      if (text[i] == '{') ++depth;
      if (text[i] == '}') {
        --depth;
        if (depth == 0) {
          auto content = std::string(trim_view(text.substr(open + 1, i - open - 1)));
          if (!content.empty()) return content;
          break;  // empty box: try an earlier one
        }
      }
    }
    if (at == 0) break;
    search_end = at;  // unbalanced or empty; look further left
  }
  return answer_marker_fallback(text);
}

// --- bounded fan-out ----------------------------------------------------------

std::vector<std::vector<std::string>> complete_many(ModelBackend& backend,
                                                    std::span<const CompletionRequest> requests,
                                                    int max_parallel) {
  if (max_parallel < 1) throw DataError("complete_many: max_parallel must be >= 1");
  std::vector<std::vector<std::string>> results(requests.size());
  if (requests.empty()) return results;

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  const int workers = std::min<int>(max_parallel, static_cast<int>(requests.size()));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= requests.size()) return;
        try {
          results[i] = backend.complete(requests[i]);
        } catch (...) {
          std::scoped_lock lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace dupo::client
