// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test scaffolding: throwaway directories, programmable backends,
// and an exact dual solver for masked two-sum questions.

#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "dupo/client.hpp"
#include "dupo/dualgen.hpp"
#include "dupo/mathexpr.hpp"

namespace dupo::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dupo_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Backend driven by an arbitrary function of the request.
class FunctionBackend : public client::ModelBackend {
 public:
  using Fn = std::function<std::vector<std::string>(const client::CompletionRequest&)>;

  explicit FunctionBackend(Fn fn, std::string name = "function")
      : fn_(std::move(fn)), name_(std::move(name)) {}

  std::vector<std::string> complete(const client::CompletionRequest& req) override {
    ++calls_;
    return fn_(req);
  }
  std::string model_name() const override { return name_; }

  int calls() const { return calls_; }

 private:
  Fn fn_;
  std::string name_;
  std::atomic<int> calls_{0};
};

/// Tracks how many requests are in flight at once.
class ConcurrencyProbe : public client::ModelBackend {
 public:
  explicit ConcurrencyProbe(int sleep_ms = 5) : sleep_ms_(sleep_ms) {}

  std::vector<std::string> complete(const client::CompletionRequest& req) override {
    const int now = in_flight_.fetch_add(1) + 1;
    int seen = max_seen_.load();
    while (now > seen && !max_seen_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms_));
    in_flight_.fetch_sub(1);
    return std::vector<std::string>(req.n, "ok");
  }
  std::string model_name() const override { return "probe"; }

  int max_in_flight() const { return max_seen_.load(); }

 private:
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_seen_{0};
  int sleep_ms_;
};

/// Exact solver for duals masked out of "... <a> plus <b> ..." style
/// questions: reconstruction = answer - remaining number.
class ExactTwoSumSolver : public dualgen::DualSolver {
 public:
  std::vector<std::string> reconstruct(const dualgen::DualQuestion& dual,
                                       const std::string& answer) override {
    const long long known = remaining_number(dual);
    const long long c = std::stoll(answer);
    return {std::to_string(c - known)};
  }

  static long long remaining_number(const dualgen::DualQuestion& dual) {
    const auto tokens = mathexpr::tokenize(dual.masked.masked_text);
    for (const auto& tok : tokens.tokens) {
      if (tok.kind == mathexpr::TokenKind::Number) return std::stoll(tok.text);
    }
    throw std::runtime_error("no number left in masked text");
  }
};

/// Solver whose verdicts are fixed up front, keyed by (dual_index, answer).
class TableSolver : public dualgen::DualSolver {
 public:
  // verdict(dual, answer) -> reconstruction string
  using Fn = std::function<std::string(const dualgen::DualQuestion&, const std::string&)>;

  explicit TableSolver(Fn fn) : fn_(std::move(fn)) {}

  std::vector<std::string> reconstruct(const dualgen::DualQuestion& dual,
                                       const std::string& answer) override {
    return {fn_(dual, answer)};
  }

 private:
  Fn fn_;
};

inline dualgen::CandidateTrajectory make_trajectory(std::string primal_id, int index,
                                                    std::optional<std::string> answer) {
  dualgen::CandidateTrajectory traj;
  traj.primal_id = std::move(primal_id);
  traj.sample_index = index;
  traj.full_text = answer ? "solution ends in \\boxed{" + *answer + "}" : "no answer here";
  traj.extracted_answer = std::move(answer);
  return traj;
}

// Case-study fixtures.
inline const char* kAimeQuestion =
    "Let $\\triangle ABC$ have circumcenter $O$ and incenter $I$ with "
    "$\\overline{IA} \\perp \\overline{OI}$, circumradius $13$, and inradius $6$. "
    "Find $AB \\cdot AC$.";

inline const char* kMtSource =
    "As knowledge of Greek declined, the West found itself cut off from its Greek "
    "philosophical and scientific roots.";
inline const char* kMtBack1 =
    "As knowledge of Greek declined, the West found itself cut off from its philosophical "
    "and scientific roots in Greece.";
inline const char* kMtBack2 =
    "As understanding of the Greek language gradually fades, the West finds itself cut off "
    "from the roots of Greek philosophy and science.";
inline const char* kMtCandidate1 =
    "随着希腊语知识的衰落，西方发现自己与希腊的哲学和科学根源失去了联系。";
inline const char* kMtCandidate2 =
    "随着对希腊语的了解逐渐消失，西方发现自己与希腊哲学和科学根源隔绝开来。";

}  // namespace dupo::testing
