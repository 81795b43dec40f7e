// Copyright (c) 2026 the dupo authors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <thread>

#include "dupo/client.hpp"
#include "dupo/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dupo::client {

namespace {

// Counting semaphore; keeps concurrent wire calls at or under the cap.
class InFlightGate {
 public:
  explicit InFlightGate(int cap) : available_(cap) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::scoped_lock lock(mu_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int available_;
};

struct GateGuard {
  InFlightGate& gate;
  explicit GateGuard(InFlightGate& g) : gate(g) { gate.acquire(); }
  ~GateGuard() { gate.release(); }
};

std::string body_snippet(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

class RemoteBackend : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteConfig config)
      : config_(std::move(config)), gate_(std::max(1, config_.max_in_flight)) {
    if (const char* token = std::getenv(config_.auth_env.c_str())) token_ = token;
    jitter_rng_.seed(std::random_device{}());
  }

  std::string model_name() const override { return config_.model; }

  std::vector<std::string> complete(const CompletionRequest& req) override {
    nlohmann::json payload{
        {"model", config_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
        {"n", req.n},
    };
    if (req.seed) payload["seed"] = *req.seed;  // best effort; providers may ignore
    const std::string body = payload.dump();

    int attempt = 0;
    for (;;) {
      GateGuard guard(gate_);
      httplib::Client cli(config_.base_url);
      cli.set_connection_timeout(std::chrono::milliseconds(config_.timeout_ms));
      cli.set_read_timeout(std::chrono::milliseconds(config_.timeout_ms));
      httplib::Headers headers;
      if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

      auto res = cli.Post(config_.path, headers, body, "application/json");

      if (res && res->status >= 200 && res->status < 300) return parse_choices(res->body, req.n);

      const bool retryable =
          !res || res->status == 429 || (res->status >= 500 && res->status < 600);
      if (!retryable) throw ProtocolError(res->status, body_snippet(res->body));
      if (attempt >= config_.max_retries) {
        if (!res) {
          const auto err = httplib::to_string(res.error());
          if (res.error() == httplib::Error::ConnectionTimeout ||
              res.error() == httplib::Error::Read) {
            throw TimeoutError("remote backend timed out: " + err);
          }
          throw BackendError("remote backend transport failure: " + err);
        }
        if (res->status == 429) {
          throw RateLimitedError("remote backend rate limited after " +
                                 std::to_string(attempt + 1) + " attempts");
        }
        throw ProtocolError(res->status, body_snippet(res->body));
      }
      backoff(attempt);
      ++attempt;
    }
  }

 private:
  static std::vector<std::string> parse_choices(const std::string& body, int n) {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(body);
    } catch (const std::exception&) {
      throw ProtocolError(200, "unparseable response body: " + body_snippet(body));
    }
    std::vector<std::string> out;
    if (!obj.contains("choices") || !obj["choices"].is_array()) {
      throw ProtocolError(200, "response lacks choices[]");
    }
    for (const auto& choice : obj["choices"]) {
      if (choice.contains("message") && choice["message"].contains("content")) {
        out.push_back(choice["message"]["content"].get<std::string>());
      } else if (choice.contains("text")) {
        out.push_back(choice["text"].get<std::string>());
      }
    }
    if (static_cast<int>(out.size()) != n) {
      throw ProtocolError(200, "expected " + std::to_string(n) + " choices, got " +
                                   std::to_string(out.size()));
    }
    return out;
  }

  void backoff(int attempt) {
    int jitter;
    {
      std::scoped_lock lock(rng_mu_);
      jitter = static_cast<int>(jitter_rng_() % 100);
    }
    const int ms = config_.backoff_base_ms * (1 << std::min(attempt, 6)) + jitter;
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }

  RemoteConfig config_;
  std::string token_;
  InFlightGate gate_;
  std::mt19937_64 jitter_rng_;
  std::mutex rng_mu_;
};

}  // namespace

std::unique_ptr<ModelBackend> make_remote_backend(RemoteConfig config) {
  return std::make_unique<RemoteBackend>(std::move(config));
}

}  // namespace dupo::client
