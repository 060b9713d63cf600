// Copyright 2026 The rageval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/error.hpp"

namespace rageval {

enum class Purpose { kExtract, kGlean, kSummarize, kQuestion, kAnswer, kAnswerExpand, kJudge };

std::string purpose_name(Purpose p);
Purpose purpose_from_name(const std::string& name);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::optional<double> temperature;
  std::optional<int> max_output;
  Purpose purpose = Purpose::kJudge;
  std::optional<std::string> method_id;
  // Structured copies of what the prompt carries. Scripted backends route on
  // these; remote backends never send them.
  std::map<std::string, std::string> hints;
  // Distinguishes repeated samples of one prompt (judge repetitions, trials).
  // Only stochastic personas read it; it is not part of the fingerprint.
  std::uint64_t nonce = 0;

  // Digest of purpose and messages.
  std::string fingerprint() const;
  std::string prompt_text() const;
};

using Micros = std::chrono::microseconds;

struct UsageRecord {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Micros latency{0};
  Purpose purpose = Purpose::kJudge;
  std::optional<std::string> method_id;

  std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
  double latency_seconds() const { return static_cast<double>(latency.count()) / 1e6; }
};

nlohmann::json to_json(const UsageRecord& u);
UsageRecord usage_from_json(const nlohmann::json& j);

// Raw reply from one backend attempt. Token counts and latency are optional;
// the gateway measures latency when the backend does not supply it.
struct BackendReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  std::optional<Micros> latency;
};

// Retryable failure: network error, HTTP 429 or 5xx.
class TransientBackendError : public BackendError {
 public:
  using BackendError::BackendError;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendReply send(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
  // True when usage is synthesized rather than measured.
  virtual bool synthesized_usage() const { return false; }
};

// Mock token accounting: ceil(words * 4 / 3).
std::int64_t synthesize_tokens(std::size_t words);

struct Completion {
  std::string text;
  UsageRecord usage;
  int attempts = 1;
};

// Bounds concurrent requests and spaces request starts.
class RateLimiter {
 public:
  RateLimiter(std::size_t max_in_flight, double max_requests_per_second);

  class Permit {
   public:
    explicit Permit(RateLimiter* owner) : owner_(owner) {}
    Permit(Permit&& o) noexcept : owner_(std::exchange(o.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit() {
      if (owner_) owner_->release();
    }

   private:
    RateLimiter* owner_;
  };

  Permit acquire();
  std::size_t in_flight() const;
  std::size_t peak_in_flight() const;

 private:
  void release();

  std::size_t max_in_flight_;
  std::chrono::nanoseconds min_interval_{0};
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

struct GatewayOptions {
  int max_attempts = 4;
  Micros initial_backoff{std::chrono::milliseconds(500)};
  double backoff_factor = 2.0;
  std::size_t max_in_flight = 8;
  double max_requests_per_second = 0.0;  // 0 = unlimited
};

// Shared entry point to a backend: retries transient failures with
// exponential backoff, enforces the rate limit and records usage.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  // Throws BackendError once attempts are exhausted, AuthError immediately.
  Completion complete(const ChatRequest& request);

  // Re-issues the request until `parse` succeeds (ParseError triggers a
  // retry) or `max_attempts` responses have been rejected.
  template <typename Parse>
  auto complete_parsed(const ChatRequest& request, Parse&& parse, int max_attempts)
      -> decltype(parse(std::string{})) {
    std::string last_error;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
      auto done = complete(request);
      try {
        return parse(done.text);
      } catch (const ParseError& e) {
        last_error = e.what();
        note_parse_failure(request, last_error);
      }
    }
    throw ParseError("response unparseable after " + std::to_string(max_attempts) +
                     " attempts: " + last_error);
  }

  void record(UsageRecord usage);
  std::vector<UsageRecord> usage() const;
  void clear_usage();

  std::size_t total_attempts() const;
  const Backend& backend() const { return *backend_; }
  const RateLimiter& limiter() const { return limiter_; }
  const GatewayOptions& options() const { return options_; }

 private:
  void note_parse_failure(const ChatRequest& request, const std::string& error);

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  RateLimiter limiter_;
  mutable std::mutex usage_mu_;
  std::vector<UsageRecord> usage_;
  std::size_t attempts_ = 0;
};

struct UsageRow {
  std::string purpose;
  std::string method_id;  // empty when not attributed
  std::size_t calls = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Micros latency{0};

  std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
  double mean_tokens() const;
  double mean_latency_seconds() const;
};

struct UsageReport {
  std::vector<UsageRow> rows;  // sorted by (purpose, method_id)
  bool empty() const { return rows.empty(); }
};

UsageReport usage_report(const std::vector<UsageRecord>& records);

// Per-method cost table: "Method name | Token consumption | Query time (s)",
// one row per method with mean tokens (thousands separators) and mean
// latency to two decimals, restricted to the given purpose.
std::string format_cost_table(const UsageReport& report,
                              Purpose purpose = Purpose::kAnswer);

nlohmann::json to_json(const UsageReport& report);

}  // namespace rageval
