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

#include "rageval/llm.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>
#include <tuple>

#include <spdlog/spdlog.h>

#include "rageval/text.hpp"

namespace rageval {

std::string purpose_name(Purpose p) {
  switch (p) {
    case Purpose::kExtract: return "extract";
    case Purpose::kGlean: return "glean";
    case Purpose::kSummarize: return "summarize";
    case Purpose::kQuestion: return "question";
    case Purpose::kAnswer: return "answer";
    case Purpose::kAnswerExpand: return "answer_expand";
    case Purpose::kJudge: return "judge";
  }
  return "unknown";
}

Purpose purpose_from_name(const std::string& name) {
  for (auto p : {Purpose::kExtract, Purpose::kGlean, Purpose::kSummarize,
                 Purpose::kQuestion, Purpose::kAnswer, Purpose::kAnswerExpand,
                 Purpose::kJudge}) {
    if (purpose_name(p) == name) return p;
  }
  throw InputError("unknown purpose tag: " + name);
}

std::string ChatRequest::fingerprint() const {
  std::string data = purpose_name(purpose);
  for (const auto& m : messages) {
    data += '\x1e';
    data += m.role;
    data += '\x1f';
    data += m.content;
  }
  return sha256_hex(data);
}

std::string ChatRequest::prompt_text() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n";
    out += m.content;
  }
  return out;
}

nlohmann::json to_json(const UsageRecord& u) {
  nlohmann::json j = {{"prompt_tokens", u.prompt_tokens},
                      {"completion_tokens", u.completion_tokens},
                      {"latency_us", u.latency.count()},
                      {"purpose", purpose_name(u.purpose)}};
  if (u.method_id) j["method_id"] = *u.method_id;
  return j;
}

UsageRecord usage_from_json(const nlohmann::json& j) {
  UsageRecord u;
  u.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  u.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  u.latency = Micros(j.value("latency_us", std::int64_t{0}));
  u.purpose = purpose_from_name(j.value("purpose", std::string("judge")));
  if (j.contains("method_id")) u.method_id = j["method_id"].get<std::string>();
  return u;
}

std::int64_t synthesize_tokens(std::size_t words) {
  return static_cast<std::int64_t>((words * 4 + 2) / 3);
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(std::size_t max_in_flight, double max_requests_per_second)
    : max_in_flight_(max_in_flight == 0 ? 1 : max_in_flight) {
  if (max_requests_per_second > 0) {
    min_interval_ = std::chrono::nanoseconds(
        static_cast<std::int64_t>(1e9 / max_requests_per_second));
  }
}

RateLimiter::Permit RateLimiter::acquire() {
  std::chrono::steady_clock::time_point start;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
    auto now = std::chrono::steady_clock::now();
    start = std::max(now, next_start_);
    next_start_ = start + min_interval_;
  }
  std::this_thread::sleep_until(start);
  return Permit(this);
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

std::size_t RateLimiter::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

std::size_t RateLimiter::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_;
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)),
      options_(options),
      limiter_(options.max_in_flight, options.max_requests_per_second) {
  if (!backend_) throw PreconditionError("gateway requires a backend");
}

Completion Gateway::complete(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw PreconditionError("chat request must contain at least one message");
  }
  auto backoff = options_.initial_backoff;
  std::string last_error;
  const int attempts = std::max(1, options_.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    {
      std::lock_guard lock(usage_mu_);
      ++attempts_;
    }
    try {
      auto permit = limiter_.acquire();
      auto t0 = std::chrono::steady_clock::now();
      BackendReply reply = backend_->send(request);
      auto elapsed = std::chrono::duration_cast<Micros>(
          std::chrono::steady_clock::now() - t0);

      Completion out;
      out.text = std::move(reply.text);
      out.attempts = attempt;
      out.usage.purpose = request.purpose;
      out.usage.method_id = request.method_id;
      out.usage.prompt_tokens = reply.prompt_tokens.value_or(
          synthesize_tokens(count_words(request.prompt_text())));
      out.usage.completion_tokens =
          reply.completion_tokens.value_or(synthesize_tokens(count_words(out.text)));
      out.usage.latency = reply.latency.value_or(elapsed);
      if (attempt > 1) {
        spdlog::info("{} request succeeded after {} attempts",
                     purpose_name(request.purpose), attempt);
      }
      record(out.usage);
      return out;
    } catch (const AuthError&) {
      throw;
    } catch (const TransientBackendError& e) {
      last_error = e.what();
      spdlog::warn("{} attempt {}/{} failed: {}", purpose_name(request.purpose),
                   attempt, attempts, last_error);
      if (attempt < attempts) {
        std::this_thread::sleep_for(backoff);
        backoff = Micros(static_cast<std::int64_t>(
            static_cast<double>(backoff.count()) * options_.backoff_factor));
      }
    }
  }
  throw BackendError("exhausted " + std::to_string(attempts) +
                     " attempts: " + last_error);
}

void Gateway::note_parse_failure(const ChatRequest& request, const std::string& error) {
  spdlog::warn("unparseable {} response: {}", purpose_name(request.purpose), error);
}

void Gateway::record(UsageRecord usage) {
  std::lock_guard lock(usage_mu_);
  usage_.push_back(std::move(usage));
}

std::vector<UsageRecord> Gateway::usage() const {
  std::lock_guard lock(usage_mu_);
  return usage_;
}

void Gateway::clear_usage() {
  std::lock_guard lock(usage_mu_);
  usage_.clear();
}

std::size_t Gateway::total_attempts() const {
  std::lock_guard lock(usage_mu_);
  return attempts_;
}

// ---------------------------------------------------------------------------

double UsageRow::mean_tokens() const {
  return calls == 0 ? 0.0 : static_cast<double>(total_tokens()) / static_cast<double>(calls);
}

double UsageRow::mean_latency_seconds() const {
  return calls == 0 ? 0.0
                    : static_cast<double>(latency.count()) / 1e6 /
                          static_cast<double>(calls);
}

UsageReport usage_report(const std::vector<UsageRecord>& records) {
  std::map<std::pair<std::string, std::string>, UsageRow> rows;
  for (const auto& r : records) {
    auto key = std::make_pair(purpose_name(r.purpose), r.method_id.value_or(""));
    auto& row = rows[key];
    row.purpose = key.first;
    row.method_id = key.second;
    ++row.calls;
    row.prompt_tokens += r.prompt_tokens;
    row.completion_tokens += r.completion_tokens;
    row.latency += r.latency;
  }
  UsageReport report;
  for (auto& [k, row] : rows) report.rows.push_back(row);
  return report;
}

std::string format_cost_table(const UsageReport& report, Purpose purpose) {
  std::ostringstream out;
  out << "| Method name | Token consumption | Query time (s) |\n";
  out << "|---|---|---|\n";
  const auto tag = purpose_name(purpose);
  for (const auto& row : report.rows) {
    if (row.purpose != tag || row.method_id.empty()) continue;
    out << "| " << row.method_id << " | "
        << with_thousands(std::llround(row.mean_tokens())) << " | " << std::fixed
        << std::setprecision(2) << row.mean_latency_seconds() << " |\n";
  }
  return out.str();
}

nlohmann::json to_json(const UsageReport& report) {
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"purpose", r.purpose},
                    {"method_id", r.method_id},
                    {"calls", r.calls},
                    {"prompt_tokens", r.prompt_tokens},
                    {"completion_tokens", r.completion_tokens},
                    {"total_tokens", r.total_tokens()},
                    {"latency_us", r.latency.count()},
                    {"mean_tokens", r.mean_tokens()},
                    {"mean_latency_seconds", r.mean_latency_seconds()}});
  }
  return rows;
}

}  // namespace rageval
