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

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/llm.hpp"
#include "rageval/prompts.hpp"
#include "rageval/questions.hpp"
#include "rageval/rational.hpp"

namespace rageval {

// Ordered: a pass may only move forward.
enum class GenerationPass { kUnconstrained, kLengthTargeted, kForceAppended };

std::string pass_name(GenerationPass p);
GenerationPass pass_from_name(const std::string& name);

struct Answer {
  std::string question_id;
  std::string method_id;
  std::string text;
  std::size_t word_count = 0;
  GenerationPass generation_pass = GenerationPass::kUnconstrained;
  UsageRecord usage;
};

struct AdapterReply {
  std::string text;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  std::optional<Micros> latency;
};

// Boundary to a RAG system under evaluation. `target_length`, when present,
// is a soft word-count instruction the system embeds in its generation prompt.
class RagAdapter {
 public:
  virtual ~RagAdapter() = default;
  virtual const std::string& method_id() const = 0;
  virtual AdapterReply answer(const std::string& question,
                              std::optional<std::size_t> target_length) = 0;
};

// Deterministic stand-in for a RAG system.
//
//   length_mode "obedient": a targeted answer has exactly target words
//               "partial":  closes `partial_fraction` of the gap per call
//               "ignore":   target_length has no effect
struct ScriptedAdapterConfig {
  std::string method_id = "mock";
  std::string style = "plain";  // seeds the vocabulary; same style, same text
  std::size_t base_words = 200;
  std::size_t spread = 0;  // unconstrained length in [base, base + spread]
  std::string length_mode = "obedient";
  double partial_fraction = 0.5;
  std::set<std::string> fail_on;  // questions containing any of these fail
  std::optional<std::int64_t> tokens_per_answer;  // overrides synthesis
};

ScriptedAdapterConfig scripted_adapter_config_from_json(const nlohmann::json& j);

class ScriptedAdapter : public RagAdapter {
 public:
  explicit ScriptedAdapter(ScriptedAdapterConfig config);
  const std::string& method_id() const override { return config_.method_id; }
  AdapterReply answer(const std::string& question,
                      std::optional<std::size_t> target_length) override;
  std::size_t calls() const { return calls_; }

 private:
  std::string compose(const std::string& question, std::size_t words) const;

  ScriptedAdapterConfig config_;
  std::atomic<std::size_t> calls_{0};
};

// Runs a shell command per request: the request object
// {"question", "target_length"?} is written to its stdin and a reply
// {"answer_text", "usage"?: {"prompt_tokens", "completion_tokens"}} is read
// from its stdout.
class CommandAdapter : public RagAdapter {
 public:
  CommandAdapter(std::string method_id, std::string command);
  const std::string& method_id() const override { return method_id_; }
  AdapterReply answer(const std::string& question,
                      std::optional<std::size_t> target_length) override;

 private:
  std::string method_id_;
  std::string command_;
};

// POSTs the same request object to an HTTP endpoint.
class HttpAdapter : public RagAdapter {
 public:
  HttpAdapter(std::string method_id, std::string url);
  const std::string& method_id() const override { return method_id_; }
  AdapterReply answer(const std::string& question,
                      std::optional<std::size_t> target_length) override;

 private:
  std::string method_id_;
  std::string host_;
  std::string path_;
};

nlohmann::json adapter_request_json(const std::string& question,
                                    std::optional<std::size_t> target_length);
AdapterReply parse_adapter_reply(const std::string& body);

// {"id", "type": "mock"|"command"|"http", ...}
std::unique_ptr<RagAdapter> make_adapter(const nlohmann::json& declaration);

struct AnswerFailure {
  std::string question_id;
  std::string method_id;
  std::string reason;
};

struct AnswerCollection {
  std::vector<Answer> answers;
  std::vector<AnswerFailure> failures;
};

struct AnswerOptions {
  int max_attempts = 3;
};

// Calls the adapter once per question (retrying failures) and records usage
// in `usage_sink`. Questions that keep failing are reported, not answered.
AnswerCollection collect_answers(RagAdapter& adapter, const std::vector<Question>& questions,
                                 Gateway& usage_sink, const AnswerOptions& options = {});

enum class AlignmentStatus { kAligned, kDiscarded };

struct AlignedPair {
  std::string question_id;
  Answer answer_a;
  Answer answer_b;
  std::size_t initial_delta = 0;
  std::size_t length_delta = 0;
  AlignmentStatus status = AlignmentStatus::kAligned;
  int adjust_rounds_used = 0;
  int append_rounds_used = 0;
  std::string reason;  // why a pair was discarded

  bool aligned() const { return status == AlignmentStatus::kAligned; }
};

struct AlignmentOptions {
  std::size_t tolerance_words = 10;
  int max_adjust_rounds = 3;
  int max_append_rounds = 2;
  int max_attempts = 3;
};

// Generate-adjust: the shorter answer is regenerated with the longer one's
// word count as target; if still outside tolerance, the evaluation LLM
// appends meaning-preserving words; otherwise the pair is discarded. The
// longer answer is never modified.
AlignedPair align_pair(const Question& question, const Answer& answer_a, const Answer& answer_b,
                       RagAdapter& adapter_a, RagAdapter& adapter_b, Gateway& llm,
                       const PromptSet& prompts, const AlignmentOptions& options = {});

// Aligns every question. A question unanswered by either side yields a
// discarded pair, so both methods lose it from their denominators.
std::vector<AlignedPair> align_all(const std::vector<Question>& questions,
                                   const AnswerCollection& a, const AnswerCollection& b,
                                   RagAdapter& adapter_a, RagAdapter& adapter_b, Gateway& llm,
                                   const PromptSet& prompts, const AlignmentOptions& options,
                                   std::size_t workers = 4);

struct AlignmentReport {
  std::size_t aligned = 0;
  std::size_t discarded = 0;
  std::optional<Rational> success_rate;  // absent for zero pairs
  std::map<std::size_t, std::size_t> delta_histogram;  // residual delta -> pairs
  std::map<std::string, std::size_t> by_pass;  // final pass of the adjusted answer
};

AlignmentReport alignment_report(const std::vector<AlignedPair>& pairs);

nlohmann::json to_json(const Answer& a);
Answer answer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AlignedPair& p);
AlignedPair aligned_pair_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AlignmentReport& r);

void write_answers(const std::filesystem::path& path, const AnswerCollection& c);
AnswerCollection read_answers(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const std::vector<AlignedPair>& pairs);
std::vector<AlignedPair> read_pairs(const std::filesystem::path& path);

}  // namespace rageval
