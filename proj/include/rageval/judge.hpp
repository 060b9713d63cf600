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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/answers.hpp"
#include "rageval/aspect.hpp"
#include "rageval/llm.hpp"
#include "rageval/prompts.hpp"
#include "rageval/rational.hpp"

namespace rageval {

// Six level descriptions (scores 0..5) per aspect.
struct Rubric {
  std::array<std::array<std::string, 6>, kAspectCount> cells;

  const std::string& cell(Aspect a, int score) const {
    return cells[aspect_index(a)][static_cast<std::size_t>(score)];
  }
};

const Rubric& default_rubric();
std::string render_rubric(const Rubric& rubric);

// Scores from one judge response; slot 0 is the answer shown first.
struct RunScores {
  std::array<std::array<int, kAspectCount>, 2> score{};
  std::array<std::array<std::string, kAspectCount>, 2> explanation;
};

// Strict parse after the lenient repair pass. Throws ParseError naming the
// offending aspect for a missing block, non-integer or out-of-range score.
RunScores parse_judge_response(const std::string& text);

std::string build_judge_prompt(const std::string& question, const std::string& first_answer,
                               const std::string& second_answer, const Rubric& rubric,
                               const PromptSet& prompts);

enum class Order { kAB, kBA };

struct PositionRun {
  Order order = Order::kAB;
  int repetition = 0;
  std::array<int, kAspectCount> score_a{};
  std::array<int, kAspectCount> score_b{};
  std::array<std::string, kAspectCount> explanation_a;
  std::array<std::string, kAspectCount> explanation_b;
  bool failed = false;
  std::string error;
};

enum class Outcome { kAWins, kBWins, kTie };

std::string outcome_name(Outcome o);

// Scores are kept as integer sums over the 2N runs; every average is the
// sum over 2N, so comparisons are exact.
struct PairVerdict {
  std::string question_id;
  int repetitions = 2;  // N
  std::vector<PositionRun> runs;
  std::array<std::int64_t, kAspectCount> sum_a{};
  std::array<std::int64_t, kAspectCount> sum_b{};
  Outcome outcome = Outcome::kTie;
  std::array<Outcome, kAspectCount> aspect_outcomes{};
  bool failed = false;
  std::string error;

  std::int64_t run_count() const { return 2 * static_cast<std::int64_t>(repetitions); }
  Rational aspect_avg_a(Aspect a) const { return Rational(sum_a[aspect_index(a)], run_count()); }
  Rational aspect_avg_b(Aspect a) const { return Rational(sum_b[aspect_index(a)], run_count()); }
  Rational total_a() const;
  Rational total_b() const;
};

// Aggregates exactly 2N runs (N per order) into a verdict. Failed runs make
// the verdict failed.
PairVerdict aggregate_runs(const std::string& question_id, int repetitions,
                           std::vector<PositionRun> runs);

struct JudgeOptions {
  int repetitions = 2;  // N
  int max_attempts = 3;
  std::optional<double> temperature;
};

// Request for one judge call; `nonce` distinguishes repetitions and trials.
ChatRequest build_judge_request(const std::string& question, const std::string& first_answer,
                                const std::string& second_answer, const Rubric& rubric,
                                const PromptSet& prompts, const JudgeOptions& options,
                                std::uint64_t nonce);

std::uint64_t judge_nonce(std::size_t trial, Order order, int repetition);

// Position exchange with repetition: N calls with A first and N with B
// first; each answer's per-aspect score is its average over all 2N runs;
// the higher total wins, equal totals tie. Requires an aligned pair.
PairVerdict evaluate_pair(const std::string& question, const AlignedPair& pair, Gateway& llm,
                          const PromptSet& prompts, const JudgeOptions& options = {},
                          std::size_t trial = 0);

PairVerdict evaluate_answers(const std::string& question_id, const std::string& question,
                             const std::string& answer_a, const std::string& answer_b,
                             Gateway& llm, const PromptSet& prompts,
                             const JudgeOptions& options = {}, std::size_t trial = 0);

// The legacy protocol kept only for bias diagnostics: one call, fixed order,
// the judge must pick a winner. Returns 0 if the answer shown first wins.
int naive_compare(const std::string& question, const std::string& first_answer,
                  const std::string& second_answer, Gateway& llm, const PromptSet& prompts,
                  std::uint64_t nonce = 0, int max_attempts = 3);

nlohmann::json to_json(const PairVerdict& v);
PairVerdict verdict_from_json(const nlohmann::json& j);

}  // namespace rageval
