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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/answers.hpp"
#include "rageval/aspect.hpp"
#include "rageval/judge.hpp"
#include "rageval/rational.hpp"

namespace rageval {

struct Tally {
  std::int64_t a_win = 0;
  std::int64_t b_win = 0;
  std::int64_t tie = 0;

  std::int64_t judged() const { return a_win + b_win + tie; }
  void add(Outcome o);
  Tally& operator+=(const Tally& other);
};

struct TrialResult {
  std::size_t trial_index = 0;
  Tally counts;
  std::int64_t failed = 0;
  std::array<Tally, kAspectCount> aspects{};

  // Rates over a_win + b_win + tie; absent when nothing was judged.
  std::optional<Rational> win_rate_a() const;
  std::optional<Rational> win_rate_b() const;
  std::optional<Rational> tie_rate() const;
};

TrialResult tally_trial(std::size_t trial_index, const std::vector<PairVerdict>& verdicts);

struct BoxPlotStats {
  Rational median;
  Rational q25;
  Rational q75;
  Rational iqr;
  Rational whisker_low;   // smallest value inside the lower fence
  Rational whisker_high;  // largest value inside the upper fence
  std::vector<Rational> outliers;  // ascending
};

// Quartiles by linear interpolation between closest ranks (position
// p * (n - 1) in the sorted values); Tukey 1.5 * IQR fences.
BoxPlotStats box_stats(std::vector<Rational> values);

inline constexpr const char* kQuartileMethod =
    "linear interpolation between closest ranks, position p*(n-1); whiskers at 1.5*IQR";

// (a_win - b_win) / (a_win + b_win + tie); absent for a zero denominator.
std::optional<Rational> relative_win_rate(std::int64_t a_win, std::int64_t b_win,
                                          std::int64_t tie);

// Judges one aligned pair within a given trial.
using PairJudge = std::function<PairVerdict(const AlignedPair&, std::size_t trial)>;

PairJudge make_llm_judge(const std::vector<Question>& questions, Gateway& llm,
                         const PromptSet& prompts, JudgeOptions options = {});

// Judges every aligned pair afresh. Discarded pairs are never consumed.
TrialResult run_trial(const std::vector<AlignedPair>& pairs, const PairJudge& judge,
                      std::size_t trial_index, std::size_t workers = 4,
                      std::vector<PairVerdict>* verdicts = nullptr);

struct ComparisonSummary {
  std::string method_a;
  std::string method_b;
  std::size_t pairs_total = 0;
  std::size_t pairs_discarded = 0;
  std::vector<TrialResult> trials;
  std::optional<BoxPlotStats> box_a;
  std::optional<BoxPlotStats> box_b;
  std::optional<BoxPlotStats> box_tie;
  Tally pooled;
  std::array<Tally, kAspectCount> pooled_aspects{};
  std::optional<Rational> relative_win_rate;  // pooled over all trials

  std::optional<Rational> aspect_relative_win_rate(Aspect a) const;
};

void finalize_summary(ComparisonSummary& s);

// M independent trials; relative win rate from counts summed over trials.
ComparisonSummary run_comparison(const std::string& method_a, const std::string& method_b,
                                 const std::vector<AlignedPair>& pairs, const PairJudge& judge,
                                 int trials = 25, std::size_t workers = 4,
                                 std::vector<std::vector<PairVerdict>>* verdicts = nullptr);

nlohmann::json to_json(const Tally& t);
nlohmann::json to_json(const TrialResult& t);
nlohmann::json to_json(const BoxPlotStats& b);
nlohmann::json to_json(const ComparisonSummary& s);
ComparisonSummary summary_from_json(const nlohmann::json& j);

}  // namespace rageval
