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

#include "rageval/stats.hpp"

#include <algorithm>
#include <unordered_map>

#include "rageval/error.hpp"
#include "rageval/parallel.hpp"

namespace rageval {
namespace {

std::optional<Rational> rate(std::int64_t part, std::int64_t whole) {
  if (whole == 0) return std::nullopt;
  return Rational(part, whole);
}

// Value at position k*(n-1)/4 of the sorted sequence.
Rational quartile(const std::vector<Rational>& sorted, std::int64_t k) {
  const auto n = static_cast<std::int64_t>(sorted.size());
  const std::int64_t scaled = k * (n - 1);
  const auto lo = static_cast<std::size_t>(scaled / 4);
  const std::int64_t rem = scaled % 4;
  if (rem == 0) return sorted[lo];
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * Rational(rem, 4);
}

std::optional<BoxPlotStats> box_of(const std::vector<TrialResult>& trials,
                                   std::optional<Rational> (TrialResult::*get)() const) {
  std::vector<Rational> values;
  for (const auto& t : trials) {
    if (auto r = (t.*get)()) values.push_back(*r);
  }
  if (values.empty()) return std::nullopt;
  return box_stats(std::move(values));
}

Tally tally_from_json(const nlohmann::json& j) {
  Tally t;
  t.a_win = j.at("a_win").get<std::int64_t>();
  t.b_win = j.at("b_win").get<std::int64_t>();
  t.tie = j.at("tie").get<std::int64_t>();
  return t;
}

nlohmann::json optional_rational(const std::optional<Rational>& r) {
  return r ? rational_json(*r) : nlohmann::json(nullptr);
}

}  // namespace

void Tally::add(Outcome o) {
  switch (o) {
    case Outcome::kAWins: ++a_win; break;
    case Outcome::kBWins: ++b_win; break;
    case Outcome::kTie: ++tie; break;
  }
}

Tally& Tally::operator+=(const Tally& other) {
  a_win += other.a_win;
  b_win += other.b_win;
  tie += other.tie;
  return *this;
}

std::optional<Rational> TrialResult::win_rate_a() const {
  return rate(counts.a_win, counts.judged());
}
std::optional<Rational> TrialResult::win_rate_b() const {
  return rate(counts.b_win, counts.judged());
}
std::optional<Rational> TrialResult::tie_rate() const { return rate(counts.tie, counts.judged()); }

TrialResult tally_trial(std::size_t trial_index, const std::vector<PairVerdict>& verdicts) {
  TrialResult t;
  t.trial_index = trial_index;
  for (const auto& v : verdicts) {
    if (v.failed) {
      ++t.failed;
      continue;
    }
    t.counts.add(v.outcome);
    for (std::size_t k = 0; k < kAspectCount; ++k) t.aspects[k].add(v.aspect_outcomes[k]);
  }
  return t;
}

BoxPlotStats box_stats(std::vector<Rational> values) {
  if (values.empty()) throw PreconditionError("box statistics need at least one value");
  std::sort(values.begin(), values.end());
  BoxPlotStats b;
  b.q25 = quartile(values, 1);
  b.median = quartile(values, 2);
  b.q75 = quartile(values, 3);
  b.iqr = b.q75 - b.q25;
  const Rational lo_fence = b.q25 - b.iqr * Rational(3, 2);
  const Rational hi_fence = b.q75 + b.iqr * Rational(3, 2);
  bool have_low = false;
  for (const auto& v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
      continue;
    }
    if (!have_low) {
      b.whisker_low = v;
      have_low = true;
    }
    b.whisker_high = v;
  }
  return b;
}

std::optional<Rational> relative_win_rate(std::int64_t a_win, std::int64_t b_win,
                                          std::int64_t tie) {
  if (a_win < 0 || b_win < 0 || tie < 0) throw PreconditionError("negative count");
  return rate(a_win - b_win, a_win + b_win + tie);
}

PairJudge make_llm_judge(const std::vector<Question>& questions, Gateway& llm,
                         const PromptSet& prompts, JudgeOptions options) {
  auto text = std::make_shared<std::unordered_map<std::string, std::string>>();
  for (const auto& q : questions) (*text)[q.question_id] = q.text;
  return [text, &llm, &prompts, options](const AlignedPair& pair, std::size_t trial) {
    auto it = text->find(pair.question_id);
    if (it == text->end()) {
      throw PreconditionError("no question text for " + pair.question_id);
    }
    return evaluate_pair(it->second, pair, llm, prompts, options, trial);
  };
}

TrialResult run_trial(const std::vector<AlignedPair>& pairs, const PairJudge& judge,
                      std::size_t trial_index, std::size_t workers,
                      std::vector<PairVerdict>* verdicts) {
  std::vector<const AlignedPair*> aligned;
  for (const auto& p : pairs) {
    if (p.aligned()) aligned.push_back(&p);
  }
  auto judged = parallel_map(aligned.size(), workers,
                             [&](std::size_t i) { return judge(*aligned[i], trial_index); });
  auto result = tally_trial(trial_index, judged);
  if (verdicts) *verdicts = std::move(judged);
  return result;
}

std::optional<Rational> ComparisonSummary::aspect_relative_win_rate(Aspect a) const {
  const auto& t = pooled_aspects[aspect_index(a)];
  return rageval::relative_win_rate(t.a_win, t.b_win, t.tie);
}

void finalize_summary(ComparisonSummary& s) {
  s.pooled = {};
  s.pooled_aspects = {};
  for (const auto& t : s.trials) {
    s.pooled += t.counts;
    for (std::size_t k = 0; k < kAspectCount; ++k) s.pooled_aspects[k] += t.aspects[k];
  }
  s.box_a = box_of(s.trials, &TrialResult::win_rate_a);
  s.box_b = box_of(s.trials, &TrialResult::win_rate_b);
  s.box_tie = box_of(s.trials, &TrialResult::tie_rate);
  s.relative_win_rate = rageval::relative_win_rate(s.pooled.a_win, s.pooled.b_win, s.pooled.tie);
}

ComparisonSummary run_comparison(const std::string& method_a, const std::string& method_b,
                                 const std::vector<AlignedPair>& pairs, const PairJudge& judge,
                                 int trials, std::size_t workers,
                                 std::vector<std::vector<PairVerdict>>* verdicts) {
  if (trials < 1) throw PreconditionError("trial count M must be >= 1");
  ComparisonSummary s;
  s.method_a = method_a;
  s.method_b = method_b;
  s.pairs_total = pairs.size();
  s.pairs_discarded = static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return !p.aligned(); }));
  if (verdicts) verdicts->clear();
  for (int m = 0; m < trials; ++m) {
    std::vector<PairVerdict> vs;
    s.trials.push_back(run_trial(pairs, judge, static_cast<std::size_t>(m), workers, &vs));
    if (verdicts) verdicts->push_back(std::move(vs));
  }
  finalize_summary(s);
  return s;
}

nlohmann::json to_json(const Tally& t) {
  return {{"a_win", t.a_win}, {"b_win", t.b_win}, {"tie", t.tie}};
}

nlohmann::json to_json(const TrialResult& t) {
  nlohmann::json aspects;
  for (auto a : kAllAspects) aspects[std::string(aspect_name(a))] = to_json(t.aspects[aspect_index(a)]);
  return {{"trial_index", t.trial_index},
          {"a_win", t.counts.a_win},
          {"b_win", t.counts.b_win},
          {"tie", t.counts.tie},
          {"failed", t.failed},
          {"win_rate_a", optional_rational(t.win_rate_a())},
          {"win_rate_b", optional_rational(t.win_rate_b())},
          {"tie_rate", optional_rational(t.tie_rate())},
          {"aspects", aspects}};
}

nlohmann::json to_json(const BoxPlotStats& b) {
  nlohmann::json outliers = nlohmann::json::array();
  for (const auto& o : b.outliers) outliers.push_back(rational_json(o));
  return {{"median", rational_json(b.median)},
          {"q25", rational_json(b.q25)},
          {"q75", rational_json(b.q75)},
          {"iqr", rational_json(b.iqr)},
          {"whisker_low", rational_json(b.whisker_low)},
          {"whisker_high", rational_json(b.whisker_high)},
          {"outliers", outliers}};
}

nlohmann::json to_json(const ComparisonSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : s.trials) trials.push_back(to_json(t));
  auto box = [](const std::optional<BoxPlotStats>& b) {
    return b ? to_json(*b) : nlohmann::json(nullptr);
  };
  nlohmann::json aspects;
  for (auto a : kAllAspects) {
    aspects[std::string(aspect_name(a))] = {
        {"counts", to_json(s.pooled_aspects[aspect_index(a)])},
        {"relative_win_rate", optional_rational(s.aspect_relative_win_rate(a))}};
  }
  return {{"method_a", s.method_a},
          {"method_b", s.method_b},
          {"pairs_total", s.pairs_total},
          {"pairs_discarded", s.pairs_discarded},
          {"trial_count", s.trials.size()},
          {"trials", trials},
          {"box",
           {{"win_rate_a", box(s.box_a)}, {"win_rate_b", box(s.box_b)}, {"tie_rate", box(s.box_tie)}}},
          {"quartile_method", kQuartileMethod},
          {"pooled", to_json(s.pooled)},
          {"relative_win_rate", optional_rational(s.relative_win_rate)},
          {"aspects", aspects}};
}

ComparisonSummary summary_from_json(const nlohmann::json& j) {
  ComparisonSummary s;
  s.method_a = j.at("method_a").get<std::string>();
  s.method_b = j.at("method_b").get<std::string>();
  s.pairs_total = j.value("pairs_total", std::size_t{0});
  s.pairs_discarded = j.value("pairs_discarded", std::size_t{0});
  for (const auto& jt : j.at("trials")) {
    TrialResult t;
    t.trial_index = jt.at("trial_index").get<std::size_t>();
    t.counts = tally_from_json(jt);
    t.failed = jt.at("failed").get<std::int64_t>();
    for (auto a : kAllAspects) {
      t.aspects[aspect_index(a)] = tally_from_json(jt.at("aspects").at(std::string(aspect_name(a))));
    }
    s.trials.push_back(t);
  }
  finalize_summary(s);
  return s;
}

}  // namespace rageval
