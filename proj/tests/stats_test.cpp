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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "rageval/error.hpp"
#include "rageval/stats.hpp"
#include "support.hpp"

namespace rageval {
namespace {

// Reference quartile: value at fractional rank p*(n-1), interpolated
// between the neighbouring order statistics.
Rational oracle_quantile(const std::vector<Rational>& sorted, Rational p) {
  Rational h = p * Rational(static_cast<std::int64_t>(sorted.size()) - 1);
  auto lo = static_cast<std::size_t>(boost::rational_cast<std::int64_t>(h));  // floor, h >= 0
  Rational frac = h - Rational(static_cast<std::int64_t>(lo));
  if (frac == Rational(0)) return sorted[lo];
  return sorted[lo] * (Rational(1) - frac) + sorted[lo + 1] * frac;
}

BoxPlotStats oracle_box(std::vector<Rational> v) {
  std::sort(v.begin(), v.end());
  BoxPlotStats b;
  b.q25 = oracle_quantile(v, Rational(1, 4));
  b.median = oracle_quantile(v, Rational(1, 2));
  b.q75 = oracle_quantile(v, Rational(3, 4));
  b.iqr = b.q75 - b.q25;
  std::vector<Rational> inside;
  for (const auto& x : v) {
    if (x < b.q25 - Rational(3, 2) * b.iqr || x > b.q75 + Rational(3, 2) * b.iqr) {
      b.outliers.push_back(x);
    } else {
      inside.push_back(x);
    }
  }
  b.whisker_low = *std::min_element(inside.begin(), inside.end());
  b.whisker_high = *std::max_element(inside.begin(), inside.end());
  return b;
}

void expect_same(const BoxPlotStats& got, const BoxPlotStats& want) {
  EXPECT_EQ(got.q25, want.q25);
  EXPECT_EQ(got.median, want.median);
  EXPECT_EQ(got.q75, want.q75);
  EXPECT_EQ(got.iqr, want.iqr);
  EXPECT_EQ(got.whisker_low, want.whisker_low);
  EXPECT_EQ(got.whisker_high, want.whisker_high);
  EXPECT_EQ(got.outliers, want.outliers);
}

std::vector<Rational> ints(std::initializer_list<int> xs) {
  std::vector<Rational> v;
  for (int x : xs) v.emplace_back(x);
  return v;
}

TEST(RelativeWinRate, SpotValues) {
  EXPECT_EQ(*relative_win_rate(60, 40, 50), Rational(20, 150));
  EXPECT_EQ(*relative_win_rate(60, 40, 50), Rational(2, 15));
  EXPECT_EQ(*relative_win_rate(30, 30, 7), Rational(0));
  EXPECT_EQ(*relative_win_rate(9, 0, 0), Rational(1));
  EXPECT_EQ(*relative_win_rate(0, 9, 0), Rational(-1));
  EXPECT_FALSE(relative_win_rate(0, 0, 0).has_value());
  EXPECT_THROW(relative_win_rate(-1, 0, 0), PreconditionError);
}

TEST(RelativeWinRate, Antisymmetry) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    std::int64_t a = rng() % 200, b = rng() % 200, t = rng() % 200;
    auto ab = relative_win_rate(a, b, t);
    auto ba = relative_win_rate(b, a, t);
    ASSERT_EQ(ab.has_value(), ba.has_value());
    if (ab) {
      EXPECT_EQ(*ab, -*ba);
      EXPECT_LE(abs(*ab), Rational(1));
    }
  }
}

TEST(BoxStats, SpotValues) {
  auto b = box_stats(ints({5, 3, 1, 4, 2}));
  EXPECT_EQ(b.q25, Rational(2));
  EXPECT_EQ(b.median, Rational(3));
  EXPECT_EQ(b.q75, Rational(4));
  EXPECT_EQ(b.iqr, Rational(2));
  EXPECT_TRUE(b.outliers.empty());
  EXPECT_EQ(b.whisker_low, Rational(1));
  EXPECT_EQ(b.whisker_high, Rational(5));

  auto even = box_stats(ints({1, 2, 3, 4}));
  EXPECT_EQ(even.q25, Rational(7, 4));
  EXPECT_EQ(even.median, Rational(5, 2));
  EXPECT_EQ(even.q75, Rational(13, 4));

  auto skew = box_stats(ints({1, 1, 1, 1, 100}));
  EXPECT_EQ(skew.iqr, Rational(0));
  EXPECT_EQ(skew.outliers, ints({100}));
  EXPECT_EQ(skew.whisker_high, Rational(1));

  auto flat = box_stats(std::vector<Rational>(25, Rational(3, 10)));
  EXPECT_EQ(flat.iqr, Rational(0));
  EXPECT_TRUE(flat.outliers.empty());
  EXPECT_EQ(flat.median, Rational(3, 10));

  auto one = box_stats(ints({7}));
  EXPECT_EQ(one.q25, Rational(7));
  EXPECT_EQ(one.q75, Rational(7));
  EXPECT_THROW(box_stats({}), PreconditionError);
}

TEST(BoxStats, MatchesOracleOnRandomInputs) {
  std::mt19937_64 rng(2);
  for (int c = 0; c < 200; ++c) {
    std::size_t n = 1 + rng() % 1000;
    std::int64_t den = 1 + static_cast<std::int64_t>(rng() % 150);
    std::vector<Rational> v;
    for (std::size_t i = 0; i < n; ++i) {
      auto num = static_cast<std::int64_t>(rng() % (den + 1));
      if (rng() % 50 == 0) num += den * 3;  // occasional far value
      v.emplace_back(num, den);
    }
    expect_same(box_stats(v), oracle_box(v));
  }
}

PairVerdict verdict(Outcome o, bool failed = false) {
  PairVerdict v;
  v.outcome = o;
  v.aspect_outcomes.fill(o);
  v.failed = failed;
  return v;
}

TEST(Trial, CountsAndFailures) {
  std::vector<PairVerdict> vs;
  for (int i = 0; i < 60; ++i) vs.push_back(verdict(Outcome::kAWins));
  for (int i = 0; i < 40; ++i) vs.push_back(verdict(Outcome::kBWins));
  for (int i = 0; i < 50; ++i) vs.push_back(verdict(Outcome::kTie));
  auto t = tally_trial(0, vs);
  EXPECT_EQ(t.counts.judged(), 150);
  EXPECT_EQ(*t.win_rate_a(), Rational(60, 150));
  EXPECT_EQ(*t.tie_rate(), Rational(1, 3));
  EXPECT_EQ(*t.win_rate_a() + *t.win_rate_b() + *t.tie_rate(), Rational(1));

  for (int i : {0, 70, 120}) vs[i].failed = true;
  auto f = tally_trial(1, vs);
  EXPECT_EQ(f.failed, 3);
  EXPECT_EQ(f.counts.judged(), 147);
  EXPECT_EQ(*f.win_rate_a(), Rational(59, 147));
  EXPECT_EQ(*f.win_rate_b(), Rational(39, 147));
  EXPECT_EQ(*f.tie_rate(), Rational(49, 147));
  EXPECT_EQ(f.aspects[aspect_index(Aspect::kEmpowerment)].a_win, 59);

  auto empty = tally_trial(2, {});
  EXPECT_FALSE(empty.win_rate_a().has_value());
}

struct Fixture {
  std::vector<Question> questions;
  std::vector<AlignedPair> pairs;
};

Fixture make_pairs(std::size_t n, std::size_t discarded = 0) {
  Fixture f;
  for (std::size_t i = 0; i < n; ++i) {
    Question q;
    q.question_id = "q" + std::to_string(i);
    q.text = "How did event " + std::to_string(i) + " unfold?";
    f.questions.push_back(q);
    AlignedPair p;
    p.question_id = q.question_id;
    p.answer_a.text = "alpha account of event " + std::to_string(i * 7);
    p.answer_b.text = "beta account of event " + std::to_string(i * 11);
    if (i < discarded) p.status = AlignmentStatus::kDiscarded;
    f.pairs.push_back(p);
  }
  return f;
}

TEST(Comparison, DeterministicJudgeHasZeroSpread) {
  auto f = make_pairs(20, 2);
  auto gw = testing::mock_gateway();
  PromptSet prompts;
  auto judge = make_llm_judge(f.questions, *gw, prompts);
  std::vector<std::vector<PairVerdict>> verdicts;
  auto s = run_comparison("a", "b", f.pairs, judge, 25, 4, &verdicts);
  ASSERT_EQ(s.trials.size(), 25u);
  EXPECT_EQ(s.pairs_total, 20u);
  EXPECT_EQ(s.pairs_discarded, 2u);
  EXPECT_EQ(verdicts.size(), 25u);
  EXPECT_EQ(verdicts[0].size(), 18u);
  for (const auto* box : {&s.box_a, &s.box_b, &s.box_tie}) {
    ASSERT_TRUE(box->has_value());
    EXPECT_EQ((*box)->iqr, Rational(0));
    EXPECT_TRUE((*box)->outliers.empty());
  }
  EXPECT_EQ(s.pooled.judged(), 25 * 18);
  EXPECT_EQ(s.relative_win_rate,
            relative_win_rate(s.trials[0].counts.a_win, s.trials[0].counts.b_win,
                              s.trials[0].counts.tie));
}

TEST(Comparison, NoisyJudgeMatchesSortOracle) {
  auto f = make_pairs(16);
  MockConfig cfg;
  cfg.judge = MockPersona::noisy(31337, 1.5);
  auto gw = testing::mock_gateway(cfg);
  PromptSet prompts;
  auto judge = make_llm_judge(f.questions, *gw, prompts);
  auto s = run_comparison("a", "b", f.pairs, judge, 25, 4);
  std::vector<Rational> rates;
  for (const auto& t : s.trials) rates.push_back(*t.win_rate_a());
  auto distinct = rates;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  EXPECT_GT(distinct.size(), 1u);
  expect_same(*s.box_a, oracle_box(rates));

  auto again = run_comparison("a", "b", f.pairs, judge, 25, 1);
  EXPECT_EQ(to_json(again), to_json(s));
}

TEST(Comparison, SingleTrialAndValidation) {
  auto f = make_pairs(5);
  auto gw = testing::mock_gateway();
  PromptSet prompts;
  auto judge = make_llm_judge(f.questions, *gw, prompts);
  auto s = run_comparison("a", "b", f.pairs, judge, 1, 2);
  ASSERT_TRUE(s.box_a.has_value());
  EXPECT_EQ(s.box_a->median, *s.trials[0].win_rate_a());
  EXPECT_EQ(s.box_a->iqr, Rational(0));
  EXPECT_THROW(run_comparison("a", "b", f.pairs, judge, 0), PreconditionError);
}

TEST(Comparison, PooledRateAndJsonRoundTrip) {
  ComparisonSummary s;
  s.method_a = "x";
  s.method_b = "y";
  TrialResult t0;
  t0.counts = {60, 40, 50};
  TrialResult t1;
  t1.trial_index = 1;
  t1.counts = {10, 30, 10};
  t1.aspects[0] = {5, 5, 40};
  s.trials = {t0, t1};
  finalize_summary(s);
  EXPECT_EQ(*s.relative_win_rate, Rational(0, 200));
  EXPECT_EQ(*s.aspect_relative_win_rate(Aspect::kComprehensiveness), Rational(0));
  EXPECT_FALSE(s.aspect_relative_win_rate(Aspect::kDirectness).has_value());
  auto back = summary_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(to_json(s)["quartile_method"], kQuartileMethod);
}

}  // namespace
}  // namespace rageval
