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

#include <map>
#include <mutex>
#include <random>

#include <gtest/gtest.h>

#include "rageval/error.hpp"
#include "rageval/judge.hpp"
#include "support.hpp"

namespace rageval {
namespace {

using Scores = std::array<int, kAspectCount>;

std::string judge_json(const Scores& first, const Scores& second) {
  nlohmann::json j;
  for (auto a : kAllAspects) {
    auto k = aspect_index(a);
    j[std::string(aspect_name(a))] = {
        {"answer_1", {{"score", first[k]}, {"explanation", "first"}}},
        {"answer_2", {{"score", second[k]}, {"explanation", "second"}}}};
  }
  return j.dump();
}

PositionRun run(Order order, int rep, Scores a, Scores b) {
  PositionRun r;
  r.order = order;
  r.repetition = rep;
  r.score_a = a;
  r.score_b = b;
  return r;
}

// Four runs whose per-aspect means match the worked case study: the first
// run is the one shown there, the others are chosen to land on the same
// averages.
const std::array<Scores, 4> kCaseA = {{{4, 4, 3, 4}, {4, 4, 3, 4}, {4, 5, 4, 4}, {3, 4, 3, 4}}};
const std::array<Scores, 4> kCaseB = {{{5, 5, 5, 5}, {5, 5, 5, 5}, {5, 4, 5, 5}, {5, 5, 5, 5}}};

TEST(Judge, CaseStudyReplayFromRuns) {
  std::vector<PositionRun> runs;
  for (int i = 0; i < 4; ++i) {
    runs.push_back(run(i < 2 ? Order::kAB : Order::kBA, i % 2, kCaseA[i], kCaseB[i]));
  }
  auto v = aggregate_runs("case", 2, runs);
  const std::array<Rational, 4> want_a = {Rational(15, 4), Rational(17, 4), Rational(13, 4),
                                          Rational(4)};
  const std::array<Rational, 4> want_b = {Rational(5), Rational(19, 4), Rational(5), Rational(5)};
  for (auto a : kAllAspects) {
    EXPECT_EQ(v.aspect_avg_a(a), want_a[aspect_index(a)]) << aspect_name(a);
    EXPECT_EQ(v.aspect_avg_b(a), want_b[aspect_index(a)]) << aspect_name(a);
  }
  EXPECT_EQ(v.total_a(), Rational(61, 4));  // 15.25
  EXPECT_EQ(v.total_b(), Rational(79, 4));  // 19.75
  EXPECT_EQ(v.outcome, Outcome::kBWins);
  EXPECT_EQ(v.aspect_outcomes[aspect_index(Aspect::kRelevance)], Outcome::kBWins);
  EXPECT_FALSE(v.failed);
}

TEST(Judge, CaseStudyReplayThroughSlots) {
  // The backend sees B first in BA runs, so it must put B's scores in slot 1.
  std::mutex mu;
  std::vector<ChatRequest> seen;
  auto backend = std::make_shared<FunctionBackend>([&](const ChatRequest& r) {
    std::lock_guard lock(mu);
    seen.push_back(r);
    auto rep = static_cast<int>(r.nonce & 0xffff);
    bool ba = (r.nonce >> 16) & 1;
    int i = (ba ? 2 : 0) + rep;
    return BackendReply{ba ? judge_json(kCaseB[i], kCaseA[i]) : judge_json(kCaseA[i], kCaseB[i]),
                        1, 1, Micros(1)};
  });
  Gateway gw(backend, testing::fast_gateway());
  auto v = evaluate_answers("case", "What is the story?", "answer alpha", "answer beta", gw,
                            PromptSet());
  EXPECT_EQ(v.total_a(), Rational(61, 4));
  EXPECT_EQ(v.total_b(), Rational(79, 4));
  EXPECT_EQ(v.outcome, Outcome::kBWins);
  ASSERT_EQ(seen.size(), 4u);
  for (const auto& r : seen) {
    bool ba = (r.nonce >> 16) & 1;
    EXPECT_EQ(r.hints.at("answer_1"), ba ? "answer beta" : "answer alpha");
    const auto& text = r.messages.at(0).content;
    auto pa = text.find("answer alpha");
    auto pb = text.find("answer beta");
    ASSERT_NE(pa, std::string::npos);
    ASSERT_NE(pb, std::string::npos);
    EXPECT_EQ(pa < pb, !ba);
    EXPECT_EQ(r.nonce, judge_nonce(0, ba ? Order::kBA : Order::kAB, static_cast<int>(r.nonce & 0xffff)));
  }
  auto back = verdict_from_json(to_json(v));
  EXPECT_EQ(to_json(back), to_json(v));
}

TEST(Judge, NonceLayout) {
  EXPECT_EQ(judge_nonce(0, Order::kAB, 0), 0u);
  EXPECT_EQ(judge_nonce(3, Order::kBA, 1), (3ull << 32) | (1ull << 16) | 1ull);
  EXPECT_NE(judge_nonce(1, Order::kAB, 0), judge_nonce(0, Order::kAB, 0));
}

TEST(Judge, ExactTieRule) {
  std::vector<PositionRun> runs = {run(Order::kAB, 0, {3, 3, 3, 3}, {4, 2, 3, 3}),
                                   run(Order::kAB, 1, {3, 3, 3, 3}, {2, 4, 3, 3}),
                                   run(Order::kBA, 0, {3, 3, 3, 3}, {3, 3, 3, 3}),
                                   run(Order::kBA, 1, {3, 3, 3, 4}, {3, 3, 3, 3})};
  auto v = aggregate_runs("t", 2, runs);
  EXPECT_EQ(v.aspect_outcomes[0], Outcome::kTie);
  EXPECT_EQ(v.aspect_outcomes[1], Outcome::kTie);
  EXPECT_EQ(v.aspect_outcomes[3], Outcome::kAWins);
  EXPECT_EQ(v.total_a() - v.total_b(), Rational(1, 4));
  EXPECT_EQ(v.outcome, Outcome::kAWins);
  runs[3].score_a[3] = 3;
  EXPECT_EQ(aggregate_runs("t", 2, runs).outcome, Outcome::kTie);
}

TEST(Judge, AggregatePreconditions) {
  std::vector<PositionRun> three = {run(Order::kAB, 0, {}, {}), run(Order::kAB, 1, {}, {}),
                                    run(Order::kBA, 0, {}, {})};
  EXPECT_THROW(aggregate_runs("x", 2, three), PreconditionError);
  three.push_back(run(Order::kAB, 2, {}, {}));
  EXPECT_THROW(aggregate_runs("x", 2, three), PreconditionError);
  EXPECT_THROW(aggregate_runs("x", 0, {}), PreconditionError);
}

TEST(Judge, ParseErrors) {
  Scores ok = {1, 2, 3, 4};
  auto good = parse_judge_response(judge_json(ok, {5, 0, 1, 2}));
  EXPECT_EQ(good.score[0], ok);
  EXPECT_EQ(good.score[1][0], 5);
  EXPECT_EQ(good.explanation[1][2], "second");

  auto expect_parse_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_judge_response(text);
      ADD_FAILURE() << "no ParseError for " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_parse_error(judge_json({6, 2, 3, 4}, ok), "out of range");
  expect_parse_error(judge_json({-1, 2, 3, 4}, ok), "out of range");
  auto j = nlohmann::json::parse(judge_json(ok, ok));
  j.erase("Empowerment");
  expect_parse_error(j.dump(), "Empowerment");
  j = nlohmann::json::parse(judge_json(ok, ok));
  j["Relevance"]["answer_2"]["score"] = 3.5;
  expect_parse_error(j.dump(), "Relevance");
  expect_parse_error("I think answer 1 is better.", "not JSON");
}

TEST(Judge, FencedJsonIsAccepted) {
  Scores s = {2, 2, 2, 2};
  auto parsed = parse_judge_response("```json\n" + judge_json(s, s) + "\n```");
  EXPECT_EQ(parsed.score[1], s);
}

TEST(Judge, UnparseableRunsFailTheVerdict) {
  auto backend = std::make_shared<FunctionBackend>(
      [](const ChatRequest&) { return BackendReply{"no scores today", 1, 1, Micros(1)}; });
  Gateway gw(backend, testing::fast_gateway());
  JudgeOptions opts;
  opts.max_attempts = 2;
  auto v = evaluate_answers("q", "Why?", "a", "b", gw, PromptSet(), opts);
  EXPECT_TRUE(v.failed);
  EXPECT_EQ(gw.total_attempts(), 8u);
  EXPECT_EQ(to_json(v)["outcome"], "failed");
}

TEST(Judge, PromptPreconditions) {
  EXPECT_THROW(build_judge_prompt("q", "", "b", default_rubric(), PromptSet()),
               PreconditionError);
  AlignedPair discarded;
  discarded.status = AlignmentStatus::kDiscarded;
  discarded.answer_a.text = "x";
  discarded.answer_b.text = "y";
  auto gw = testing::mock_gateway();
  EXPECT_THROW(evaluate_pair("q", discarded, *gw, PromptSet()), PreconditionError);
}

TEST(Rubric, DirectnessRowIsVerbatim) {
  const auto& r = default_rubric();
  const std::array<std::string, 6> want = {
      "The answer is extremely indirect, failing to address the question specifically and "
      "clearly.",
      "The answer is indirect and deviates significantly from the question, making it hard to "
      "discern the intended response.",
      "The answer is somewhat indirect, occasionally straying from the question, but still "
      "touching on relevant points.",
      "The answer is moderately direct, addressing the question with some clarity but could be "
      "more specific and focused.",
      "The answer is clear and direct, effectively addressing the question with specificity and "
      "clarity.",
      "The answer is exceptionally direct, precisely and specifically addressing the question "
      "without any ambiguity."};
  for (int s = 0; s <= 5; ++s) EXPECT_EQ(r.cell(Aspect::kDirectness, s), want[s]);
  for (auto a : kAllAspects) {
    for (int s = 0; s <= 5; ++s) EXPECT_FALSE(r.cell(a, s).empty());
  }
  auto rendered = render_rubric(r);
  EXPECT_NE(rendered.find(want[5]), std::string::npos);
  auto prompt = build_judge_prompt("Q?", "first", "second", r, PromptSet());
  EXPECT_NE(prompt.find(want[0]), std::string::npos);
}

std::string random_answer(std::mt19937_64& rng) {
  static const std::array<const char*, 8> words = {"river", "mill",  "guild", "harbour",
                                                   "trade", "storm", "bridge", "market"};
  std::string s;
  auto n = 3 + rng() % 12;
  for (std::size_t i = 0; i < n; ++i) s += std::string(i ? " " : "") + words[rng() % words.size()];
  return s;
}

TEST(JudgeProperty, PositionBiasCancels) {
  std::mt19937_64 rng(20240601);
  int matches = 0;
  for (int c = 0; c < 200; ++c) {
    int b = 1 + static_cast<int>(rng() % 3);
    std::uint64_t base_seed = rng();
    auto a = random_answer(rng);
    auto bb = random_answer(rng);
    MockConfig biased;
    biased.judge = MockPersona::first_position_bias(b, base_seed);
    MockConfig plain;
    plain.judge.base_seed = base_seed;
    plain.judge.base_max = 5 - b;
    auto gb = testing::mock_gateway(biased);
    auto gp = testing::mock_gateway(plain);
    auto vb = evaluate_answers("q", "Question?", a, bb, *gb, PromptSet());
    auto vp = evaluate_answers("q", "Question?", a, bb, *gp, PromptSet());
    if (vb.outcome == vp.outcome && vb.aspect_outcomes == vp.aspect_outcomes) ++matches;
  }
  EXPECT_EQ(matches, 200);
}

TEST(JudgeProperty, LabelSwapMirrorsOutcome) {
  std::mt19937_64 rng(99);
  auto mirror = [](Outcome o) {
    return o == Outcome::kAWins ? Outcome::kBWins : o == Outcome::kBWins ? Outcome::kAWins : o;
  };
  for (int c = 0; c < 100; ++c) {
    MockConfig cfg;
    cfg.judge = c % 2 ? MockPersona::first_position_bias(1, rng()) : MockPersona::length_bias(0.2, rng());
    auto gw = testing::mock_gateway(cfg);
    auto a = random_answer(rng);
    auto b = random_answer(rng);
    auto ab = evaluate_answers("q", "Question?", a, b, *gw, PromptSet());
    auto ba = evaluate_answers("q", "Question?", b, a, *gw, PromptSet());
    EXPECT_EQ(ab.total_a(), ba.total_b());
    EXPECT_EQ(ab.outcome, mirror(ba.outcome));
  }
}

TEST(JudgeProperty, QuarterGrid) {
  std::mt19937_64 rng(7);
  auto gw = testing::mock_gateway({MockPersona::noisy(12345, 1.5)});
  int violations = 0;
  for (int c = 0; c < 500; ++c) {
    auto v = evaluate_answers("q" + std::to_string(c), "Question " + std::to_string(c) + "?",
                              random_answer(rng), random_answer(rng), *gw, PromptSet(), {},
                              static_cast<std::size_t>(c % 3));
    auto on_grid = [](const Rational& r) { return 4 % r.denominator() == 0; };
    for (auto a : kAllAspects) {
      if (!on_grid(v.aspect_avg_a(a)) || !on_grid(v.aspect_avg_b(a))) ++violations;
    }
    if (!on_grid(v.total_a()) || !on_grid(v.total_b())) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(NaiveJudge, FirstPositionBiasPrefersFirstOnIdenticalAnswers) {
  auto gw = testing::mock_gateway({MockPersona::first_position_bias(1)});
  EXPECT_EQ(naive_compare("Q?", "same text", "same text", *gw, PromptSet()), 0);
  auto plain = testing::mock_gateway({MockPersona::constant(3)});
  int first = naive_compare("Q?", "alpha text", "beta text", *plain, PromptSet());
  EXPECT_EQ(naive_compare("Q?", "beta text", "alpha text", *plain, PromptSet()), 1 - first);
}

}  // namespace
}  // namespace rageval
