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

#include "rageval/judge.hpp"

#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace {

Rubric make_default_rubric() {
  Rubric r;
  r.cells[aspect_index(Aspect::kComprehensiveness)] = {
      "The answer is extremely incomplete, covering none of the aspects and details the "
      "question calls for.",
      "The answer is very incomplete, touching on only a small part of what the question asks "
      "and omitting most key details.",
      "The answer is somewhat incomplete, covering some relevant points but missing several "
      "important aspects or details.",
      "The answer is moderately comprehensive, covering the main points with some detail but "
      "leaving notable gaps.",
      "The answer is comprehensive, covering nearly all aspects and details of the question "
      "with only minor omissions.",
      "The answer is exceptionally comprehensive, thoroughly covering every aspect and detail "
      "the question calls for."};
  r.cells[aspect_index(Aspect::kRelevance)] = {
      "The answer is completely irrelevant, bearing no relation to the question.",
      "The answer is mostly irrelevant, with only passing connections to the question.",
      "The answer is partially relevant, mixing pertinent content with substantial unrelated "
      "material.",
      "The answer is moderately relevant, mostly on topic but containing some content that "
      "does not serve the question.",
      "The answer is highly relevant, staying on topic with only minor digressions.",
      "The answer is exceptionally relevant, with every part of it bearing directly on the "
      "question."};
  r.cells[aspect_index(Aspect::kEmpowerment)] = {
      "The answer does not help the reader understand the topic or make any informed "
      "judgment.",
      "The answer offers very little help, giving the reader almost nothing with which to "
      "understand the topic or form a judgment.",
      "The answer offers limited help, giving the reader some information but little insight "
      "for understanding or judgment.",
      "The answer moderately helps the reader understand the topic and make informed "
      "judgments, though some insight is lacking.",
      "The answer helps the reader well, providing clear insight that supports understanding "
      "and informed judgments.",
      "The answer exceptionally empowers the reader, providing deep insight that enables a "
      "thorough understanding and well-informed judgments."};
  r.cells[aspect_index(Aspect::kDirectness)] = {
      "The answer is extremely indirect, failing to address the question specifically and "
      "clearly.",
      "The answer is indirect and deviates significantly from the question, making it hard to "
      "discern the intended response.",
      "The answer is somewhat indirect, occasionally straying from the question, but still "
      "touching on relevant points.",
      "The answer is moderately direct, addressing the question with some clarity but could "
      "be more specific and focused.",
      "The answer is clear and direct, effectively addressing the question with specificity "
      "and clarity.",
      "The answer is exceptionally direct, precisely and specifically addressing the question "
      "without any ambiguity."};
  return r;
}

Outcome compare_sums(std::int64_t a, std::int64_t b) {
  if (a > b) return Outcome::kAWins;
  if (b > a) return Outcome::kBWins;
  return Outcome::kTie;
}

int parse_score(const nlohmann::json& block, const std::string& aspect, const char* slot) {
  if (!block.contains(slot) || !block[slot].is_object()) {
    throw ParseError("aspect " + aspect + ": missing " + slot);
  }
  const auto& entry = block[slot];
  if (!entry.contains("score")) throw ParseError("aspect " + aspect + ": missing score");
  const auto& s = entry["score"];
  std::int64_t value = 0;
  if (s.is_number_integer()) {
    value = s.get<std::int64_t>();
  } else if (s.is_number_float() && s.get<double>() == static_cast<double>(
                                                          static_cast<std::int64_t>(s.get<double>()))) {
    value = static_cast<std::int64_t>(s.get<double>());
  } else if (s.is_string() && !s.get<std::string>().empty() &&
             s.get<std::string>().find_first_not_of("0123456789") == std::string::npos) {
    value = std::stoll(s.get<std::string>());
  } else {
    throw ParseError("aspect " + aspect + ": non-integer score " + s.dump());
  }
  if (value < 0 || value > 5) {
    throw ParseError("aspect " + aspect + ": score " + std::to_string(value) +
                     " out of range [0,5]");
  }
  return static_cast<int>(value);
}

}  // namespace

const Rubric& default_rubric() {
  static const Rubric rubric = make_default_rubric();
  return rubric;
}

std::string render_rubric(const Rubric& rubric) {
  std::string out;
  for (auto a : kAllAspects) {
    out += std::string(aspect_name(a)) + ":\n";
    for (int s = 0; s <= 5; ++s) {
      out += "  " + std::to_string(s) + " point: " + rubric.cell(a, s) + "\n";
    }
  }
  return out;
}

RunScores parse_judge_response(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(repair_json_text(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("judge response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("judge response is not an object");
  RunScores out;
  for (auto a : kAllAspects) {
    const std::string name(aspect_name(a));
    if (!j.contains(name) || !j[name].is_object()) {
      throw ParseError("judge response is missing aspect " + name);
    }
    const auto& block = j[name];
    const char* slots[2] = {"answer_1", "answer_2"};
    for (int slot = 0; slot < 2; ++slot) {
      out.score[slot][aspect_index(a)] = parse_score(block, name, slots[slot]);
      const auto& entry = block[slots[slot]];
      if (entry.contains("explanation") && entry["explanation"].is_string()) {
        out.explanation[slot][aspect_index(a)] = entry["explanation"].get<std::string>();
      }
    }
  }
  return out;
}

std::string build_judge_prompt(const std::string& question, const std::string& first_answer,
                               const std::string& second_answer, const Rubric& rubric,
                               const PromptSet& prompts) {
  if (trim(first_answer).empty() || trim(second_answer).empty()) {
    throw PreconditionError("judge prompt requires two non-empty answers");
  }
  return render_template(prompts.get("judge_score"), {{"rubric", render_rubric(rubric)},
                                                      {"question", question},
                                                      {"answer_1", first_answer},
                                                      {"answer_2", second_answer}});
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kAWins: return "a_wins";
    case Outcome::kBWins: return "b_wins";
    case Outcome::kTie: return "tie";
  }
  return "";
}

Rational PairVerdict::total_a() const {
  std::int64_t s = 0;
  for (auto v : sum_a) s += v;
  return Rational(s, run_count());
}

Rational PairVerdict::total_b() const {
  std::int64_t s = 0;
  for (auto v : sum_b) s += v;
  return Rational(s, run_count());
}

PairVerdict aggregate_runs(const std::string& question_id, int repetitions,
                           std::vector<PositionRun> runs) {
  if (repetitions < 1) throw PreconditionError("repetitions must be >= 1");
  PairVerdict v;
  v.question_id = question_id;
  v.repetitions = repetitions;
  v.runs = std::move(runs);
  if (v.runs.size() != static_cast<std::size_t>(v.run_count())) {
    throw PreconditionError("expected " + std::to_string(v.run_count()) + " runs, got " +
                            std::to_string(v.runs.size()));
  }
  int ab = 0;
  for (const auto& r : v.runs) {
    if (r.order == Order::kAB) ++ab;
    if (r.failed) {
      v.failed = true;
      if (v.error.empty()) v.error = r.error;
      continue;
    }
    for (std::size_t k = 0; k < kAspectCount; ++k) {
      v.sum_a[k] += r.score_a[k];
      v.sum_b[k] += r.score_b[k];
    }
  }
  if (ab != repetitions) {
    throw PreconditionError("position exchange requires N runs per order");
  }
  std::int64_t ta = 0;
  std::int64_t tb = 0;
  for (std::size_t k = 0; k < kAspectCount; ++k) {
    v.aspect_outcomes[k] = compare_sums(v.sum_a[k], v.sum_b[k]);
    ta += v.sum_a[k];
    tb += v.sum_b[k];
  }
  v.outcome = compare_sums(ta, tb);
  return v;
}

std::uint64_t judge_nonce(std::size_t trial, Order order, int repetition) {
  return (static_cast<std::uint64_t>(trial) << 32) |
         (static_cast<std::uint64_t>(order == Order::kBA) << 16) |
         static_cast<std::uint64_t>(repetition);
}

ChatRequest build_judge_request(const std::string& question, const std::string& first_answer,
                                const std::string& second_answer, const Rubric& rubric,
                                const PromptSet& prompts, const JudgeOptions& options,
                                std::uint64_t nonce) {
  ChatRequest req;
  req.purpose = Purpose::kJudge;
  req.temperature = options.temperature;
  req.nonce = nonce;
  req.messages.push_back(
      {"user", build_judge_prompt(question, first_answer, second_answer, rubric, prompts)});
  req.hints["mode"] = "score";
  req.hints["question"] = question;
  req.hints["answer_1"] = first_answer;
  req.hints["answer_2"] = second_answer;
  return req;
}

PairVerdict evaluate_answers(const std::string& question_id, const std::string& question,
                             const std::string& answer_a, const std::string& answer_b,
                             Gateway& llm, const PromptSet& prompts, const JudgeOptions& options,
                             std::size_t trial) {
  std::vector<PositionRun> runs;
  for (auto order : {Order::kAB, Order::kBA}) {
    for (int rep = 0; rep < options.repetitions; ++rep) {
      PositionRun run;
      run.order = order;
      run.repetition = rep;
      const bool a_first = order == Order::kAB;
      auto req = build_judge_request(question, a_first ? answer_a : answer_b,
                                     a_first ? answer_b : answer_a, default_rubric(), prompts,
                                     options, judge_nonce(trial, order, rep));
      try {
        auto scores = llm.complete_parsed(req, parse_judge_response, options.max_attempts);
        const int slot_a = a_first ? 0 : 1;
        run.score_a = scores.score[slot_a];
        run.score_b = scores.score[1 - slot_a];
        run.explanation_a = scores.explanation[slot_a];
        run.explanation_b = scores.explanation[1 - slot_a];
      } catch (const ParseError& e) {
        run.failed = true;
        run.error = e.what();
      } catch (const BackendError& e) {
        run.failed = true;
        run.error = e.what();
      }
      if (run.failed) spdlog::warn("judge run failed for {}: {}", question_id, run.error);
      runs.push_back(std::move(run));
    }
  }
  return aggregate_runs(question_id, options.repetitions, std::move(runs));
}

PairVerdict evaluate_pair(const std::string& question, const AlignedPair& pair, Gateway& llm,
                          const PromptSet& prompts, const JudgeOptions& options,
                          std::size_t trial) {
  if (!pair.aligned()) {
    throw PreconditionError("pair " + pair.question_id + " is discarded and cannot be judged");
  }
  return evaluate_answers(pair.question_id, question, pair.answer_a.text, pair.answer_b.text,
                          llm, prompts, options, trial);
}

int naive_compare(const std::string& question, const std::string& first_answer,
                  const std::string& second_answer, Gateway& llm, const PromptSet& prompts,
                  std::uint64_t nonce, int max_attempts) {
  ChatRequest req;
  req.purpose = Purpose::kJudge;
  req.nonce = nonce;
  req.messages.push_back({"user", render_template(prompts.get("judge_choose"),
                                                  {{"question", question},
                                                   {"answer_1", first_answer},
                                                   {"answer_2", second_answer}})});
  req.hints["mode"] = "choose";
  req.hints["question"] = question;
  req.hints["answer_1"] = first_answer;
  req.hints["answer_2"] = second_answer;
  return llm.complete_parsed(
      req,
      [](const std::string& text) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(repair_json_text(text));
        } catch (const nlohmann::json::parse_error& e) {
          throw ParseError(std::string("naive judge response is not JSON: ") + e.what());
        }
        if (!j.is_object() || !j.contains("Overall") || !j["Overall"].is_object() ||
            !j["Overall"].contains("winner") || !j["Overall"]["winner"].is_string()) {
          throw ParseError("naive judge response lacks Overall.winner");
        }
        auto w = j["Overall"]["winner"].get<std::string>();
        if (w.find('1') != std::string::npos) return 0;
        if (w.find('2') != std::string::npos) return 1;
        throw ParseError("naive judge winner is neither answer: " + w);
      },
      max_attempts);
}

nlohmann::json to_json(const PairVerdict& v) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : v.runs) {
    nlohmann::json jr = {{"order", r.order == Order::kAB ? "AB" : "BA"},
                         {"repetition", r.repetition},
                         {"failed", r.failed}};
    if (r.failed) {
      jr["error"] = r.error;
    } else {
      for (auto a : kAllAspects) {
        const std::string name(aspect_name(a));
        const auto k = aspect_index(a);
        jr["a"][name] = {{"score", r.score_a[k]}, {"explanation", r.explanation_a[k]}};
        jr["b"][name] = {{"score", r.score_b[k]}, {"explanation", r.explanation_b[k]}};
      }
    }
    runs.push_back(std::move(jr));
  }
  nlohmann::json avg_a;
  nlohmann::json avg_b;
  nlohmann::json aspect_outcomes;
  for (auto a : kAllAspects) {
    const std::string name(aspect_name(a));
    avg_a[name] = rational_json(v.aspect_avg_a(a));
    avg_b[name] = rational_json(v.aspect_avg_b(a));
    aspect_outcomes[name] = outcome_name(v.aspect_outcomes[aspect_index(a)]);
  }
  nlohmann::json j = {{"question_id", v.question_id},
                      {"repetitions", v.repetitions},
                      {"failed", v.failed},
                      {"runs", runs},
                      {"aspect_avg_a", avg_a},
                      {"aspect_avg_b", avg_b},
                      {"total_a", rational_json(v.total_a())},
                      {"total_b", rational_json(v.total_b())},
                      {"outcome", v.failed ? "failed" : outcome_name(v.outcome)},
                      {"aspect_outcomes", aspect_outcomes}};
  if (v.failed) j["error"] = v.error;
  return j;
}

PairVerdict verdict_from_json(const nlohmann::json& j) {
  std::vector<PositionRun> runs;
  for (const auto& jr : j.at("runs")) {
    PositionRun r;
    r.order = jr.at("order").get<std::string>() == "AB" ? Order::kAB : Order::kBA;
    r.repetition = jr.at("repetition").get<int>();
    r.failed = jr.value("failed", false);
    r.error = jr.value("error", std::string());
    if (!r.failed) {
      for (auto a : kAllAspects) {
        const std::string name(aspect_name(a));
        const auto k = aspect_index(a);
        r.score_a[k] = jr.at("a").at(name).at("score").get<int>();
        r.score_b[k] = jr.at("b").at(name).at("score").get<int>();
        r.explanation_a[k] = jr["a"][name].value("explanation", std::string());
        r.explanation_b[k] = jr["b"][name].value("explanation", std::string());
      }
    }
    runs.push_back(std::move(r));
  }
  return aggregate_runs(j.at("question_id").get<std::string>(), j.at("repetitions").get<int>(),
                        std::move(runs));
}

}  // namespace rageval
