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

#include "rageval/answers.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"
#include "rageval/parallel.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace {

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

Answer make_answer(const std::string& question_id, const std::string& method_id,
                   const AdapterReply& reply, Micros measured, GenerationPass pass) {
  Answer a;
  a.question_id = question_id;
  a.method_id = method_id;
  a.text = trim(reply.text);
  a.word_count = count_words(a.text);
  a.generation_pass = pass;
  a.usage.purpose = Purpose::kAnswer;
  a.usage.method_id = method_id;
  a.usage.prompt_tokens = reply.prompt_tokens.value_or(0);
  a.usage.completion_tokens =
      reply.completion_tokens.value_or(synthesize_tokens(a.word_count));
  a.usage.latency = reply.latency.value_or(measured);
  return a;
}

// Calls the adapter with retries; throws BackendError once exhausted.
AdapterReply call_adapter(RagAdapter& adapter, const std::string& question,
                          std::optional<std::size_t> target, int attempts, Micros& elapsed) {
  std::string last;
  for (int i = 0; i < std::max(1, attempts); ++i) {
    try {
      auto t0 = std::chrono::steady_clock::now();
      auto reply = adapter.answer(question, target);
      elapsed = std::chrono::duration_cast<Micros>(std::chrono::steady_clock::now() - t0);
      if (trim(reply.text).empty()) throw BackendError("adapter returned an empty answer");
      return reply;
    } catch (const Error& e) {
      last = e.what();
      spdlog::warn("{} attempt {} failed: {}", adapter.method_id(), i + 1, last);
    }
  }
  throw BackendError(adapter.method_id() + " failed after " + std::to_string(attempts) +
                     " attempts: " + last);
}

std::string expand_request_text(const PromptSet& prompts, const std::string& question,
                                const std::string& answer, std::size_t needed) {
  return render_template(prompts.get("answer_expand"),
                         {{"words_needed", std::to_string(needed)},
                          {"question", question},
                          {"answer", answer}});
}

}  // namespace

std::string pass_name(GenerationPass p) {
  switch (p) {
    case GenerationPass::kUnconstrained: return "unconstrained";
    case GenerationPass::kLengthTargeted: return "length_targeted";
    case GenerationPass::kForceAppended: return "force_appended";
  }
  return "";
}

GenerationPass pass_from_name(const std::string& name) {
  for (auto p : {GenerationPass::kUnconstrained, GenerationPass::kLengthTargeted,
                 GenerationPass::kForceAppended}) {
    if (pass_name(p) == name) return p;
  }
  throw InputError("unknown generation pass: " + name);
}

// ---------------------------------------------------------------------------

ScriptedAdapterConfig scripted_adapter_config_from_json(const nlohmann::json& j) {
  ScriptedAdapterConfig c;
  c.method_id = j.value("id", c.method_id);
  c.style = j.value("style", c.method_id);
  c.base_words = j.value("base_words", c.base_words);
  c.spread = j.value("spread", c.spread);
  c.length_mode = j.value("length_mode", c.length_mode);
  c.partial_fraction = j.value("partial_fraction", c.partial_fraction);
  if (j.contains("fail_on")) c.fail_on = j["fail_on"].get<std::set<std::string>>();
  if (j.contains("tokens_per_answer")) {
    c.tokens_per_answer = j["tokens_per_answer"].get<std::int64_t>();
  }
  if (c.length_mode != "obedient" && c.length_mode != "partial" && c.length_mode != "ignore") {
    throw InputError("unknown length_mode: " + c.length_mode);
  }
  return c;
}

ScriptedAdapter::ScriptedAdapter(ScriptedAdapterConfig config) : config_(std::move(config)) {}

std::string ScriptedAdapter::compose(const std::string& question, std::size_t words) const {
  static const std::array<const char*, 24> kVocab = {
      "the",      "answer",   "draws",    "on",      "retrieved", "context",
      "about",    "entities", "relations", "and",    "their",     "roles",
      "evidence", "suggests", "that",     "several", "factors",   "interact",
      "over",     "time",     "within",   "the",     "corpus",    "overall"};
  std::string out;
  std::uint64_t state = stable_hash64(config_.style + '\x1f' + question);
  for (std::size_t i = 0; i < words; ++i) {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    if (i) out.push_back(' ');
    out += kVocab[(state >> 33) % kVocab.size()];
  }
  return out;
}

AdapterReply ScriptedAdapter::answer(const std::string& question,
                                     std::optional<std::size_t> target_length) {
  ++calls_;
  for (const auto& f : config_.fail_on) {
    if (question.find(f) != std::string::npos) {
      throw BackendError(config_.method_id + ": scripted failure");
    }
  }
  std::size_t natural = config_.base_words;
  if (config_.spread > 0) {
    natural += stable_hash64(config_.style + "|len|" + question) % (config_.spread + 1);
  }
  std::size_t words = natural;
  if (target_length) {
    if (config_.length_mode == "obedient") {
      words = *target_length;
    } else if (config_.length_mode == "partial") {
      double gap = static_cast<double>(*target_length) - static_cast<double>(natural);
      words = static_cast<std::size_t>(std::llround(static_cast<double>(natural) +
                                                    gap * config_.partial_fraction));
    }
  }
  AdapterReply r;
  r.text = compose(question, words);
  r.prompt_tokens = synthesize_tokens(count_words(question));
  r.completion_tokens = config_.tokens_per_answer
                            ? *config_.tokens_per_answer - *r.prompt_tokens
                            : synthesize_tokens(words);
  r.latency = Micros(10 * (*r.prompt_tokens + *r.completion_tokens));
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json adapter_request_json(const std::string& question,
                                    std::optional<std::size_t> target_length) {
  nlohmann::json j = {{"question", question}};
  if (target_length) j["target_length"] = *target_length;
  return j;
}

AdapterReply parse_adapter_reply(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(std::string("adapter reply is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("answer_text") || !j["answer_text"].is_string()) {
    throw BackendError("adapter reply lacks string field answer_text");
  }
  AdapterReply r;
  r.text = j["answer_text"].get<std::string>();
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    if (u.contains("prompt_tokens")) r.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
    if (u.contains("completion_tokens")) {
      r.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
  }
  return r;
}

CommandAdapter::CommandAdapter(std::string method_id, std::string command)
    : method_id_(std::move(method_id)), command_(std::move(command)) {}

AdapterReply CommandAdapter::answer(const std::string& question,
                                    std::optional<std::size_t> target_length) {
  std::string tmpl = (std::filesystem::temp_directory_path() / "rageval-req-XXXXXX").string();
  std::vector<char> name(tmpl.begin(), tmpl.end());
  name.push_back('\0');
  int fd = ::mkstemp(name.data());
  if (fd < 0) throw BackendError("cannot create adapter request file");
  std::string path(name.data());
  auto payload = adapter_request_json(question, target_length).dump();
  bool ok = ::write(fd, payload.data(), payload.size()) == static_cast<ssize_t>(payload.size());
  ::close(fd);
  if (!ok) {
    std::remove(path.c_str());
    throw BackendError("cannot write adapter request file");
  }

  std::string output;
  std::string cmd = "(" + command_ + ") < '" + path + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::remove(path.c_str());
    throw BackendError("cannot start adapter command: " + command_);
  }
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
  int status = ::pclose(pipe);
  std::remove(path.c_str());
  if (status != 0) {
    throw BackendError(method_id_ + ": adapter command exited with status " +
                       std::to_string(status));
  }
  return parse_adapter_reply(output);
}

HttpAdapter::HttpAdapter(std::string method_id, std::string url) : method_id_(std::move(method_id)) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InputError("adapter URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

AdapterReply HttpAdapter::answer(const std::string& question,
                                 std::optional<std::size_t> target_length) {
  httplib::Client client(host_);
  client.set_read_timeout(std::chrono::seconds(300));
  auto res = client.Post(path_, adapter_request_json(question, target_length).dump(),
                         "application/json");
  if (!res) {
    throw BackendError(method_id_ + ": request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError(method_id_ + ": HTTP " + std::to_string(res->status));
  }
  return parse_adapter_reply(res->body);
}

std::unique_ptr<RagAdapter> make_adapter(const nlohmann::json& d) {
  auto id = d.at("id").get<std::string>();
  auto type = d.value("type", std::string("mock"));
  if (type == "mock") return std::make_unique<ScriptedAdapter>(scripted_adapter_config_from_json(d));
  if (type == "command") return std::make_unique<CommandAdapter>(id, d.at("command").get<std::string>());
  if (type == "http") return std::make_unique<HttpAdapter>(id, d.at("url").get<std::string>());
  throw InputError("unknown adapter type for " + id + ": " + type);
}

// ---------------------------------------------------------------------------

AnswerCollection collect_answers(RagAdapter& adapter, const std::vector<Question>& questions,
                                 Gateway& usage_sink, const AnswerOptions& options) {
  AnswerCollection out;
  for (const auto& q : questions) {
    try {
      Micros elapsed{0};
      auto reply = call_adapter(adapter, q.text, std::nullopt, options.max_attempts, elapsed);
      auto a = make_answer(q.question_id, adapter.method_id(), reply, elapsed,
                           GenerationPass::kUnconstrained);
      usage_sink.record(a.usage);
      out.answers.push_back(std::move(a));
    } catch (const BackendError& e) {
      spdlog::warn("question {} unanswered by {}: {}", q.question_id, adapter.method_id(),
                   e.what());
      out.failures.push_back({q.question_id, adapter.method_id(), e.what()});
    }
  }
  return out;
}

AlignedPair align_pair(const Question& question, const Answer& answer_a, const Answer& answer_b,
                       RagAdapter& adapter_a, RagAdapter& adapter_b, Gateway& llm,
                       const PromptSet& prompts, const AlignmentOptions& options) {
  AlignedPair pair;
  pair.question_id = question.question_id;
  pair.answer_a = answer_a;
  pair.answer_b = answer_b;
  pair.initial_delta = abs_diff(answer_a.word_count, answer_b.word_count);
  pair.length_delta = pair.initial_delta;
  if (pair.length_delta <= options.tolerance_words) return pair;

  const bool a_is_shorter = answer_a.word_count < answer_b.word_count;
  Answer& shorter = a_is_shorter ? pair.answer_a : pair.answer_b;
  const Answer& longer = a_is_shorter ? pair.answer_b : pair.answer_a;
  RagAdapter& adapter = a_is_shorter ? adapter_a : adapter_b;
  const std::size_t target = longer.word_count;

  auto finish = [&](const Answer& chosen) {
    shorter = chosen;
    pair.length_delta = abs_diff(chosen.word_count, target);
    if (pair.length_delta > options.tolerance_words) {
      pair.status = AlignmentStatus::kDiscarded;
    }
    return pair;
  };

  Answer best = shorter;        // closest to target so far
  Answer best_under = shorter;  // longest candidate not above target
  try {
    for (int round = 1; round <= options.max_adjust_rounds; ++round) {
      Micros elapsed{0};
      auto reply = call_adapter(adapter, question.text, target, options.max_attempts, elapsed);
      auto cand = make_answer(question.question_id, adapter.method_id(), reply, elapsed,
                              GenerationPass::kLengthTargeted);
      llm.record(cand.usage);
      pair.adjust_rounds_used = round;
      if (abs_diff(cand.word_count, target) < abs_diff(best.word_count, target)) best = cand;
      if (cand.word_count <= target && cand.word_count > best_under.word_count) {
        best_under = cand;
      }
      if (abs_diff(best.word_count, target) <= options.tolerance_words) return finish(best);
    }
  } catch (const BackendError& e) {
    finish(best);
    pair.status = AlignmentStatus::kDiscarded;
    pair.reason = std::string("length adjustment failed: ") + e.what();
    return pair;
  }

  // Forced alignment on the longest answer that does not exceed the target.
  Answer forced = best_under;
  try {
    for (int round = 1; round <= options.max_append_rounds; ++round) {
      const std::size_t needed = target - forced.word_count;
      ChatRequest req;
      req.purpose = Purpose::kAnswerExpand;
      req.method_id = adapter.method_id();
      req.messages.push_back(
          {"user", expand_request_text(prompts, question.text, forced.text, needed)});
      req.hints["words_needed"] = std::to_string(needed);
      req.hints["answer"] = forced.text;
      auto done = llm.complete(req);
      pair.append_rounds_used = round;
      auto appended = trim(done.text);
      if (!appended.empty()) {
        forced.text += " " + appended;
        forced.word_count = count_words(forced.text);
        forced.generation_pass = GenerationPass::kForceAppended;
      }
      if (abs_diff(forced.word_count, target) <= options.tolerance_words) return finish(forced);
      if (forced.word_count > target) break;
    }
  } catch (const BackendError& e) {
    finish(best);
    pair.status = AlignmentStatus::kDiscarded;
    pair.reason = std::string("forced alignment failed: ") + e.what();
    return pair;
  }

  const Answer& residual =
      abs_diff(forced.word_count, target) < abs_diff(best.word_count, target) ? forced : best;
  finish(residual);
  pair.reason = "length gap of " + std::to_string(pair.length_delta) +
                " words remains after adjustment and forced alignment";
  return pair;
}

std::vector<AlignedPair> align_all(const std::vector<Question>& questions,
                                   const AnswerCollection& a, const AnswerCollection& b,
                                   RagAdapter& adapter_a, RagAdapter& adapter_b, Gateway& llm,
                                   const PromptSet& prompts, const AlignmentOptions& options,
                                   std::size_t workers) {
  std::map<std::string, const Answer*> by_a;
  std::map<std::string, const Answer*> by_b;
  for (const auto& x : a.answers) by_a[x.question_id] = &x;
  for (const auto& x : b.answers) by_b[x.question_id] = &x;

  return parallel_map(questions.size(), workers, [&](std::size_t i) {
    const auto& q = questions[i];
    auto ia = by_a.find(q.question_id);
    auto ib = by_b.find(q.question_id);
    if (ia == by_a.end() || ib == by_b.end()) {
      AlignedPair p;
      p.question_id = q.question_id;
      if (ia != by_a.end()) p.answer_a = *ia->second;
      if (ib != by_b.end()) p.answer_b = *ib->second;
      p.status = AlignmentStatus::kDiscarded;
      p.reason = std::string("unanswered by ") +
                 (ia == by_a.end() ? adapter_a.method_id() : adapter_b.method_id());
      return p;
    }
    return align_pair(q, *ia->second, *ib->second, adapter_a, adapter_b, llm, prompts, options);
  });
}

AlignmentReport alignment_report(const std::vector<AlignedPair>& pairs) {
  AlignmentReport r;
  for (const auto& p : pairs) {
    if (p.aligned()) {
      ++r.aligned;
    } else {
      ++r.discarded;
    }
    ++r.delta_histogram[p.length_delta];
    auto pass = std::max(p.answer_a.generation_pass, p.answer_b.generation_pass);
    ++r.by_pass[pass_name(pass)];
  }
  if (!pairs.empty()) {
    r.success_rate = Rational(static_cast<std::int64_t>(r.aligned),
                              static_cast<std::int64_t>(pairs.size()));
  }
  return r;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Answer& a) {
  return {{"question_id", a.question_id},
          {"method_id", a.method_id},
          {"text", a.text},
          {"word_count", a.word_count},
          {"generation_pass", pass_name(a.generation_pass)},
          {"usage", to_json(a.usage)}};
}

Answer answer_from_json(const nlohmann::json& j) {
  Answer a;
  a.question_id = j.at("question_id").get<std::string>();
  a.method_id = j.at("method_id").get<std::string>();
  a.text = j.at("text").get<std::string>();
  a.word_count = j.at("word_count").get<std::size_t>();
  a.generation_pass = pass_from_name(j.at("generation_pass").get<std::string>());
  if (j.contains("usage")) a.usage = usage_from_json(j["usage"]);
  return a;
}

nlohmann::json to_json(const AlignedPair& p) {
  return {{"question_id", p.question_id},
          {"answer_a", to_json(p.answer_a)},
          {"answer_b", to_json(p.answer_b)},
          {"initial_delta", p.initial_delta},
          {"length_delta", p.length_delta},
          {"status", p.aligned() ? "aligned" : "discarded"},
          {"adjust_rounds_used", p.adjust_rounds_used},
          {"append_rounds_used", p.append_rounds_used},
          {"reason", p.reason}};
}

AlignedPair aligned_pair_from_json(const nlohmann::json& j) {
  AlignedPair p;
  p.question_id = j.at("question_id").get<std::string>();
  p.answer_a = answer_from_json(j.at("answer_a"));
  p.answer_b = answer_from_json(j.at("answer_b"));
  p.initial_delta = j.value("initial_delta", std::size_t{0});
  p.length_delta = j.at("length_delta").get<std::size_t>();
  p.status = j.at("status").get<std::string>() == "aligned" ? AlignmentStatus::kAligned
                                                            : AlignmentStatus::kDiscarded;
  p.adjust_rounds_used = j.value("adjust_rounds_used", 0);
  p.append_rounds_used = j.value("append_rounds_used", 0);
  p.reason = j.value("reason", std::string());
  return p;
}

nlohmann::json to_json(const AlignmentReport& r) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [d, n] : r.delta_histogram) hist[std::to_string(d)] = n;
  nlohmann::json j = {{"aligned_count", r.aligned},
                      {"discarded_count", r.discarded},
                      {"delta_histogram", hist},
                      {"by_pass", r.by_pass}};
  j["success_rate"] = r.success_rate ? rational_json(*r.success_rate) : nlohmann::json();
  return j;
}

void write_answers(const std::filesystem::path& path, const AnswerCollection& c) {
  std::vector<nlohmann::json> records;
  for (const auto& a : c.answers) records.push_back(to_json(a));
  for (const auto& f : c.failures) {
    records.push_back({{"question_id", f.question_id},
                       {"method_id", f.method_id},
                       {"error", f.reason}});
  }
  write_jsonl(path, records);
}

AnswerCollection read_answers(const std::filesystem::path& path) {
  AnswerCollection c;
  for (const auto& j : read_jsonl(path)) {
    if (j.contains("error")) {
      c.failures.push_back({j.at("question_id").get<std::string>(),
                            j.at("method_id").get<std::string>(),
                            j.at("error").get<std::string>()});
    } else {
      c.answers.push_back(answer_from_json(j));
    }
  }
  return c;
}

void write_pairs(const std::filesystem::path& path, const std::vector<AlignedPair>& pairs) {
  std::vector<nlohmann::json> records;
  for (const auto& p : pairs) records.push_back(to_json(p));
  write_jsonl(path, records);
}

std::vector<AlignedPair> read_pairs(const std::filesystem::path& path) {
  std::vector<AlignedPair> pairs;
  for (const auto& j : read_jsonl(path)) pairs.push_back(aligned_pair_from_json(j));
  return pairs;
}

}  // namespace rageval
