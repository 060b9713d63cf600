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

#include "rageval/mock_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "rageval/error.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "A",     "An",   "The",   "In",    "On",    "At",   "It",    "He",    "She",
      "They",  "We",   "I",     "This",  "That",  "These", "Those", "His",  "Her",
      "Their", "Its",  "But",   "And",   "Or",    "If",   "When",  "While", "After",
      "Before", "As",  "For",   "From",  "With",  "By",   "Of",    "To",    "There",
      "Then",  "Also", "However", "Although", "Because", "Since", "During", "Many",
      "Some",  "Most", "Each",  "Every", "Our",   "You",  "Your",  "My"};
  return words;
}

std::string strip_punct(const std::string& w) {
  std::size_t b = 0;
  std::size_t e = w.size();
  while (b < e && !std::isalnum(static_cast<unsigned char>(w[b]))) ++b;
  while (e > b && !std::isalnum(static_cast<unsigned char>(w[e - 1]))) --e;
  return w.substr(b, e - b);
}

bool capitalised(const std::string& w) {
  return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

bool ends_sentence(const std::string& w) {
  return !w.empty() && (w.back() == '.' || w.back() == '!' || w.back() == '?');
}

std::vector<std::vector<std::string>> sentences(const std::string& text) {
  std::vector<std::vector<std::string>> out(1);
  for (auto& w : split_words(text)) {
    bool end = ends_sentence(w);
    out.back().push_back(std::move(w));
    if (end) out.emplace_back();
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

// Standard normal draw from a portable generator.
double normal_draw(std::uint64_t key) {
  std::mt19937_64 gen(key);
  constexpr double kScale = 1.0 / 18446744073709551616.0;
  double u1 = (static_cast<double>(gen()) + 1.0) * kScale;
  double u2 = static_cast<double>(gen()) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string hint(const ChatRequest& r, const std::string& key) {
  auto it = r.hints.find(key);
  return it == r.hints.end() ? std::string() : it->second;
}

std::string filler_words(std::size_t n) {
  static const std::vector<std::string> vocab = {
      "in",    "other", "words", "the",   "points", "above", "hold",
      "as",    "stated", "and",  "remain", "the",   "core",  "of", "this", "answer"};
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += vocab[i % vocab.size()];
  }
  return out;
}

}  // namespace

int MockPersona::effective_base_max() const {
  if (base_max) return std::clamp(*base_max, 0, 5);
  return 5 - std::clamp(bias, 0, 5);
}

int MockPersona::base_score(Aspect aspect, const std::string& question,
                            const std::string& answer) const {
  if (kind == Kind::kConstant) return score;
  auto key = std::to_string(base_seed) + '\x1f' + std::string(aspect_name(aspect)) +
             '\x1f' + question + '\x1f' + answer;
  return static_cast<int>(stable_hash64(key) %
                          static_cast<std::uint64_t>(effective_base_max() + 1));
}

MockPersona MockPersona::first_position_bias(int b, std::uint64_t base_seed) {
  MockPersona p;
  p.kind = Kind::kFirstPositionBias;
  p.bias = b;
  p.base_seed = base_seed;
  return p;
}

MockPersona MockPersona::constant(int score) {
  MockPersona p;
  p.kind = Kind::kConstant;
  p.score = score;
  return p;
}

MockPersona MockPersona::noisy(std::uint64_t seed, double sigma, std::uint64_t base_seed) {
  MockPersona p;
  p.kind = Kind::kNoisy;
  p.seed = seed;
  p.sigma = sigma;
  p.base_seed = base_seed;
  p.base_max = 3;
  return p;
}

MockPersona MockPersona::length_bias(double slope, std::uint64_t base_seed) {
  MockPersona p;
  p.kind = Kind::kLengthBias;
  p.slope = slope;
  p.base_seed = base_seed;
  p.base_max = 3;
  return p;
}

MockPersona persona_from_json(const nlohmann::json& j) {
  MockPersona p;
  auto kind = j.value("kind", std::string("content"));
  if (kind == "content") {
    p.kind = MockPersona::Kind::kContent;
  } else if (kind == "constant") {
    p.kind = MockPersona::Kind::kConstant;
  } else if (kind == "first_position_bias") {
    p.kind = MockPersona::Kind::kFirstPositionBias;
  } else if (kind == "length_bias") {
    p.kind = MockPersona::Kind::kLengthBias;
  } else if (kind == "noisy") {
    p.kind = MockPersona::Kind::kNoisy;
  } else if (kind == "scripted_map") {
    p.kind = MockPersona::Kind::kScriptedMap;
  } else {
    throw InputError("unknown mock persona kind: " + kind);
  }
  p.bias = j.value("b", 0);
  p.slope = j.value("slope", 0.0);
  p.seed = j.value("seed", std::uint64_t{0});
  p.sigma = j.value("sigma", 0.0);
  p.score = j.value("score", 3);
  p.base_seed = j.value("base_seed", std::uint64_t{0});
  if (j.contains("base_max")) p.base_max = j["base_max"].get<int>();
  if (p.score < 0 || p.score > 5) throw InputError("constant persona score must be in [0,5]");
  return p;
}

nlohmann::json to_json(const MockPersona& p) {
  static const char* kNames[] = {"content", "constant", "first_position_bias",
                                 "length_bias", "noisy", "scripted_map"};
  nlohmann::json j = {{"kind", kNames[static_cast<int>(p.kind)]},
                      {"b", p.bias},
                      {"slope", p.slope},
                      {"seed", p.seed},
                      {"sigma", p.sigma},
                      {"score", p.score},
                      {"base_seed", p.base_seed}};
  if (p.base_max) j["base_max"] = *p.base_max;
  return j;
}

MockConfig mock_config_from_json(const nlohmann::json& j) {
  MockConfig c;
  if (j.contains("judge")) c.judge = persona_from_json(j["judge"]);
  if (j.contains("scripted")) {
    for (auto& [k, v] : j["scripted"].items()) c.scripted[k] = v.get<std::string>();
  }
  if (j.contains("glean")) {
    for (const auto& e : j["glean"].value("entities", nlohmann::json::array())) {
      c.glean_entities.push_back({e.at("name").get<std::string>(),
                                  e.value("description", std::string())});
    }
    for (const auto& r : j["glean"].value("relations", nlohmann::json::array())) {
      c.glean_relations.push_back({r.at("source").get<std::string>(),
                                   r.at("target").get<std::string>(),
                                   r.value("description", std::string())});
    }
  }
  c.append_fraction = j.value("append_fraction", 1.0);
  c.transient_failures = j.value("transient_failures", 0);
  return c;
}

nlohmann::json heuristic_extraction(const std::string& text) {
  nlohmann::json entities = nlohmann::json::array();
  nlohmann::json relations = nlohmann::json::array();
  std::set<std::string> seen;

  for (const auto& sentence : sentences(text)) {
    std::string sentence_text = join_words(sentence, 0, sentence.size());
    // (name, index of first word, index one past last word)
    std::vector<std::tuple<std::string, std::size_t, std::size_t>> found;
    std::size_t i = 0;
    while (i < sentence.size()) {
      std::string w = strip_punct(sentence[i]);
      if (!capitalised(w)) {
        ++i;
        continue;
      }
      std::size_t start = i;
      std::vector<std::string> run{w};
      // A run continues while words stay capitalised and the previous word
      // does not close a clause.
      while (i + 1 < sentence.size() && !ends_sentence(sentence[i]) &&
             sentence[i].back() != ',' && sentence[i].back() != ';' &&
             capitalised(strip_punct(sentence[i + 1]))) {
        ++i;
        run.push_back(strip_punct(sentence[i]));
      }
      ++i;
      if (run.size() == 1 && stopwords().count(run[0])) continue;
      if (!run.empty() && stopwords().count(run[0])) run.erase(run.begin());
      found.emplace_back(join_words(run, 0, run.size()), start, i);
    }
    for (const auto& [name, b, e] : found) {
      if (seen.insert(normalize_name(name)).second) {
        entities.push_back({{"name", name}, {"description", sentence_text}});
      }
    }
    for (std::size_t k = 0; k + 1 < found.size(); ++k) {
      const auto& [head, hb, he] = found[k];
      const auto& [tail, tb, te] = found[k + 1];
      if (normalize_name(head) == normalize_name(tail)) continue;
      std::vector<std::string> between;
      for (std::size_t m = he; m < tb; ++m) {
        auto w = strip_punct(sentence[m]);
        if (!w.empty()) between.push_back(w);
      }
      std::string desc = between.empty() ? std::string("appears alongside")
                                         : join_words(between, 0, between.size());
      relations.push_back({{"source", head}, {"target", tail}, {"description", desc}});
    }
  }
  return {{"entities", entities}, {"relations", relations}};
}

// ---------------------------------------------------------------------------

MockBackend::MockBackend(MockConfig config)
    : config_(std::move(config)), failures_left_(config_.transient_failures) {}

BackendReply MockBackend::send(const ChatRequest& request) {
  ++calls_;
  if (failures_left_.load() > 0 && failures_left_.fetch_sub(1) > 0) {
    throw TransientBackendError("mock transient failure");
  }
  BackendReply reply;
  reply.text = respond(request);
  reply.prompt_tokens = synthesize_tokens(count_words(request.prompt_text()));
  reply.completion_tokens = synthesize_tokens(count_words(reply.text));
  reply.latency = Micros(10 * (*reply.prompt_tokens + *reply.completion_tokens));
  return reply;
}

std::string MockBackend::respond(const ChatRequest& request) const {
  if (auto it = config_.scripted.find(request.fingerprint()); it != config_.scripted.end()) {
    return it->second;
  }
  switch (request.purpose) {
    case Purpose::kExtract:
      return heuristic_extraction(hint(request, "chunk_text")).dump();
    case Purpose::kGlean: {
      nlohmann::json out = {{"entities", nlohmann::json::array()},
                            {"relations", nlohmann::json::array()}};
      for (const auto& e : config_.glean_entities) {
        out["entities"].push_back({{"name", e.name}, {"description", e.description}});
      }
      for (const auto& r : config_.glean_relations) {
        out["relations"].push_back(
            {{"source", r.source}, {"target", r.target}, {"description", r.description}});
      }
      return out.dump();
    }
    case Purpose::kSummarize: {
      auto count = hint(request, "segment_count");
      std::string out = "Summary of " + count + " text segments:";
      auto segs = hint(request, "segment_heads");
      if (!segs.empty()) out += " " + segs;
      return out;
    }
    case Purpose::kQuestion: {
      auto level = hint(request, "level");
      std::vector<std::string> entities;
      {
        std::string all = hint(request, "entity_names");
        std::size_t start = 0;
        while (start <= all.size()) {
          auto nl = all.find('\n', start);
          auto piece = all.substr(start, nl == std::string::npos ? std::string::npos
                                                                 : nl - start);
          if (!piece.empty()) entities.push_back(piece);
          if (nl == std::string::npos) break;
          start = nl + 1;
        }
      }
      if (entities.empty()) return "";
      if (level == "node") {
        return "What are the defining characteristics of " + entities[0] +
               " according to the text?";
      }
      if (level == "edge" && entities.size() >= 2) {
        return "How does the relationship in which " + entities[0] + " " +
               hint(request, "relation_description") + " " + entities[1] +
               " shape what the text says about each of them?";
      }
      std::string tag = short_hash(hint(request, "entity_names"), 6);
      return "Taken together, how do " + entities[0] + ", " +
             (entities.size() > 1 ? entities[1] : entities[0]) + " and the other " +
             std::to_string(entities.size() > 2 ? entities.size() - 2 : 0) +
             " connected entities (group " + tag + ") relate to one another?";
    }
    case Purpose::kAnswerExpand: {
      auto needed = static_cast<double>(std::stoll("0" + hint(request, "words_needed")));
      auto n = static_cast<std::size_t>(std::ceil(needed * config_.append_fraction));
      return filler_words(n);
    }
    case Purpose::kJudge:
      return judge_reply(request);
    case Purpose::kAnswer:
      return "";
  }
  return "";
}

int MockBackend::judge_score(Aspect aspect, const ChatRequest& request, int slot) const {
  const auto& p = config_.judge;
  const auto question = hint(request, "question");
  const auto self = hint(request, slot == 0 ? "answer_1" : "answer_2");
  const auto other = hint(request, slot == 0 ? "answer_2" : "answer_1");
  double s = p.base_score(aspect, question, self);
  if (slot == 0) s += p.bias;
  if (p.slope != 0.0) {
    s += std::round(p.slope * (static_cast<double>(count_words(self)) -
                               static_cast<double>(count_words(other))));
  }
  if (p.kind == MockPersona::Kind::kNoisy && p.sigma > 0) {
    auto key = std::to_string(p.seed) + '\x1f' + request.fingerprint() + '\x1f' +
               std::to_string(request.nonce) + '\x1f' +
               std::string(aspect_name(aspect)) + '\x1f' + std::to_string(slot);
    s += std::round(p.sigma * normal_draw(stable_hash64(key)));
  }
  return static_cast<int>(std::clamp(s, 0.0, 5.0));
}

std::string MockBackend::judge_reply(const ChatRequest& request) const {
  if (config_.judge.kind == MockPersona::Kind::kScriptedMap) {
    throw BackendError("scripted_map persona has no response for fingerprint " +
                       request.fingerprint());
  }
  nlohmann::json out = nlohmann::json::object();
  if (hint(request, "mode") == "choose") {
    int total[2] = {0, 0};
    for (auto a : kAllAspects) {
      int s0 = judge_score(a, request, 0);
      int s1 = judge_score(a, request, 1);
      total[0] += s0;
      total[1] += s1;
      out[std::string(a == Aspect::kRelevance ? "Diversity" : aspect_name(a))] = {
          {"winner", s1 > s0 ? "Answer 2" : "Answer 1"},
          {"explanation", "scripted comparison"}};
    }
    bool second = total[1] > total[0];
    if (total[1] == total[0]) {
      // Equal totals are broken on content, so only identical texts fall
      // back to the first position.
      second = stable_hash64(hint(request, "answer_2")) > stable_hash64(hint(request, "answer_1"));
    }
    out["Overall"] = {{"winner", second ? "Answer 2" : "Answer 1"},
                      {"explanation", "scripted comparison"}};
    return out.dump();
  }
  for (auto a : kAllAspects) {
    nlohmann::json block;
    for (int slot = 0; slot < 2; ++slot) {
      int s = judge_score(a, request, slot);
      block[slot == 0 ? "answer_1" : "answer_2"] = {
          {"score", s},
          {"explanation", "scripted " + std::string(aspect_name(a)) + " score " +
                              std::to_string(s)}};
    }
    out[std::string(aspect_name(a))] = block;
  }
  return out.dump();
}

}  // namespace rageval
