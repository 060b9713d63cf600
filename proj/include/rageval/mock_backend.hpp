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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/aspect.hpp"
#include "rageval/llm.hpp"

namespace rageval {

// How the scripted judge scores an answer on one aspect.
//
//   content            base(answer) = hash(base_seed, aspect, question, answer)
//                      mod (base_max + 1)
//   constant           every score = `score`
//   first_position_bias  base + b for the answer shown first
//   length_bias        base + round(slope * (own words - other words))
//   noisy              base + round(N(0, sigma)) drawn from (seed, request,
//                      nonce); reproducible, varies across nonces
//   scripted_map       responses only from the fingerprint map
//
// Scores are clamped to [0, 5]. base_max defaults to 5 - max(b, 0) so that a
// positional bonus never saturates.
struct MockPersona {
  enum class Kind {
    kContent,
    kConstant,
    kFirstPositionBias,
    kLengthBias,
    kNoisy,
    kScriptedMap
  };
  Kind kind = Kind::kContent;
  int bias = 0;
  double slope = 0.0;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  int score = 3;
  std::uint64_t base_seed = 0;
  std::optional<int> base_max;

  int effective_base_max() const;
  int base_score(Aspect aspect, const std::string& question,
                 const std::string& answer) const;

  static MockPersona first_position_bias(int b, std::uint64_t base_seed = 0);
  static MockPersona constant(int score);
  static MockPersona noisy(std::uint64_t seed, double sigma, std::uint64_t base_seed = 0);
  static MockPersona length_bias(double slope, std::uint64_t base_seed = 0);
};

struct MockElement {
  std::string name;
  std::string description;
};

struct MockRelationSpec {
  std::string source;
  std::string target;
  std::string description;
};

struct MockConfig {
  MockPersona judge;
  std::map<std::string, std::string> scripted;  // fingerprint -> response
  // Emitted by every glean call.
  std::vector<MockElement> glean_entities;
  std::vector<MockRelationSpec> glean_relations;
  // Forced-append behaviour: fraction of the requested words actually
  // appended (1 = exact, 0 = refuses).
  double append_fraction = 1.0;
  // The first N calls fail with a transient error.
  int transient_failures = 0;
};

MockPersona persona_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockPersona& p);
MockConfig mock_config_from_json(const nlohmann::json& j);

// Deterministic backend answering every purpose from the request hints.
class MockBackend : public Backend {
 public:
  explicit MockBackend(MockConfig config = {});

  BackendReply send(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }
  bool synthesized_usage() const override { return true; }

  // Score the persona gives the answer in `slot` (0 = shown first).
  int judge_score(Aspect aspect, const ChatRequest& request, int slot) const;

  const MockConfig& config() const { return config_; }
  std::size_t calls() const { return calls_.load(); }

 private:
  std::string respond(const ChatRequest& request) const;
  std::string judge_reply(const ChatRequest& request) const;

  MockConfig config_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> failures_left_;
};

// Rule-based extractor used by the mock: maximal runs of capitalised words
// are entities; the words between two consecutive entities of a sentence
// describe their relation. "Harry attends Hogwarts." yields Harry, Hogwarts
// and (Harry, Hogwarts, "attends").
nlohmann::json heuristic_extraction(const std::string& text);

// Backend driven by an arbitrary callable; handy for tests and fixtures.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<BackendReply(const ChatRequest&)>;
  explicit FunctionBackend(Fn fn, bool synthesized = true)
      : fn_(std::move(fn)), synthesized_(synthesized) {}

  BackendReply send(const ChatRequest& request) override { return fn_(request); }
  std::string name() const override { return "function"; }
  bool synthesized_usage() const override { return synthesized_; }

 private:
  Fn fn_;
  bool synthesized_;
};

}  // namespace rageval
