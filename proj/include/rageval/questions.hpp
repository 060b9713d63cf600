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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/corpus.hpp"
#include "rageval/knowledge_graph.hpp"
#include "rageval/llm.hpp"
#include "rageval/prompts.hpp"

namespace rageval {

enum class Level { kNode, kEdge, kSubgraph };

inline constexpr Level kAllLevels[] = {Level::kNode, Level::kEdge, Level::kSubgraph};

std::string level_name(Level level);
Level level_from_name(const std::string& name);

using Rng = std::mt19937_64;

// A sampled node, edge or subgraph plus the text that grounds it.
struct ContextStructure {
  Level level = Level::kNode;
  std::vector<std::string> entity_ids;    // distinct, in visit order
  std::vector<std::string> relation_ids;  // distinct, in traversal order
  std::set<std::string> grounding_chunk_ids;
  std::optional<std::string> summary;

  // Identity used for sampling without replacement.
  std::string key() const;
};

struct Question {
  std::string question_id;
  Level level = Level::kNode;
  std::string text;
  ContextStructure structure;
  std::uint64_t seed = 0;
};

struct SamplerConfig {
  std::size_t min_subgraph_nodes = 50;
  std::size_t max_walk_steps = 500;
  std::size_t max_resample_attempts = 20;
  std::size_t per_level_count = 50;
  std::uint64_t seed = 0;
  // Replacement structures tried per level when generated texts collide.
  std::size_t duplicate_retry_budget = 20;
  // Word budget for one summarization or question-generation call.
  std::size_t context_words = 6000;
  int max_retries = 3;
  std::size_t workers = 4;

  void validate() const;
};

ContextStructure sample_node(const KnowledgeGraph& kg, Rng& rng);
ContextStructure sample_edge(const KnowledgeGraph& kg, Rng& rng);

// Random walk from a uniformly drawn seed entity, stepping along a uniformly
// chosen incident relation (undirected), until min_subgraph_nodes distinct
// entities are visited or max_walk_steps steps are taken. Undersized walks
// are resampled; after max_resample_attempts the call throws SamplingError.
ContextStructure sample_subgraph(const KnowledgeGraph& kg, Rng& rng, const SamplerConfig& cfg);

// Union of the source chunks of every referenced element.
std::set<std::string> grounding_chunks(const KnowledgeGraph& kg,
                                       const std::vector<std::string>& entity_ids,
                                       const std::vector<std::string>& relation_ids);

// Summarizes the subgraph's grounding chunks, batching them to the word
// budget and summarizing batch summaries until one remains. Stores and
// returns the summary.
std::string summarize_subgraph(ContextStructure& structure, const ChunkStore& chunks,
                               Gateway& llm, const PromptSet& prompts,
                               const SamplerConfig& cfg = {});

// Builds the level-specific generation request. Node and edge prompts carry
// the structure description and the raw grounding text; subgraph prompts
// carry the structure and its summary.
ChatRequest build_question_request(const ContextStructure& structure, const KnowledgeGraph& kg,
                                   const ChunkStore& chunks, const PromptSet& prompts,
                                   std::size_t context_words = 6000);

std::string generate_question(const ContextStructure& structure, const KnowledgeGraph& kg,
                              const ChunkStore& chunks, Gateway& llm, const PromptSet& prompts,
                              const SamplerConfig& cfg = {});

// per_level_count questions for each level, distinct structures and
// distinct texts within a level.
std::vector<Question> generate_question_set(const KnowledgeGraph& kg, const ChunkStore& chunks,
                                            const SamplerConfig& cfg, Gateway& llm,
                                            const PromptSet& prompts);

nlohmann::json to_json(const Question& q);
Question question_from_json(const nlohmann::json& j);
void write_questions(const std::filesystem::path& path, const std::vector<Question>& qs);
std::vector<Question> read_questions(const std::filesystem::path& path);

}  // namespace rageval
