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

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/corpus.hpp"
#include "rageval/llm.hpp"
#include "rageval/prompts.hpp"

namespace rageval {

struct ExtractedEntity {
  std::string name;
  std::string description;
};

struct ExtractedRelation {
  std::string source;
  std::string target;
  std::string description;
};

// Everything extracted from one chunk. The chunk id is the provenance of
// every element.
struct ChunkExtraction {
  std::string chunk_id;
  std::vector<ExtractedEntity> entities;
  std::vector<ExtractedRelation> relations;
};

struct Entity {
  std::string entity_id;
  std::string name;
  std::string normalized_name;
  std::string description;
  std::set<std::string> source_chunk_ids;

  bool operator==(const Entity&) const = default;
};

struct Relation {
  std::string relation_id;
  std::string head;
  std::string tail;
  std::string description;
  std::set<std::string> source_chunk_ids;

  bool operator==(const Relation&) const = default;
};

struct Neighbor {
  std::string relation_id;
  std::string entity_id;
  auto operator<=>(const Neighbor&) const = default;
};

// Relations keep their direction; adjacency is their symmetric closure and
// drives undirected traversal.
struct KnowledgeGraph {
  std::map<std::string, Entity> entities;
  std::map<std::string, Relation> relations;
  std::map<std::string, std::set<Neighbor>> adjacency;

  void rebuild_adjacency();
  bool empty() const { return entities.empty(); }
  const Entity* find_by_name(const std::string& name) const;

  bool operator==(const KnowledgeGraph&) const = default;
};

std::string entity_id_for(const std::string& normalized_name);
std::string relation_id_for(const std::string& head_id, const std::string& tail_id);

struct ExtractionOptions {
  int max_retries = 3;   // unparseable responses tolerated per call
  int glean_rounds = 1;
  std::size_t workers = 4;
};

// Strict parse of {"entities": [...], "relations": [...]} after the lenient
// repair pass. Relation endpoints missing from the entity list are added as
// bare entities; self relations are dropped.
ChunkExtraction parse_extraction(const std::string& response, const std::string& chunk_id);

// Adds elements of `extra` not already present (by normalized name, or by
// normalized endpoints for relations). New description text is appended.
void merge_extraction(ChunkExtraction& base, const ChunkExtraction& extra);

ChunkExtraction extract_elements(const Chunk& chunk, Gateway& llm, const PromptSet& prompts,
                                 const ExtractionOptions& options = {});

// Runs options.glean_rounds follow-up passes and returns the union.
ChunkExtraction glean(const Chunk& chunk, const ChunkExtraction& first_pass, Gateway& llm,
                      const PromptSet& prompts, const ExtractionOptions& options = {});

// Deduplicates entities by normalized name, unions provenance, joins
// distinct description fragments in sorted order and re-points relations.
// Independent of the order of `extractions`.
KnowledgeGraph merge_graph(const std::vector<ChunkExtraction>& extractions);

// Returns the graph unchanged when every referenced chunk resolves; throws
// ProvenanceError naming the element and the missing id otherwise.
const KnowledgeGraph& link_provenance(const KnowledgeGraph& kg, const ChunkStore& chunks);

// Checks the structural invariants (adjacency symmetry, endpoint existence,
// unique normalized names, non-empty provenance). Throws Error on violation.
void validate_graph(const KnowledgeGraph& kg);

struct SkippedChunk {
  std::string chunk_id;
  std::string reason;
};

struct GraphBuild {
  KnowledgeGraph graph;
  std::vector<ChunkExtraction> extractions;
  std::vector<SkippedChunk> skipped;
};

// Extraction + gleaning over every chunk, then merge. Chunks whose responses
// stay unparseable are skipped and reported, never dropped silently.
GraphBuild build_knowledge_graph(const std::vector<Chunk>& chunks, Gateway& llm,
                                 const PromptSet& prompts,
                                 const ExtractionOptions& options = {});

nlohmann::json to_json(const Entity& e);
nlohmann::json to_json(const Relation& r);
Entity entity_from_json(const nlohmann::json& j);
Relation relation_from_json(const nlohmann::json& j);

// entities.jsonl + relations.jsonl + manifest.json under `dir`.
void write_graph(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                 const nlohmann::json& manifest);
KnowledgeGraph read_graph(const std::filesystem::path& dir);

}  // namespace rageval
