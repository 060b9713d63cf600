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

#include "rageval/questions.hpp"

#include <algorithm>
#include <map>

#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"
#include "rageval/parallel.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace {

template <typename T>
std::size_t uniform_index(const std::vector<T>& items, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, items.size() - 1);
  return dist(rng);
}

std::vector<std::string> entity_ids(const KnowledgeGraph& kg) {
  std::vector<std::string> ids;
  ids.reserve(kg.entities.size());
  for (const auto& [id, e] : kg.entities) ids.push_back(id);
  return ids;
}

std::vector<std::string> relation_ids(const KnowledgeGraph& kg) {
  std::vector<std::string> ids;
  ids.reserve(kg.relations.size());
  for (const auto& [id, r] : kg.relations) ids.push_back(id);
  return ids;
}

ContextStructure node_structure(const KnowledgeGraph& kg, const std::string& id) {
  ContextStructure s;
  s.level = Level::kNode;
  s.entity_ids = {id};
  s.grounding_chunk_ids = grounding_chunks(kg, s.entity_ids, {});
  return s;
}

ContextStructure edge_structure(const KnowledgeGraph& kg, const std::string& id) {
  const auto& r = kg.relations.at(id);
  ContextStructure s;
  s.level = Level::kEdge;
  s.entity_ids = {r.head, r.tail};
  s.relation_ids = {id};
  s.grounding_chunk_ids = grounding_chunks(kg, s.entity_ids, s.relation_ids);
  return s;
}

// Chunk texts in grounding order, truncated to the word budget.
std::string grounding_text(const ContextStructure& s, const ChunkStore& chunks,
                           std::size_t budget) {
  std::string out;
  std::size_t used = 0;
  for (const auto& id : s.grounding_chunk_ids) {
    const auto& c = chunks.at(id);
    if (used > 0 && used + c.word_count > budget) break;
    if (!out.empty()) out += "\n\n";
    out += c.text;
    used += c.word_count;
  }
  return out;
}

std::string head_words(const std::string& text, std::size_t n) {
  auto words = split_words(text);
  return join_words(words, 0, std::min(n, words.size()));
}

std::string summarize_segments(const std::vector<std::string>& segments, Gateway& llm,
                               const PromptSet& prompts, int max_retries) {
  std::string joined;
  std::string heads;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    joined += "[" + std::to_string(i + 1) + "] " + segments[i] + "\n\n";
    if (!heads.empty()) heads += " | ";
    heads += head_words(segments[i], 6);
  }
  ChatRequest req;
  req.purpose = Purpose::kSummarize;
  req.messages.push_back(
      {"user", render_template(prompts.get("summarize"),
                               {{"segment_count", std::to_string(segments.size())},
                                {"segments", joined}})});
  req.hints["segment_count"] = std::to_string(segments.size());
  req.hints["segment_heads"] = heads;
  return llm.complete_parsed(
      req,
      [](const std::string& text) {
        auto t = trim(text);
        if (t.empty()) throw ParseError("empty summary");
        return t;
      },
      max_retries);
}

std::string clean_question(const std::string& text) {
  auto t = trim(text);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = trim(t.substr(1, t.size() - 2));
  if (t.empty()) throw ParseError("empty question");
  return t;
}

}  // namespace

std::string level_name(Level level) {
  switch (level) {
    case Level::kNode: return "node";
    case Level::kEdge: return "edge";
    case Level::kSubgraph: return "subgraph";
  }
  return "";
}

Level level_from_name(const std::string& name) {
  for (auto l : kAllLevels) {
    if (level_name(l) == name) return l;
  }
  throw InputError("unknown question level: " + name);
}

std::string ContextStructure::key() const {
  auto e = entity_ids;
  auto r = relation_ids;
  std::sort(e.begin(), e.end());
  std::sort(r.begin(), r.end());
  std::string k = level_name(level);
  for (const auto& id : e) k += "|" + id;
  k += "#";
  for (const auto& id : r) k += "|" + id;
  return k;
}

void SamplerConfig::validate() const {
  if (min_subgraph_nodes < 2) throw PreconditionError("min_subgraph_nodes must be >= 2");
  if (per_level_count < 1) throw PreconditionError("per_level_count must be >= 1");
  if (max_walk_steps < 1) throw PreconditionError("max_walk_steps must be >= 1");
  if (max_resample_attempts < 1) {
    throw PreconditionError("max_resample_attempts must be >= 1");
  }
}

std::set<std::string> grounding_chunks(const KnowledgeGraph& kg,
                                       const std::vector<std::string>& entity_ids,
                                       const std::vector<std::string>& relation_ids) {
  std::set<std::string> out;
  for (const auto& id : entity_ids) {
    const auto& src = kg.entities.at(id).source_chunk_ids;
    out.insert(src.begin(), src.end());
  }
  for (const auto& id : relation_ids) {
    const auto& src = kg.relations.at(id).source_chunk_ids;
    out.insert(src.begin(), src.end());
  }
  return out;
}

ContextStructure sample_node(const KnowledgeGraph& kg, Rng& rng) {
  if (kg.entities.empty()) throw SamplingError("cannot sample a node from an empty graph");
  auto ids = entity_ids(kg);
  return node_structure(kg, ids[uniform_index(ids, rng)]);
}

ContextStructure sample_edge(const KnowledgeGraph& kg, Rng& rng) {
  if (kg.relations.empty()) throw SamplingError("cannot sample an edge: graph has no relations");
  auto ids = relation_ids(kg);
  return edge_structure(kg, ids[uniform_index(ids, rng)]);
}

ContextStructure sample_subgraph(const KnowledgeGraph& kg, Rng& rng, const SamplerConfig& cfg) {
  cfg.validate();
  if (kg.entities.empty()) throw SamplingError("cannot sample a subgraph from an empty graph");
  auto ids = entity_ids(kg);
  std::size_t best = 0;
  for (std::size_t attempt = 0; attempt < cfg.max_resample_attempts; ++attempt) {
    std::string current = ids[uniform_index(ids, rng)];
    std::vector<std::string> visited{current};
    std::set<std::string> visited_set{current};
    std::vector<std::string> traversed;
    std::set<std::string> traversed_set;

    for (std::size_t step = 0;
         step < cfg.max_walk_steps && visited.size() < cfg.min_subgraph_nodes; ++step) {
      const auto& nbrs = kg.adjacency.at(current);
      if (nbrs.empty()) break;
      std::uniform_int_distribution<std::size_t> dist(0, nbrs.size() - 1);
      auto it = nbrs.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(dist(rng)));
      if (traversed_set.insert(it->relation_id).second) traversed.push_back(it->relation_id);
      current = it->entity_id;
      if (visited_set.insert(current).second) visited.push_back(current);
    }
    best = std::max(best, visited.size());
    if (visited.size() >= cfg.min_subgraph_nodes) {
      ContextStructure s;
      s.level = Level::kSubgraph;
      s.entity_ids = std::move(visited);
      s.relation_ids = std::move(traversed);
      s.grounding_chunk_ids = grounding_chunks(kg, s.entity_ids, s.relation_ids);
      return s;
    }
  }
  throw SamplingError("graph too small for subgraph level: " +
                      std::to_string(cfg.max_resample_attempts) + " walks reached at most " +
                      std::to_string(best) + " distinct entities, threshold is " +
                      std::to_string(cfg.min_subgraph_nodes));
}

std::string summarize_subgraph(ContextStructure& structure, const ChunkStore& chunks,
                               Gateway& llm, const PromptSet& prompts,
                               const SamplerConfig& cfg) {
  if (structure.level != Level::kSubgraph) {
    throw PreconditionError("summarize_subgraph requires a subgraph-level structure, got " +
                            level_name(structure.level));
  }
  std::vector<std::string> segments;
  for (const auto& id : structure.grounding_chunk_ids) segments.push_back(chunks.at(id).text);
  if (segments.empty()) throw PreconditionError("subgraph has no grounding chunks");

  const std::size_t budget = std::max<std::size_t>(cfg.context_words, 1);
  while (true) {
    const std::size_t count = segments.size();
    std::vector<std::vector<std::string>> batches(1);
    std::size_t words = 0;
    for (auto& seg : segments) {
      auto n = count_words(seg);
      // Oversized segments are still paired so every pass reduces the count.
      bool full = words + n > budget && (count == 1 || batches.back().size() >= 2 ||
                                         batches.size() * 2 < count);
      if (!batches.back().empty() && full) {
        batches.emplace_back();
        words = 0;
      }
      batches.back().push_back(std::move(seg));
      words += n;
    }
    std::vector<std::string> summaries;
    for (const auto& batch : batches) {
      summaries.push_back(summarize_segments(batch, llm, prompts, cfg.max_retries));
    }
    if (summaries.size() == 1) {
      structure.summary = summaries.front();
      return *structure.summary;
    }
    segments = std::move(summaries);
  }
}

ChatRequest build_question_request(const ContextStructure& structure, const KnowledgeGraph& kg,
                                   const ChunkStore& chunks, const PromptSet& prompts,
                                   std::size_t context_words) {
  if (structure.entity_ids.empty()) throw PreconditionError("structure has no entities");
  std::string entities;
  std::string names;
  for (const auto& id : structure.entity_ids) {
    const auto& e = kg.entities.at(id);
    entities += "- " + e.name + ": " + e.description + "\n";
    if (!names.empty()) names += "\n";
    names += e.name;
  }
  std::string relations;
  for (const auto& id : structure.relation_ids) {
    const auto& r = kg.relations.at(id);
    relations += "- " + kg.entities.at(r.head).name + " -> " + kg.entities.at(r.tail).name +
                 ": " + r.description + "\n";
  }

  ChatRequest req;
  req.purpose = Purpose::kQuestion;
  req.hints["level"] = level_name(structure.level);
  req.hints["entity_names"] = names;
  switch (structure.level) {
    case Level::kNode:
      req.messages.push_back(
          {"user", render_template(prompts.get("question_node"),
                                   {{"entities", entities},
                                    {"source_text",
                                     grounding_text(structure, chunks, context_words)}})});
      break;
    case Level::kEdge: {
      if (structure.relation_ids.size() != 1 || structure.entity_ids.size() != 2) {
        throw PreconditionError("edge structure must hold 2 entities and 1 relation");
      }
      req.hints["relation_description"] = kg.relations.at(structure.relation_ids[0]).description;
      req.messages.push_back(
          {"user", render_template(prompts.get("question_edge"),
                                   {{"entities", entities},
                                    {"relations", relations},
                                    {"source_text",
                                     grounding_text(structure, chunks, context_words)}})});
      break;
    }
    case Level::kSubgraph:
      if (!structure.summary) {
        throw PreconditionError("subgraph structure must be summarized before generation");
      }
      req.hints["summary"] = *structure.summary;
      req.messages.push_back({"user", render_template(prompts.get("question_subgraph"),
                                                      {{"entities", entities},
                                                       {"relations", relations},
                                                       {"summary", *structure.summary}})});
      break;
  }
  return req;
}

std::string generate_question(const ContextStructure& structure, const KnowledgeGraph& kg,
                              const ChunkStore& chunks, Gateway& llm, const PromptSet& prompts,
                              const SamplerConfig& cfg) {
  auto req = build_question_request(structure, kg, chunks, prompts, cfg.context_words);
  return llm.complete_parsed(req, clean_question, cfg.max_retries);
}

std::vector<Question> generate_question_set(const KnowledgeGraph& kg, const ChunkStore& chunks,
                                            const SamplerConfig& cfg, Gateway& llm,
                                            const PromptSet& prompts) {
  cfg.validate();
  link_provenance(kg, chunks);
  Rng rng(cfg.seed);
  std::vector<Question> all;

  for (auto level : kAllLevels) {
    std::set<std::string> used_keys;
    std::set<std::string> used_texts;
    std::vector<std::string> node_pool;
    std::vector<std::string> edge_pool;
    if (level == Level::kNode) node_pool = entity_ids(kg);
    if (level == Level::kEdge) edge_pool = relation_ids(kg);

    // Draws one structure not used before at this level.
    auto draw = [&]() -> ContextStructure {
      switch (level) {
        case Level::kNode: {
          if (node_pool.empty()) {
            throw SamplingError("not enough distinct entities for " +
                                std::to_string(cfg.per_level_count) + " node questions");
          }
          auto i = uniform_index(node_pool, rng);
          auto id = node_pool[i];
          node_pool.erase(node_pool.begin() + static_cast<std::ptrdiff_t>(i));
          return node_structure(kg, id);
        }
        case Level::kEdge: {
          if (edge_pool.empty()) {
            throw SamplingError("not enough distinct relations for " +
                                std::to_string(cfg.per_level_count) + " edge questions");
          }
          auto i = uniform_index(edge_pool, rng);
          auto id = edge_pool[i];
          edge_pool.erase(edge_pool.begin() + static_cast<std::ptrdiff_t>(i));
          return edge_structure(kg, id);
        }
        case Level::kSubgraph:
          for (std::size_t tries = 0; tries <= cfg.duplicate_retry_budget; ++tries) {
            auto s = sample_subgraph(kg, rng, cfg);
            if (!used_keys.count(s.key())) return s;
          }
          throw SamplingError("could not draw a fresh subgraph within the retry budget");
      }
      throw SamplingError("unknown level");
    };

    std::vector<Question> accepted;
    std::size_t duplicates = 0;
    while (accepted.size() < cfg.per_level_count) {
      std::vector<ContextStructure> batch;
      while (accepted.size() + batch.size() < cfg.per_level_count) {
        auto s = draw();
        used_keys.insert(s.key());
        batch.push_back(std::move(s));
      }
      auto texts = parallel_map(batch.size(), cfg.workers, [&](std::size_t i) {
        if (batch[i].level == Level::kSubgraph) {
          summarize_subgraph(batch[i], chunks, llm, prompts, cfg);
        }
        return generate_question(batch[i], kg, chunks, llm, prompts, cfg);
      });
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!used_texts.insert(normalize_name(texts[i])).second) {
          ++duplicates;
          spdlog::debug("duplicate {} question regenerated: {}", level_name(level), texts[i]);
          if (duplicates > cfg.duplicate_retry_budget) {
            throw SamplingError("duplicate " + level_name(level) +
                                " questions exceeded the retry budget of " +
                                std::to_string(cfg.duplicate_retry_budget));
          }
          continue;
        }
        Question q;
        q.level = level;
        q.text = texts[i];
        q.structure = std::move(batch[i]);
        q.seed = cfg.seed;
        accepted.push_back(std::move(q));
      }
    }
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%03zu", i);
      accepted[i].question_id = "q-" + level_name(level) + "-" + buf;
      all.push_back(std::move(accepted[i]));
    }
  }
  return all;
}

nlohmann::json to_json(const Question& q) {
  nlohmann::json j = {{"question_id", q.question_id},
                      {"level", level_name(q.level)},
                      {"text", q.text},
                      {"entity_ids", q.structure.entity_ids},
                      {"relation_ids", q.structure.relation_ids},
                      {"grounding_chunk_ids", q.structure.grounding_chunk_ids},
                      {"seed", q.seed}};
  if (q.structure.summary) j["summary"] = *q.structure.summary;
  return j;
}

Question question_from_json(const nlohmann::json& j) {
  Question q;
  q.question_id = j.at("question_id").get<std::string>();
  q.level = level_from_name(j.at("level").get<std::string>());
  q.text = j.at("text").get<std::string>();
  q.seed = j.value("seed", std::uint64_t{0});
  q.structure.level = q.level;
  q.structure.entity_ids = j.at("entity_ids").get<std::vector<std::string>>();
  q.structure.relation_ids = j.at("relation_ids").get<std::vector<std::string>>();
  q.structure.grounding_chunk_ids =
      j.value("grounding_chunk_ids", std::set<std::string>{});
  if (j.contains("summary")) q.structure.summary = j["summary"].get<std::string>();
  return q;
}

void write_questions(const std::filesystem::path& path, const std::vector<Question>& qs) {
  std::vector<nlohmann::json> records;
  for (const auto& q : qs) records.push_back(to_json(q));
  write_jsonl(path, records);
}

std::vector<Question> read_questions(const std::filesystem::path& path) {
  std::vector<Question> qs;
  for (const auto& j : read_jsonl(path)) qs.push_back(question_from_json(j));
  return qs;
}

}  // namespace rageval
