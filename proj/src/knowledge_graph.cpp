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

#include "rageval/knowledge_graph.hpp"

#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"
#include "rageval/parallel.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace {

std::string string_field(const nlohmann::json& obj, const char* key, bool required) {
  if (!obj.contains(key) || obj[key].is_null()) {
    if (required) throw ParseError(std::string("missing field \"") + key + "\"");
    return {};
  }
  if (!obj[key].is_string()) {
    throw ParseError(std::string("field \"") + key + "\" is not a string");
  }
  return trim(obj[key].get<std::string>());
}

void append_description(std::string& target, const std::string& addition) {
  if (addition.empty() || target.find(addition) != std::string::npos) return;
  if (!target.empty()) target += "\n";
  target += addition;
}

nlohmann::json extraction_to_json(const ChunkExtraction& ex) {
  nlohmann::json out = {{"entities", nlohmann::json::array()},
                        {"relations", nlohmann::json::array()}};
  for (const auto& e : ex.entities) {
    out["entities"].push_back({{"name", e.name}, {"description", e.description}});
  }
  for (const auto& r : ex.relations) {
    out["relations"].push_back(
        {{"source", r.source}, {"target", r.target}, {"description", r.description}});
  }
  return out;
}

std::string join_set(const std::set<std::string>& parts, const char* sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

void KnowledgeGraph::rebuild_adjacency() {
  adjacency.clear();
  for (const auto& [id, e] : entities) adjacency[id];
  for (const auto& [id, r] : relations) {
    adjacency[r.head].insert({id, r.tail});
    adjacency[r.tail].insert({id, r.head});
  }
}

const Entity* KnowledgeGraph::find_by_name(const std::string& name) const {
  auto it = entities.find(entity_id_for(normalize_name(name)));
  return it == entities.end() ? nullptr : &it->second;
}

std::string entity_id_for(const std::string& normalized_name) {
  return "e_" + short_hash(normalized_name);
}

std::string relation_id_for(const std::string& head_id, const std::string& tail_id) {
  return "r_" + short_hash(head_id + '\x1f' + tail_id);
}

ChunkExtraction parse_extraction(const std::string& response, const std::string& chunk_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(repair_json_text(response));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("extraction response is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("extraction response is not an object");
  for (const char* key : {"entities", "relations"}) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw ParseError(std::string("extraction response lacks array \"") + key + "\"");
    }
  }

  ChunkExtraction raw;
  raw.chunk_id = chunk_id;
  for (const auto& e : j["entities"]) {
    if (!e.is_object()) throw ParseError("entity entry is not an object");
    auto name = string_field(e, "name", true);
    if (normalize_name(name).empty()) continue;
    raw.entities.push_back({name, string_field(e, "description", false)});
  }
  for (const auto& r : j["relations"]) {
    if (!r.is_object()) throw ParseError("relation entry is not an object");
    auto source = string_field(r, "source", true);
    auto target = string_field(r, "target", true);
    if (normalize_name(source).empty() || normalize_name(target).empty()) continue;
    raw.relations.push_back({source, target, string_field(r, "description", false)});
  }

  ChunkExtraction out;
  out.chunk_id = chunk_id;
  merge_extraction(out, raw);
  return out;
}

void merge_extraction(ChunkExtraction& base, const ChunkExtraction& extra) {
  auto find_entity = [&](const std::string& name) -> ExtractedEntity* {
    auto norm = normalize_name(name);
    for (auto& e : base.entities) {
      if (normalize_name(e.name) == norm) return &e;
    }
    return nullptr;
  };
  for (const auto& e : extra.entities) {
    if (auto* existing = find_entity(e.name)) {
      append_description(existing->description, e.description);
    } else {
      base.entities.push_back(e);
    }
  }
  for (const auto& r : extra.relations) {
    auto src = normalize_name(r.source);
    auto dst = normalize_name(r.target);
    if (src == dst) {
      spdlog::debug("dropping self relation on '{}' in chunk {}", r.source, base.chunk_id);
      continue;
    }
    for (const auto* endpoint : {&r.source, &r.target}) {
      if (!find_entity(*endpoint)) base.entities.push_back({*endpoint, ""});
    }
    bool merged = false;
    for (auto& existing : base.relations) {
      if (normalize_name(existing.source) == src && normalize_name(existing.target) == dst) {
        append_description(existing.description, r.description);
        merged = true;
        break;
      }
    }
    if (!merged) base.relations.push_back(r);
  }
}

ChunkExtraction extract_elements(const Chunk& chunk, Gateway& llm, const PromptSet& prompts,
                                 const ExtractionOptions& options) {
  if (trim(chunk.text).empty()) {
    throw PreconditionError("chunk " + chunk.chunk_id + " has no text");
  }
  ChatRequest req;
  req.purpose = Purpose::kExtract;
  req.messages.push_back(
      {"user", render_template(prompts.get("extract"), {{"input_text", chunk.text}})});
  req.hints["chunk_text"] = chunk.text;
  req.temperature = 0.0;
  return llm.complete_parsed(
      req, [&](const std::string& text) { return parse_extraction(text, chunk.chunk_id); },
      options.max_retries);
}

ChunkExtraction glean(const Chunk& chunk, const ChunkExtraction& first_pass, Gateway& llm,
                      const PromptSet& prompts, const ExtractionOptions& options) {
  ChunkExtraction result = first_pass;
  result.chunk_id = chunk.chunk_id;
  for (int round = 0; round < options.glean_rounds; ++round) {
    auto previous = extraction_to_json(result).dump(2);
    ChatRequest req;
    req.purpose = Purpose::kGlean;
    req.messages.push_back({"user", render_template(prompts.get("glean"),
                                                    {{"input_text", chunk.text},
                                                     {"previous", previous}})});
    req.hints["chunk_text"] = chunk.text;
    req.hints["previous"] = previous;
    req.temperature = 0.0;
    auto more = llm.complete_parsed(
        req, [&](const std::string& text) { return parse_extraction(text, chunk.chunk_id); },
        options.max_retries);
    merge_extraction(result, more);
  }
  return result;
}

KnowledgeGraph merge_graph(const std::vector<ChunkExtraction>& extractions) {
  struct EntityAcc {
    std::set<std::string> names;
    std::set<std::string> fragments;
    std::set<std::string> chunks;
  };
  struct RelationAcc {
    std::string head;
    std::string tail;
    std::set<std::string> fragments;
    std::set<std::string> chunks;
  };
  std::map<std::string, EntityAcc> entities;  // by normalized name
  std::map<std::string, RelationAcc> relations;  // by relation id

  auto touch_entity = [&](const std::string& name, const std::string& description,
                          const std::string& chunk_id) -> std::string {
    auto norm = normalize_name(name);
    auto& acc = entities[norm];
    acc.names.insert(trim(name));
    if (!trim(description).empty()) acc.fragments.insert(trim(description));
    acc.chunks.insert(chunk_id);
    return entity_id_for(norm);
  };

  for (const auto& ex : extractions) {
    for (const auto& e : ex.entities) {
      if (normalize_name(e.name).empty()) continue;
      touch_entity(e.name, e.description, ex.chunk_id);
    }
    for (const auto& r : ex.relations) {
      if (normalize_name(r.source).empty() || normalize_name(r.target).empty()) continue;
      auto head = touch_entity(r.source, "", ex.chunk_id);
      auto tail = touch_entity(r.target, "", ex.chunk_id);
      if (head == tail) continue;
      auto& acc = relations[relation_id_for(head, tail)];
      acc.head = head;
      acc.tail = tail;
      if (!trim(r.description).empty()) acc.fragments.insert(trim(r.description));
      acc.chunks.insert(ex.chunk_id);
    }
  }

  KnowledgeGraph kg;
  for (auto& [norm, acc] : entities) {
    Entity e;
    e.entity_id = entity_id_for(norm);
    e.name = *acc.names.begin();
    e.normalized_name = norm;
    e.description = join_set(acc.fragments, "\n");
    e.source_chunk_ids = std::move(acc.chunks);
    kg.entities.emplace(e.entity_id, std::move(e));
  }
  for (auto& [id, acc] : relations) {
    Relation r;
    r.relation_id = id;
    r.head = acc.head;
    r.tail = acc.tail;
    r.description = join_set(acc.fragments, "\n");
    r.source_chunk_ids = std::move(acc.chunks);
    kg.relations.emplace(id, std::move(r));
  }
  kg.rebuild_adjacency();
  return kg;
}

const KnowledgeGraph& link_provenance(const KnowledgeGraph& kg, const ChunkStore& chunks) {
  for (const auto& [id, e] : kg.entities) {
    if (e.source_chunk_ids.empty()) {
      throw ProvenanceError("entity '" + e.name + "' (" + id + ") has no source chunk");
    }
    for (const auto& c : e.source_chunk_ids) {
      if (!chunks.contains(c)) {
        throw ProvenanceError("entity '" + e.name + "' (" + id +
                              ") references missing chunk " + c);
      }
    }
  }
  for (const auto& [id, r] : kg.relations) {
    if (r.source_chunk_ids.empty()) {
      throw ProvenanceError("relation " + id + " has no source chunk");
    }
    for (const auto& c : r.source_chunk_ids) {
      if (!chunks.contains(c)) {
        throw ProvenanceError("relation " + id + " (" + r.description +
                              ") references missing chunk " + c);
      }
    }
  }
  return kg;
}

void validate_graph(const KnowledgeGraph& kg) {
  std::set<std::string> norms;
  for (const auto& [id, e] : kg.entities) {
    if (id != e.entity_id) throw Error("entity key mismatch for " + id);
    if (!norms.insert(e.normalized_name).second) {
      throw Error("duplicate normalized name " + e.normalized_name);
    }
    if (e.normalized_name != normalize_name(e.name)) {
      throw Error("normalized name of " + id + " is stale");
    }
    if (e.source_chunk_ids.empty()) throw Error("entity " + id + " lacks provenance");
  }
  for (const auto& [id, r] : kg.relations) {
    if (!kg.entities.count(r.head) || !kg.entities.count(r.tail)) {
      throw Error("relation " + id + " has a dangling endpoint");
    }
    if (r.head == r.tail) throw Error("relation " + id + " is a self loop");
    if (r.source_chunk_ids.empty()) throw Error("relation " + id + " lacks provenance");
  }
  KnowledgeGraph copy;
  copy.entities = kg.entities;
  copy.relations = kg.relations;
  copy.rebuild_adjacency();
  if (copy.adjacency != kg.adjacency) throw Error("adjacency is not the symmetric closure");
}

GraphBuild build_knowledge_graph(const std::vector<Chunk>& chunks, Gateway& llm,
                                 const PromptSet& prompts, const ExtractionOptions& options) {
  struct Outcome {
    std::optional<ChunkExtraction> extraction;
    std::string error;
    bool backend_failure = false;
  };
  auto outcomes = parallel_map(chunks.size(), options.workers, [&](std::size_t i) {
    Outcome o;
    try {
      auto first = extract_elements(chunks[i], llm, prompts, options);
      o.extraction = glean(chunks[i], first, llm, prompts, options);
    } catch (const ParseError& e) {
      o.error = e.what();
    } catch (const BackendError& e) {
      o.error = e.what();
      o.backend_failure = true;
    }
    return o;
  });

  // Unparseable chunks are skipped; an unreachable backend fails the build.
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (outcomes[i].backend_failure) {
      throw BackendError("extraction of chunk " + chunks[i].chunk_id + " failed: " +
                         outcomes[i].error);
    }
  }

  GraphBuild build;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (outcomes[i].extraction) {
      build.extractions.push_back(std::move(*outcomes[i].extraction));
    } else {
      spdlog::warn("skipping chunk {}: {}", chunks[i].chunk_id, outcomes[i].error);
      build.skipped.push_back({chunks[i].chunk_id, outcomes[i].error});
    }
  }
  build.graph = merge_graph(build.extractions);
  return build;
}

nlohmann::json to_json(const Entity& e) {
  return {{"entity_id", e.entity_id},
          {"name", e.name},
          {"normalized_name", e.normalized_name},
          {"description", e.description},
          {"source_chunk_ids", e.source_chunk_ids}};
}

nlohmann::json to_json(const Relation& r) {
  return {{"relation_id", r.relation_id},
          {"head", r.head},
          {"tail", r.tail},
          {"description", r.description},
          {"source_chunk_ids", r.source_chunk_ids}};
}

Entity entity_from_json(const nlohmann::json& j) {
  Entity e;
  e.entity_id = j.at("entity_id").get<std::string>();
  e.name = j.at("name").get<std::string>();
  e.normalized_name = j.at("normalized_name").get<std::string>();
  e.description = j.value("description", std::string());
  e.source_chunk_ids = j.at("source_chunk_ids").get<std::set<std::string>>();
  return e;
}

Relation relation_from_json(const nlohmann::json& j) {
  Relation r;
  r.relation_id = j.at("relation_id").get<std::string>();
  r.head = j.at("head").get<std::string>();
  r.tail = j.at("tail").get<std::string>();
  r.description = j.value("description", std::string());
  r.source_chunk_ids = j.at("source_chunk_ids").get<std::set<std::string>>();
  return r;
}

void write_graph(const std::filesystem::path& dir, const KnowledgeGraph& kg,
                 const nlohmann::json& manifest) {
  std::vector<nlohmann::json> ents;
  for (const auto& [id, e] : kg.entities) ents.push_back(to_json(e));
  std::vector<nlohmann::json> rels;
  for (const auto& [id, r] : kg.relations) rels.push_back(to_json(r));
  write_jsonl(dir / "entities.jsonl", ents);
  write_jsonl(dir / "relations.jsonl", rels);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

KnowledgeGraph read_graph(const std::filesystem::path& dir) {
  KnowledgeGraph kg;
  for (const auto& j : read_jsonl(dir / "entities.jsonl")) {
    auto e = entity_from_json(j);
    kg.entities.emplace(e.entity_id, std::move(e));
  }
  for (const auto& j : read_jsonl(dir / "relations.jsonl")) {
    auto r = relation_from_json(j);
    kg.relations.emplace(r.relation_id, std::move(r));
  }
  kg.rebuild_adjacency();
  validate_graph(kg);
  return kg;
}

}  // namespace rageval
