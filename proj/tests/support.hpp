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

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "rageval/knowledge_graph.hpp"
#include "rageval/llm.hpp"
#include "rageval/mock_backend.hpp"
#include "rageval/text.hpp"

namespace rageval::testing {

inline std::filesystem::path fixture_dir() { return RAGEVAL_FIXTURE_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rageval-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline GatewayOptions fast_gateway() {
  GatewayOptions o;
  o.initial_backoff = Micros(100);
  return o;
}

inline std::shared_ptr<Gateway> mock_gateway(MockConfig config = {}) {
  return std::make_shared<Gateway>(std::make_shared<MockBackend>(std::move(config)),
                                   fast_gateway());
}

inline std::string node_name(std::size_t i) { return "Node " + std::to_string(i); }

inline void add_node(KnowledgeGraph& kg, std::size_t i) {
  Entity e;
  e.name = node_name(i);
  e.normalized_name = normalize_name(e.name);
  e.entity_id = entity_id_for(e.normalized_name);
  e.description = "synthetic node " + std::to_string(i);
  e.source_chunk_ids = {"c_synthetic"};
  kg.entities[e.entity_id] = e;
}

inline void add_edge(KnowledgeGraph& kg, std::size_t a, std::size_t b) {
  Relation r;
  r.head = entity_id_for(normalize_name(node_name(a)));
  r.tail = entity_id_for(normalize_name(node_name(b)));
  r.relation_id = relation_id_for(r.head, r.tail);
  r.description = "linked";
  r.source_chunk_ids = {"c_synthetic"};
  kg.relations[r.relation_id] = r;
}

inline KnowledgeGraph path_graph(std::size_t n) {
  KnowledgeGraph kg;
  for (std::size_t i = 0; i < n; ++i) add_node(kg, i);
  for (std::size_t i = 0; i + 1 < n; ++i) add_edge(kg, i, i + 1);
  kg.rebuild_adjacency();
  return kg;
}

// Connected: a random spanning tree plus `extra` random chords.
inline KnowledgeGraph random_connected_graph(std::size_t n, std::size_t extra,
                                             std::uint64_t seed) {
  KnowledgeGraph kg;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) add_node(kg, i);
  for (std::size_t i = 1; i < n; ++i) {
    add_edge(kg, std::uniform_int_distribution<std::size_t>(0, i - 1)(rng), i);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < extra; ++k) {
    auto a = pick(rng);
    auto b = pick(rng);
    if (a != b) add_edge(kg, a, b);
  }
  kg.rebuild_adjacency();
  return kg;
}

}  // namespace rageval::testing
