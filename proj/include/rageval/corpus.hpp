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

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rageval {

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t seq = 0;
  std::string text;
  std::size_t word_count = 0;

  bool operator==(const Chunk&) const = default;
};

struct ChunkingParams {
  std::size_t chunk_words = 600;
  std::size_t overlap_words = 60;
};

// Loads a directory of plain-text articles (one per file, lexicographic path
// order; files ending in .jsonl are read as record files) or a single record
// file whose lines are {id, title, body} objects.
std::vector<Document> load_corpus(const std::filesystem::path& source);

// Sliding window over the body's words. Consecutive chunks share exactly
// `overlap_words` words; the window stops once it reaches the last word.
std::vector<Chunk> chunk_document(const Document& doc,
                                  const ChunkingParams& params);

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs,
                                const ChunkingParams& params);

// Inverse of chunk_document on the whitespace-token sequence.
std::string reconstruct_body(const std::vector<Chunk>& doc_chunks,
                             std::size_t overlap_words);

// Order-independent digest over all documents.
std::string corpus_hash(const std::vector<Document>& docs);

nlohmann::json to_json(const Chunk& c);
Chunk chunk_from_json(const nlohmann::json& j);

void write_chunks(const std::filesystem::path& path,
                  const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunks(const std::filesystem::path& path);

// Lookup table from chunk id to chunk.
class ChunkStore {
 public:
  ChunkStore() = default;
  explicit ChunkStore(const std::vector<Chunk>& chunks);

  void add(Chunk chunk);
  bool contains(const std::string& chunk_id) const;
  // Throws ProvenanceError for unknown ids.
  const Chunk& at(const std::string& chunk_id) const;
  void erase(const std::string& chunk_id) { chunks_.erase(chunk_id); }
  std::size_t size() const { return chunks_.size(); }

 private:
  std::map<std::string, Chunk> chunks_;
};

}  // namespace rageval
