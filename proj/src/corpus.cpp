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

#include "rageval/corpus.hpp"

#include <algorithm>
#include <set>

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"
#include "rageval/text.hpp"

namespace rageval {
namespace fs = std::filesystem;
namespace {

bool is_record_file(const fs::path& p) { return p.extension() == ".jsonl"; }

void load_record_file(const fs::path& path, std::vector<Document>& out) {
  auto records = read_jsonl(path);
  std::size_t lineno = 0;
  for (const auto& r : records) {
    ++lineno;
    if (!r.is_object() || !r.contains("id") || !r.contains("body")) {
      throw InputError(path.string() + ": record " + std::to_string(lineno) +
                       " lacks id/body");
    }
    Document d;
    d.doc_id = r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
    d.title = r.value("title", "");
    d.body = r["body"].get<std::string>();
    if (trim(d.body).empty()) {
      throw InputError(path.string() + ": record " + std::to_string(lineno) +
                       " has an empty body");
    }
    out.push_back(std::move(d));
  }
}

void load_text_file(const fs::path& root, const fs::path& path,
                    std::vector<Document>& out) {
  Document d;
  d.doc_id = fs::relative(path, root).generic_string();
  d.title = path.stem().string();
  d.body = read_text_file(path);
  if (trim(d.body).empty()) {
    throw InputError(path.string() + ": empty document body");
  }
  out.push_back(std::move(d));
}

}  // namespace

std::vector<Document> load_corpus(const fs::path& source) {
  std::error_code ec;
  if (!fs::exists(source, ec)) {
    throw InputError("unreadable path: " + source.string());
  }
  std::vector<Document> docs;
  if (fs::is_directory(source)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(source)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().filename().string().starts_with(".")) continue;
      files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (is_record_file(f)) {
        load_record_file(f, docs);
      } else {
        load_text_file(source, f, docs);
      }
    }
  } else if (is_record_file(source)) {
    load_record_file(source, docs);
  } else {
    load_text_file(source.parent_path(), source, docs);
  }
  if (docs.empty()) throw InputError("zero documents found in " + source.string());

  std::set<std::string> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.doc_id).second) {
      throw InputError("duplicate doc_id: " + d.doc_id);
    }
  }
  return docs;
}

std::vector<Chunk> chunk_document(const Document& doc,
                                  const ChunkingParams& params) {
  if (params.chunk_words == 0) throw PreconditionError("chunk_words must be positive");
  if (params.overlap_words >= params.chunk_words) {
    throw PreconditionError("overlap_words must be smaller than chunk_words");
  }
  auto words = split_words(doc.body);
  std::vector<Chunk> chunks;
  if (words.empty()) return chunks;

  const std::size_t step = params.chunk_words - params.overlap_words;
  for (std::size_t begin = 0;; begin += step) {
    std::size_t end = std::min(begin + params.chunk_words, words.size());
    Chunk c;
    c.doc_id = doc.doc_id;
    c.seq = chunks.size();
    c.text = join_words(words, begin, end);
    c.word_count = end - begin;
    c.chunk_id = "c_" + short_hash(doc.doc_id + '\x1f' + std::to_string(c.seq) +
                                   '\x1f' + c.text);
    chunks.push_back(std::move(c));
    if (end == words.size()) break;
  }
  return chunks;
}

std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs,
                                const ChunkingParams& params) {
  std::vector<Chunk> all;
  for (const auto& d : docs) {
    auto c = chunk_document(d, params);
    all.insert(all.end(), std::make_move_iterator(c.begin()),
               std::make_move_iterator(c.end()));
  }
  return all;
}

std::string reconstruct_body(const std::vector<Chunk>& doc_chunks,
                             std::size_t overlap_words) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < doc_chunks.size(); ++i) {
    auto w = split_words(doc_chunks[i].text);
    std::size_t skip = i == 0 ? 0 : std::min(overlap_words, w.size());
    words.insert(words.end(), w.begin() + static_cast<std::ptrdiff_t>(skip), w.end());
  }
  return join_words(words, 0, words.size());
}

std::string corpus_hash(const std::vector<Document>& docs) {
  std::vector<std::string> parts;
  parts.reserve(docs.size());
  for (const auto& d : docs) {
    parts.push_back(sha256_hex(d.doc_id + '\x1f' + d.title + '\x1f' + d.body));
  }
  std::sort(parts.begin(), parts.end());
  std::string all;
  for (const auto& p : parts) all += p;
  return sha256_hex(all);
}

nlohmann::json to_json(const Chunk& c) {
  return {{"chunk_id", c.chunk_id},
          {"doc_id", c.doc_id},
          {"seq", c.seq},
          {"text", c.text},
          {"word_count", c.word_count}};
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.doc_id = j.at("doc_id").get<std::string>();
  c.seq = j.at("seq").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  c.word_count = j.at("word_count").get<std::size_t>();
  return c;
}

void write_chunks(const fs::path& path, const std::vector<Chunk>& chunks) {
  std::vector<json> records;
  records.reserve(chunks.size());
  for (const auto& c : chunks) records.push_back(to_json(c));
  write_jsonl(path, records);
}

std::vector<Chunk> read_chunks(const fs::path& path) {
  std::vector<Chunk> chunks;
  for (const auto& r : read_jsonl(path)) chunks.push_back(chunk_from_json(r));
  return chunks;
}

ChunkStore::ChunkStore(const std::vector<Chunk>& chunks) {
  for (const auto& c : chunks) add(c);
}

void ChunkStore::add(Chunk chunk) {
  auto id = chunk.chunk_id;
  chunks_.insert_or_assign(std::move(id), std::move(chunk));
}

bool ChunkStore::contains(const std::string& chunk_id) const {
  return chunks_.count(chunk_id) > 0;
}

const Chunk& ChunkStore::at(const std::string& chunk_id) const {
  auto it = chunks_.find(chunk_id);
  if (it == chunks_.end()) throw ProvenanceError("unknown chunk id " + chunk_id);
  return it->second;
}

}  // namespace rageval
