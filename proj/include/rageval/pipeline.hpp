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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/answers.hpp"
#include "rageval/corpus.hpp"
#include "rageval/judge.hpp"
#include "rageval/knowledge_graph.hpp"
#include "rageval/llm.hpp"
#include "rageval/questions.hpp"

namespace rageval {

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir = "rageval-run";
  std::optional<std::filesystem::path> prompts_dir;
  std::uint64_t seed = 0;
  ChunkingParams chunking;
  ExtractionOptions extraction;
  SamplerConfig sampler;
  AlignmentOptions alignment;
  JudgeOptions judge;
  int trials = 25;  // M
  std::size_t workers = 4;
  GatewayOptions gateway;
  std::string backend_kind = "mock";  // mock | remote
  nlohmann::json mock = nlohmann::json::object();
  std::vector<nlohmann::json> methods;  // adapter declarations
  std::vector<std::pair<std::string, std::string>> comparisons;  // default: all pairs
  nlohmann::json source;  // the interpolated document the config was read from

  // Hash of the effective (defaulted) configuration.
  std::string hash() const;
  nlohmann::json to_json() const;
};

// Replaces ${NAME} with the environment variable NAME. Unset variables are
// an InputError.
std::string interpolate_env(const std::string& text);

// Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::shared_ptr<Backend> make_backend(const RunConfig& config);

enum class Stage { kIngest, kBuildKg, kQuestions, kAnswers, kAlign, kCompare, kReport };

inline constexpr Stage kAllStages[] = {Stage::kIngest,  Stage::kBuildKg, Stage::kQuestions,
                                       Stage::kAnswers, Stage::kAlign,   Stage::kCompare,
                                       Stage::kReport};

std::string stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

struct StageManifest {
  std::string stage;
  std::string key;  // chained input hash
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // upstream stage -> key
  std::vector<std::string> outputs;
  nlohmann::json detail = nlohmann::json::object();
};

nlohmann::json to_json(const StageManifest& m);
StageManifest manifest_from_json(const nlohmann::json& j);

class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::shared_ptr<Backend> backend = nullptr);

  const RunConfig& config() const { return config_; }
  std::filesystem::path stage_dir(Stage s) const;

  // Each key hashes the previous stage's key with the config section the
  // stage consumes, so a change re-runs that stage and everything after it.
  std::string stage_key(Stage s) const;
  bool is_complete(Stage s) const;
  std::optional<StageManifest> manifest(Stage s) const;

  // Runs one stage. Throws StageError when the prior stage is missing or
  // was produced under a different configuration, unless `force`. Returns
  // false when the stage was already up to date and not forced.
  bool run_stage(Stage s, bool force = false);

  // Runs every stage that is not up to date; returns those executed.
  std::vector<Stage> full_run(std::optional<Stage> force = std::nullopt);

  Gateway& gateway() { return *gateway_; }
  const PromptSet& prompts() const { return prompts_; }

  // Readers for stage outputs.
  std::vector<Chunk> chunks() const;
  KnowledgeGraph graph() const;
  std::vector<Question> questions() const;
  AnswerCollection answers(const std::string& method_id) const;
  std::vector<AlignedPair> pairs(const std::string& a, const std::string& b) const;

  std::vector<std::string> method_ids() const;
  std::vector<std::pair<std::string, std::string>> comparisons() const;

  // Bias diagnostics: "sanity", "position", "length" or "trial". Writes
  // diagnostics/<mode>.json and returns its content.
  nlohmann::json diagnose_bias(const std::string& mode,
                               std::optional<std::string> method = std::nullopt);

 private:
  void require_prior(Stage s, bool force) const;
  void complete_stage(Stage s, StageManifest m);
  void invalidate_after(Stage s);
  void write_usage(Stage s);
  std::unique_ptr<RagAdapter> adapter(const std::string& method_id) const;

  void do_ingest(StageManifest& m);
  void do_build_kg(StageManifest& m);
  void do_questions(StageManifest& m);
  void do_answers(StageManifest& m);
  void do_align(StageManifest& m);
  void do_compare(StageManifest& m);
  void do_report(StageManifest& m);

  RunConfig config_;
  std::string config_hash_;
  std::shared_ptr<Backend> backend_;
  std::unique_ptr<Gateway> gateway_;
  PromptSet prompts_;
};

// File-name safe forms of method ids.
std::string safe_name(const std::string& s);
std::string pair_key(const std::string& a, const std::string& b);

}  // namespace rageval
