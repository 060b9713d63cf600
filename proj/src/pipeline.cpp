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

#include "rageval/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"
#include "rageval/mock_backend.hpp"
#include "rageval/parallel.hpp"
#include "rageval/remote_backend.hpp"
#include "rageval/report.hpp"
#include "rageval/stats.hpp"
#include "rageval/text.hpp"

namespace fs = std::filesystem;

namespace rageval {
namespace {

const std::set<std::string> kTopLevelKeys = {
    "corpus", "output_dir", "prompts_dir", "seed",    "workers",   "chunking",
    "extraction", "sampler", "alignment",  "judge",   "trials",    "gateway",
    "backend", "methods",  "comparisons"};

nlohmann::json interpolate_tree(const nlohmann::json& j) {
  if (j.is_string()) return interpolate_env(j.get<std::string>());
  if (j.is_object()) {
    nlohmann::json out = nlohmann::json::object();
    for (auto& [k, v] : j.items()) out[k] = interpolate_tree(v);
    return out;
  }
  if (j.is_array()) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& v : j) out.push_back(interpolate_tree(v));
    return out;
  }
  return j;
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

template <typename T>
void take(const nlohmann::json& obj, const char* key, T& field) {
  if (obj.contains(key) && !obj[key].is_null()) field = obj[key].get<T>();
}

std::string key_of(std::initializer_list<std::string> parts) {
  std::string all;
  for (const auto& p : parts) {
    all += p;
    all += '\x1e';
  }
  return sha256_hex(all);
}

std::string backend_identity(const RunConfig& c) {
  if (c.backend_kind == "mock") return "mock:" + c.mock.dump();
  const auto opts = remote_options_from_env();
  std::string id = "remote:" + opts.base_url + "|" + opts.model;
  for (const auto& [p, m] : opts.model_overrides) id += "|" + purpose_name(p) + "=" + m;
  return id;
}

std::string prompts_identity(const PromptSet& prompts) {
  std::string all;
  for (const auto& n : prompts.names()) all += n + '\x1f' + prompts.get(n) + '\x1e';
  return sha256_hex(all);
}

std::string pair_file(const std::string& prefix, const std::string& a, const std::string& b,
                      const std::string& ext) {
  return prefix + "_" + pair_key(a, b) + ext;
}

const char* kCompleteMarker = ".complete";
const char* kManifestFile = "MANIFEST.json";

std::string filler_words(std::size_t n) {
  static const std::vector<std::string> words = split_words(
      "in other words the points made above hold and are restated here for emphasis");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(words[i % words.size()]);
  return join_words(out, 0, out.size());
}

}  // namespace

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

std::string pair_key(const std::string& a, const std::string& b) {
  return safe_name(a) + "_vs_" + safe_name(b);
}

std::string interpolate_env(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  for (;;) {
    auto start = text.find("${", pos);
    if (start == std::string::npos) {
      out += text.substr(pos);
      return out;
    }
    auto end = text.find('}', start + 2);
    if (end == std::string::npos) throw InputError("unterminated ${ in config value: " + text);
    out += text.substr(pos, start - pos);
    const auto name = text.substr(start + 2, end - start - 2);
    const char* value = std::getenv(name.c_str());
    if (!value) throw InputError("config references unset environment variable " + name);
    out += value;
    pos = end + 1;
  }
}

RunConfig config_from_json(const nlohmann::json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) throw InputError("config must be a JSON object");
  for (auto& [k, v] : raw.items()) {
    if (!kTopLevelKeys.count(k)) throw InputError("unknown config key: " + k);
  }
  const auto j = interpolate_tree(raw);
  RunConfig c;
  c.source = j;
  try {
    if (j.contains("corpus")) c.corpus = resolve(j["corpus"].get<std::string>(), base_dir);
    if (j.contains("output_dir")) {
      c.output_dir = resolve(j["output_dir"].get<std::string>(), base_dir);
    }
    if (j.contains("prompts_dir")) {
      c.prompts_dir = resolve(j["prompts_dir"].get<std::string>(), base_dir);
    }
    take(j, "seed", c.seed);
    c.sampler.seed = c.seed;
    take(j, "workers", c.workers);
    if (j.contains("chunking")) {
      const auto& s = j["chunking"];
      take(s, "chunk_words", c.chunking.chunk_words);
      take(s, "overlap_words", c.chunking.overlap_words);
    }
    if (j.contains("extraction")) {
      const auto& s = j["extraction"];
      take(s, "glean_rounds", c.extraction.glean_rounds);
      take(s, "max_retries", c.extraction.max_retries);
    }
    if (j.contains("sampler")) {
      const auto& s = j["sampler"];
      take(s, "min_subgraph_nodes", c.sampler.min_subgraph_nodes);
      take(s, "max_walk_steps", c.sampler.max_walk_steps);
      take(s, "max_resample_attempts", c.sampler.max_resample_attempts);
      take(s, "per_level_count", c.sampler.per_level_count);
      take(s, "duplicate_retry_budget", c.sampler.duplicate_retry_budget);
      take(s, "context_words", c.sampler.context_words);
      take(s, "max_retries", c.sampler.max_retries);
      take(s, "seed", c.sampler.seed);
    }
    if (j.contains("alignment")) {
      const auto& s = j["alignment"];
      take(s, "tolerance_words", c.alignment.tolerance_words);
      take(s, "max_adjust_rounds", c.alignment.max_adjust_rounds);
      take(s, "max_append_rounds", c.alignment.max_append_rounds);
      take(s, "max_attempts", c.alignment.max_attempts);
    }
    if (j.contains("judge")) {
      const auto& s = j["judge"];
      take(s, "repetitions", c.judge.repetitions);
      take(s, "max_attempts", c.judge.max_attempts);
      if (s.contains("temperature") && !s["temperature"].is_null()) {
        c.judge.temperature = s["temperature"].get<double>();
      }
    }
    take(j, "trials", c.trials);
    if (j.contains("gateway")) {
      const auto& s = j["gateway"];
      take(s, "max_attempts", c.gateway.max_attempts);
      if (s.contains("initial_backoff_ms")) {
        c.gateway.initial_backoff =
            std::chrono::milliseconds(s["initial_backoff_ms"].get<std::int64_t>());
      }
      take(s, "backoff_factor", c.gateway.backoff_factor);
      take(s, "max_in_flight", c.gateway.max_in_flight);
      take(s, "requests_per_second", c.gateway.max_requests_per_second);
    }
    if (j.contains("backend")) {
      const auto& s = j["backend"];
      take(s, "kind", c.backend_kind);
      nlohmann::json mock = nlohmann::json::object();
      if (s.contains("fixture")) {
        auto path = resolve(s["fixture"].get<std::string>(), base_dir);
        try {
          mock = nlohmann::json::parse(read_text_file(path));
        } catch (const nlohmann::json::parse_error& e) {
          throw InputError("mock fixture " + path.string() + ": " + e.what());
        }
      }
      if (s.contains("mock")) mock.merge_patch(s["mock"]);
      c.mock = mock;
    }
    if (j.contains("methods")) {
      for (const auto& m : j["methods"]) c.methods.push_back(m);
    }
    if (j.contains("comparisons")) {
      for (const auto& p : j["comparisons"]) {
        c.comparisons.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
  if (c.backend_kind != "mock" && c.backend_kind != "remote") {
    throw InputError("backend kind must be mock or remote, got " + c.backend_kind);
  }
  if (c.trials < 1) throw InputError("trials (M) must be >= 1");
  if (c.judge.repetitions < 1) throw InputError("judge.repetitions (N) must be >= 1");
  if (c.chunking.chunk_words == 0) throw InputError("chunking.chunk_words must be positive");
  if (c.chunking.overlap_words >= c.chunking.chunk_words) {
    throw InputError("chunking.overlap_words must be smaller than chunk_words");
  }
  try {
    c.sampler.validate();
  } catch (const PreconditionError& e) {
    throw InputError(e.what());
  }
  std::set<std::string> ids;
  for (const auto& m : c.methods) {
    if (!m.contains("id") || !m["id"].is_string()) throw InputError("method without string id");
    if (!ids.insert(m["id"].get<std::string>()).second) {
      throw InputError("duplicate method id " + m["id"].get<std::string>());
    }
  }
  for (const auto& [a, b] : c.comparisons) {
    if (!ids.count(a) || !ids.count(b)) {
      throw InputError("comparison references unknown method: " + a + " vs " + b);
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json methods_json = nlohmann::json::array();
  for (const auto& m : methods) methods_json.push_back(m);
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& [a, b] : comparisons) comps.push_back({a, b});
  return {
      {"corpus", source.value("corpus", std::string())},
      {"seed", seed},
      {"chunking",
       {{"chunk_words", chunking.chunk_words}, {"overlap_words", chunking.overlap_words}}},
      {"extraction",
       {{"glean_rounds", extraction.glean_rounds}, {"max_retries", extraction.max_retries}}},
      {"sampler",
       {{"min_subgraph_nodes", sampler.min_subgraph_nodes},
        {"max_walk_steps", sampler.max_walk_steps},
        {"max_resample_attempts", sampler.max_resample_attempts},
        {"per_level_count", sampler.per_level_count},
        {"duplicate_retry_budget", sampler.duplicate_retry_budget},
        {"context_words", sampler.context_words},
        {"max_retries", sampler.max_retries},
        {"seed", sampler.seed}}},
      {"alignment",
       {{"tolerance_words", alignment.tolerance_words},
        {"max_adjust_rounds", alignment.max_adjust_rounds},
        {"max_append_rounds", alignment.max_append_rounds},
        {"max_attempts", alignment.max_attempts}}},
      {"judge",
       {{"repetitions", judge.repetitions},
        {"max_attempts", judge.max_attempts},
        {"temperature", judge.temperature ? nlohmann::json(*judge.temperature)
                                          : nlohmann::json(nullptr)}}},
      {"trials", trials},
      {"backend", {{"kind", backend_kind}, {"mock", mock}}},
      {"methods", methods_json},
      {"comparisons", comps}};
}

std::string RunConfig::hash() const { return short_hash(to_json().dump(), 16); }

std::shared_ptr<Backend> make_backend(const RunConfig& config) {
  if (config.backend_kind == "remote") {
    return std::make_shared<RemoteBackend>(remote_options_from_env());
  }
  return std::make_shared<MockBackend>(mock_config_from_json(config.mock));
}

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kBuildKg: return "build-kg";
    case Stage::kQuestions: return "gen-questions";
    case Stage::kAnswers: return "collect-answers";
    case Stage::kAlign: return "align";
    case Stage::kCompare: return "compare";
    case Stage::kReport: return "report";
  }
  return "";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  for (auto s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

nlohmann::json to_json(const StageManifest& m) {
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [k, v] : m.inputs) inputs[k] = v;
  return {{"stage", m.stage},   {"key", m.key},         {"config_hash", m.config_hash},
          {"seed", m.seed},     {"inputs", inputs},     {"outputs", m.outputs},
          {"detail", m.detail}};
}

StageManifest manifest_from_json(const nlohmann::json& j) {
  StageManifest m;
  m.stage = j.at("stage").get<std::string>();
  m.key = j.at("key").get<std::string>();
  m.config_hash = j.value("config_hash", std::string());
  m.seed = j.value("seed", std::uint64_t{0});
  const auto inputs = j.value("inputs", nlohmann::json::object());
  for (auto& [k, v] : inputs.items()) {
    m.inputs.emplace_back(k, v.get<std::string>());
  }
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.detail = j.value("detail", nlohmann::json::object());
  return m;
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, std::shared_ptr<Backend> backend)
    : config_(std::move(config)),
      config_hash_(config_.hash()),
      backend_(backend ? std::move(backend) : make_backend(config_)),
      gateway_(std::make_unique<Gateway>(backend_, config_.gateway)),
      prompts_(config_.prompts_dir ? PromptSet(*config_.prompts_dir) : PromptSet()) {}

fs::path Pipeline::stage_dir(Stage s) const { return config_.output_dir / stage_name(s); }

std::string Pipeline::stage_key(Stage s) const {
  const auto& c = config_;
  const auto cfg = c.to_json();
  switch (s) {
    case Stage::kIngest: {
      if (c.corpus.empty()) throw InputError("config has no corpus path");
      return key_of({"ingest", cfg["chunking"].dump(), corpus_hash(load_corpus(c.corpus))});
    }
    case Stage::kBuildKg:
      return key_of({"build-kg", stage_key(Stage::kIngest), cfg["extraction"].dump(),
                     backend_identity(c), prompts_identity(prompts_)});
    case Stage::kQuestions:
      return key_of({"gen-questions", stage_key(Stage::kBuildKg), cfg["sampler"].dump()});
    case Stage::kAnswers:
      return key_of({"collect-answers", stage_key(Stage::kQuestions), cfg["methods"].dump()});
    case Stage::kAlign:
      return key_of({"align", stage_key(Stage::kAnswers), cfg["alignment"].dump(),
                     cfg["comparisons"].dump()});
    case Stage::kCompare:
      return key_of({"compare", stage_key(Stage::kAlign), cfg["judge"].dump(),
                     cfg["trials"].dump()});
    case Stage::kReport:
      return key_of({"report", stage_key(Stage::kCompare), config_hash_});
  }
  return "";
}

std::optional<StageManifest> Pipeline::manifest(Stage s) const {
  auto path = stage_dir(s) / kManifestFile;
  if (!fs::exists(path)) return std::nullopt;
  try {
    return manifest_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const std::exception& e) {
    spdlog::warn("unreadable manifest {}: {}", path.string(), e.what());
    return std::nullopt;
  }
}

bool Pipeline::is_complete(Stage s) const {
  auto marker = stage_dir(s) / kCompleteMarker;
  if (!fs::exists(marker)) return false;
  auto m = manifest(s);
  return m && trim(read_text_file(marker)) == stage_key(s) && m->key == stage_key(s);
}

void Pipeline::require_prior(Stage s, bool force) const {
  if (s == Stage::kIngest) return;
  const auto prior = static_cast<Stage>(static_cast<int>(s) - 1);
  if (is_complete(prior)) return;
  const bool present = fs::exists(stage_dir(prior) / kCompleteMarker);
  if (!force) {
    throw StageError(present ? "stage " + stage_name(prior) +
                                   " was produced under a different configuration; re-run it "
                                   "or pass --force-stage"
                             : "missing prior stage " + stage_name(prior));
  }
  if (!present) throw StageError("missing prior stage " + stage_name(prior) + " (cannot force)");
  spdlog::warn("forcing {} on top of {} from a different configuration", stage_name(s),
               stage_name(prior));
}

void Pipeline::invalidate_after(Stage s) {
  for (auto later : kAllStages) {
    if (static_cast<int>(later) <= static_cast<int>(s)) continue;
    std::error_code ec;
    fs::remove(stage_dir(later) / kCompleteMarker, ec);
  }
}

void Pipeline::write_usage(Stage s) {
  std::vector<json> records;
  for (const auto& u : gateway_->usage()) records.push_back(to_json(u));
  write_jsonl(stage_dir(s) / "usage.jsonl", records);
}

void Pipeline::complete_stage(Stage s, StageManifest m) {
  m.stage = stage_name(s);
  m.key = stage_key(s);
  m.config_hash = config_hash_;
  m.seed = config_.seed;
  if (s != Stage::kIngest) {
    const auto prior = static_cast<Stage>(static_cast<int>(s) - 1);
    auto pm = manifest(prior);
    m.inputs.emplace_back(stage_name(prior), pm ? pm->key : std::string());
  }
  m.outputs.push_back("usage.jsonl");
  write_usage(s);
  write_text_file(stage_dir(s) / kManifestFile, to_json(m).dump(2) + "\n");
  write_text_file(stage_dir(s) / kCompleteMarker, m.key + "\n");
}

bool Pipeline::run_stage(Stage s, bool force) {
  if (!force && is_complete(s)) {
    spdlog::info("stage {} is up to date", stage_name(s));
    return false;
  }
  require_prior(s, force);
  spdlog::info("running stage {}", stage_name(s));
  std::error_code ec;
  fs::remove(stage_dir(s) / kCompleteMarker, ec);
  invalidate_after(s);
  fs::create_directories(stage_dir(s));
  gateway_->clear_usage();
  StageManifest m;
  switch (s) {
    case Stage::kIngest: do_ingest(m); break;
    case Stage::kBuildKg: do_build_kg(m); break;
    case Stage::kQuestions: do_questions(m); break;
    case Stage::kAnswers: do_answers(m); break;
    case Stage::kAlign: do_align(m); break;
    case Stage::kCompare: do_compare(m); break;
    case Stage::kReport: do_report(m); break;
  }
  complete_stage(s, std::move(m));
  return true;
}

std::vector<Stage> Pipeline::full_run(std::optional<Stage> force) {
  std::vector<Stage> ran;
  for (auto s : kAllStages) {
    if (run_stage(s, force && *force == s)) ran.push_back(s);
  }
  return ran;
}

// ---------------------------------------------------------------------------
// Stage bodies

void Pipeline::do_ingest(StageManifest& m) {
  auto docs = load_corpus(config_.corpus);
  auto chunks = chunk_corpus(docs, config_.chunking);
  write_chunks(stage_dir(Stage::kIngest) / "chunks.jsonl", chunks);
  m.outputs.push_back("chunks.jsonl");
  m.detail = {{"documents", docs.size()},
              {"chunks", chunks.size()},
              {"corpus_hash", corpus_hash(docs)}};
}

void Pipeline::do_build_kg(StageManifest& m) {
  auto opts = config_.extraction;
  opts.workers = config_.workers;
  auto build = build_knowledge_graph(chunks(), *gateway_, prompts_, opts);
  const auto dir = stage_dir(Stage::kBuildKg);
  write_graph(dir, build.graph, {{"config_hash", config_hash_}, {"seed", config_.seed}});
  std::vector<json> skipped;
  for (const auto& sk : build.skipped) {
    skipped.push_back({{"chunk_id", sk.chunk_id}, {"reason", sk.reason}});
  }
  write_jsonl(dir / "skipped_chunks.jsonl", skipped);
  m.outputs = {"entities.jsonl", "relations.jsonl", "manifest.json", "skipped_chunks.jsonl"};
  m.detail = {{"entities", build.graph.entities.size()},
              {"relations", build.graph.relations.size()},
              {"skipped_chunks", build.skipped.size()}};
}

void Pipeline::do_questions(StageManifest& m) {
  auto cfg = config_.sampler;
  cfg.workers = config_.workers;
  ChunkStore store(chunks());
  auto qs = generate_question_set(graph(), store, cfg, *gateway_, prompts_);
  write_questions(stage_dir(Stage::kQuestions) / "questions.jsonl", qs);
  m.outputs.push_back("questions.jsonl");
  std::map<std::string, std::size_t> per_level;
  for (const auto& q : qs) ++per_level[level_name(q.level)];
  m.detail = {{"questions", qs.size()}, {"per_level", per_level}};
}

void Pipeline::do_answers(StageManifest& m) {
  const auto qs = questions();
  nlohmann::json detail = nlohmann::json::object();
  for (const auto& id : method_ids()) {
    auto ad = adapter(id);
    auto collection = collect_answers(*ad, qs, *gateway_);
    const auto file = "answers_" + safe_name(id) + ".jsonl";
    write_answers(stage_dir(Stage::kAnswers) / file, collection);
    m.outputs.push_back(file);
    detail[id] = {{"answered", collection.answers.size()},
                  {"failed", collection.failures.size()}};
  }
  m.detail = detail;
}

void Pipeline::do_align(StageManifest& m) {
  const auto qs = questions();
  nlohmann::json detail = nlohmann::json::object();
  for (const auto& [a, b] : comparisons()) {
    auto ad_a = adapter(a);
    auto ad_b = adapter(b);
    auto pairs = align_all(qs, answers(a), answers(b), *ad_a, *ad_b, *gateway_, prompts_,
                           config_.alignment, config_.workers);
    const auto file = pair_file("pairs", a, b, ".jsonl");
    write_pairs(stage_dir(Stage::kAlign) / file, pairs);
    m.outputs.push_back(file);
    detail[pair_key(a, b)] = to_json(alignment_report(pairs));
  }
  m.detail = detail;
}

void Pipeline::do_compare(StageManifest& m) {
  const auto qs = questions();
  auto judge = make_llm_judge(qs, *gateway_, prompts_, config_.judge);
  for (const auto& [a, b] : comparisons()) {
    std::vector<std::vector<PairVerdict>> verdicts;
    auto summary = run_comparison(a, b, pairs(a, b), judge, config_.trials, config_.workers,
                                  &verdicts);
    std::vector<json> records;
    for (std::size_t t = 0; t < verdicts.size(); ++t) {
      for (const auto& v : verdicts[t]) {
        auto j = to_json(v);
        j["trial"] = t;
        records.push_back(std::move(j));
      }
    }
    const auto vfile = pair_file("verdicts", a, b, ".jsonl");
    const auto sfile = pair_file("summary", a, b, ".json");
    write_jsonl(stage_dir(Stage::kCompare) / vfile, records);
    write_text_file(stage_dir(Stage::kCompare) / sfile, to_json(summary).dump(2) + "\n");
    m.outputs.push_back(vfile);
    m.outputs.push_back(sfile);
  }
}

void Pipeline::do_report(StageManifest& m) {
  ReportInput input;
  for (const auto& [a, b] : comparisons()) {
    const auto path = stage_dir(Stage::kCompare) / pair_file("summary", a, b, ".json");
    input.comparisons.push_back(summary_from_json(nlohmann::json::parse(read_text_file(path))));
    input.alignment.emplace_back(pair_key(a, b), alignment_report(pairs(a, b)));
  }
  std::vector<UsageRecord> usage;
  for (const auto& j : read_jsonl(stage_dir(Stage::kAnswers) / "usage.jsonl")) {
    usage.push_back(usage_from_json(j));
  }
  input.usage = usage_report(usage);
  ReportMeta meta{config_hash_, config_.seed, backend_->synthesized_usage()};
  auto bundle = emit_reports(input, meta, stage_dir(Stage::kReport));
  for (const auto& f : bundle.files) m.outputs.push_back(f.filename().string());
  m.detail = {{"warnings", bundle.warnings}};
}

// ---------------------------------------------------------------------------
// Stage readers

std::vector<Chunk> Pipeline::chunks() const {
  return read_chunks(stage_dir(Stage::kIngest) / "chunks.jsonl");
}

KnowledgeGraph Pipeline::graph() const { return read_graph(stage_dir(Stage::kBuildKg)); }

std::vector<Question> Pipeline::questions() const {
  return read_questions(stage_dir(Stage::kQuestions) / "questions.jsonl");
}

AnswerCollection Pipeline::answers(const std::string& method_id) const {
  return read_answers(stage_dir(Stage::kAnswers) / ("answers_" + safe_name(method_id) + ".jsonl"));
}

std::vector<AlignedPair> Pipeline::pairs(const std::string& a, const std::string& b) const {
  return read_pairs(stage_dir(Stage::kAlign) / pair_file("pairs", a, b, ".jsonl"));
}

std::vector<std::string> Pipeline::method_ids() const {
  std::vector<std::string> out;
  for (const auto& m : config_.methods) out.push_back(m.at("id").get<std::string>());
  return out;
}

std::vector<std::pair<std::string, std::string>> Pipeline::comparisons() const {
  if (!config_.comparisons.empty()) return config_.comparisons;
  std::vector<std::pair<std::string, std::string>> out;
  const auto ids = method_ids();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) out.emplace_back(ids[i], ids[j]);
  }
  return out;
}

std::unique_ptr<RagAdapter> Pipeline::adapter(const std::string& method_id) const {
  for (const auto& m : config_.methods) {
    if (m.at("id").get<std::string>() == method_id) return make_adapter(m);
  }
  throw InputError("unknown method " + method_id);
}

// ---------------------------------------------------------------------------
// Bias diagnostics

nlohmann::json Pipeline::diagnose_bias(const std::string& mode, std::optional<std::string> method) {
  if (!is_complete(Stage::kAnswers)) {
    throw StageError("diagnose-bias needs completed gen-questions and collect-answers stages");
  }
  const auto ids = method_ids();
  if (ids.empty()) throw InputError("no methods declared");
  const std::string first = method.value_or(ids.front());
  if (std::find(ids.begin(), ids.end(), first) == ids.end()) {
    throw InputError("unknown method " + first);
  }
  std::string second = first;
  for (const auto& id : ids) {
    if (id != first) {
      second = id;
      break;
    }
  }

  const auto qs = questions();
  auto by_question = [](const AnswerCollection& c) {
    std::map<std::string, const Answer*> out;
    for (const auto& a : c.answers) out[a.question_id] = &a;
    return out;
  };
  const auto coll_a = answers(first);
  const auto coll_b = answers(second);
  const auto ans_a = by_question(coll_a);
  const auto ans_b = by_question(coll_b);

  struct Item {
    const Question* q;
    const Answer* a;
    const Answer* b;
  };
  std::vector<Item> items;
  for (const auto& q : qs) {
    auto ia = ans_a.find(q.question_id);
    auto ib = ans_b.find(q.question_id);
    if (ia != ans_a.end() && ib != ans_b.end()) items.push_back({&q, ia->second, ib->second});
  }
  if (items.empty()) throw StageError("no question has answers from the selected methods");
  const auto n = static_cast<std::int64_t>(items.size());
  const auto workers = config_.workers;
  const auto max_attempts = config_.judge.max_attempts;

  auto naive_pass = [&](bool a_first, std::uint64_t nonce, bool self) {
    auto wins = parallel_map(items.size(), workers, [&](std::size_t i) {
      const auto& it = items[i];
      const auto& x = it.a->text;
      const auto& y = self ? it.a->text : it.b->text;
      int w = a_first ? naive_compare(it.q->text, x, y, *gateway_, prompts_, nonce, max_attempts)
                      : naive_compare(it.q->text, y, x, *gateway_, prompts_, nonce, max_attempts);
      return (w == 0) == a_first ? 1 : 0;  // 1 when the first method wins
    });
    std::int64_t total = 0;
    for (int w : wins) total += w;
    return total;
  };

  gateway_->clear_usage();
  nlohmann::json out = {{"mode", mode},
                        {"config_hash", config_hash_},
                        {"seed", config_.seed},
                        {"questions", n}};

  if (mode == "sanity") {
    const auto front = naive_pass(true, 0, true);
    std::vector<AlignedPair> pairs;
    for (const auto& it : items) {
      AlignedPair p;
      p.question_id = it.q->question_id;
      p.answer_a = *it.a;
      p.answer_b = *it.a;
      p.answer_a.method_id = first + "#1";
      p.answer_b.method_id = first + "#2";
      pairs.push_back(std::move(p));
    }
    auto judge = make_llm_judge(qs, *gateway_, prompts_, config_.judge);
    auto summary =
        run_comparison(first + "#1", first + "#2", pairs, judge, config_.trials, workers);
    const auto judged = summary.pooled.judged();
    auto r = [&](std::int64_t k) {
      return judged ? rational_json(Rational(k, judged)) : nlohmann::json(nullptr);
    };
    out["method"] = first;
    out["naive"] = {{"protocol", "fixed order, single trial, no alignment, forced winner"},
                    {"front_wins", front},
                    {"back_wins", n - front},
                    {"front_win_rate", rational_json(Rational(front, n))},
                    {"back_win_rate", rational_json(Rational(n - front, n))}};
    out["unbiased"] = {{"protocol", "length aligned, position exchange, rubric scores"},
                       {"trials", summary.trials.size()},
                       {"a_win", summary.pooled.a_win},
                       {"b_win", summary.pooled.b_win},
                       {"tie", summary.pooled.tie},
                       {"a_win_rate", r(summary.pooled.a_win)},
                       {"b_win_rate", r(summary.pooled.b_win)},
                       {"tie_rate", r(summary.pooled.tie)}};
  } else if (mode == "position") {
    const bool self = first == second;
    const auto wins_first = naive_pass(true, 0, self);
    const auto wins_second = naive_pass(false, 0, self);
    const Rational rf(wins_first, n);
    const Rational rs(wins_second, n);
    out["method_a"] = first;
    out["method_b"] = second;
    out["a_win_rate_when_first"] = rational_json(rf);
    out["a_win_rate_when_second"] = rational_json(rs);
    out["gap"] = rational_json(rf - rs);
  } else if (mode == "length") {
    const std::vector<std::size_t> deltas = {0, 5, 10, 25, 50, 100};
    nlohmann::json curve = nlohmann::json::array();
    for (auto d : deltas) {
      auto verdicts = parallel_map(items.size(), workers, [&](std::size_t i) {
        const auto& it = items[i];
        std::string padded = it.a->text;
        if (d > 0) padded += " " + filler_words(d);
        return evaluate_answers(it.q->question_id, it.q->text, padded, it.a->text, *gateway_,
                                prompts_, config_.judge, 0);
      });
      auto t = tally_trial(0, verdicts);
      curve.push_back(nlohmann::json{{"delta_words", d},
                       {"padded_wins", t.counts.a_win},
                       {"original_wins", t.counts.b_win},
                       {"ties", t.counts.tie},
                       {"failed", t.failed},
                       {"padded_win_rate", t.win_rate_a() ? rational_json(*t.win_rate_a())
                                                          : nlohmann::json(nullptr)}});
    }
    out["method"] = first;
    out["curve"] = curve;
  } else if (mode == "trial") {
    const bool self = first == second;
    std::vector<Rational> rates;
    nlohmann::json repeats = nlohmann::json::array();
    for (int k = 0; k < config_.trials; ++k) {
      const auto wins = naive_pass(true, static_cast<std::uint64_t>(k), self);
      rates.emplace_back(wins, n);
      repeats.push_back({{"repeat", k}, {"a_win_rate", rational_json(rates.back())}});
    }
    const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
    out["method_a"] = first;
    out["method_b"] = second;
    out["repeats"] = repeats;
    out["spread"] = rational_json(*hi - *lo);
    out["box"] = to_json(box_stats(rates));
    out["quartile_method"] = kQuartileMethod;
  } else {
    throw InputError("unknown diagnose-bias mode " + mode +
                     " (expected sanity, position, length or trial)");
  }
  write_text_file(config_.output_dir / "diagnostics" / (mode + ".json"), out.dump(2) + "\n");
  return out;
}

}  // namespace rageval
