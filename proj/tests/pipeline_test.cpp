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

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rageval/error.hpp"
#include "rageval/pipeline.hpp"
#include "support.hpp"

namespace rageval {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json smoke_json() {
  return nlohmann::json::parse(slurp(testing::fixture_dir() / "smoke" / "config.json"));
}

RunConfig smoke_config(const fs::path& out, nlohmann::json patch = nlohmann::json::object()) {
  auto j = smoke_json();
  j["output_dir"] = out.string();
  j.merge_patch(patch);
  return config_from_json(j, testing::fixture_dir() / "smoke");
}

std::map<std::string, std::string> report_files(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    auto name = e.path().filename().string();
    if (name == "MANIFEST.json" || name == ".complete" || name == "usage.jsonl") continue;
    out[name] = slurp(e.path());
  }
  return out;
}

TEST(Pipeline, SmokeFullRunIsReproducible) {
  testing::TempDir d1("smoke1");
  testing::TempDir d2("smoke2");
  Pipeline p1(smoke_config(d1.path()));
  auto ran = p1.full_run();
  EXPECT_EQ(ran.size(), 7u);
  auto qs = p1.questions();
  ASSERT_EQ(qs.size(), 6u);
  std::map<Level, int> per_level;
  for (const auto& q : qs) ++per_level[q.level];
  for (auto l : {Level::kNode, Level::kEdge, Level::kSubgraph}) EXPECT_EQ(per_level[l], 2);

  auto files = report_files(p1.stage_dir(Stage::kReport));
  for (const char* name : {"summary.json", "win_tie_loss.csv", "aspects.csv",
                           "relative_win_rate_heatmap.csv", "boxplot_alpha_vs_beta.svg",
                           "cost_table.md"}) {
    EXPECT_TRUE(files.count(name)) << name;
  }
  auto summary = nlohmann::json::parse(files["summary.json"]);
  EXPECT_EQ(summary["comparisons"][0]["trials"].size(), 3u);

  Pipeline p2(smoke_config(d2.path()));
  p2.full_run();
  EXPECT_EQ(report_files(p2.stage_dir(Stage::kReport)), files);
}

TEST(Pipeline, ResumesAndInvalidatesDownstream) {
  testing::TempDir dir("resume");
  Pipeline(smoke_config(dir.path())).full_run();
  EXPECT_TRUE(Pipeline(smoke_config(dir.path())).full_run().empty());

  Pipeline changed(smoke_config(dir.path(), {{"alignment", {{"tolerance_words", 5}}}}));
  EXPECT_TRUE(changed.is_complete(Stage::kAnswers));
  EXPECT_FALSE(changed.is_complete(Stage::kAlign));
  auto ran = changed.full_run();
  EXPECT_EQ(ran, (std::vector<Stage>{Stage::kAlign, Stage::kCompare, Stage::kReport}));

  Pipeline again(smoke_config(dir.path(), {{"alignment", {{"tolerance_words", 5}}}}));
  EXPECT_TRUE(again.run_stage(Stage::kQuestions, true));
  EXPECT_FALSE(again.is_complete(Stage::kAnswers));
  EXPECT_FALSE(again.is_complete(Stage::kReport));
  EXPECT_FALSE(again.run_stage(Stage::kQuestions));
}

TEST(Pipeline, StageOrderingErrors) {
  testing::TempDir dir("order");
  Pipeline p(smoke_config(dir.path()));
  try {
    p.run_stage(Stage::kQuestions);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("missing prior stage build-kg"), std::string::npos);
  }
  EXPECT_THROW(p.run_stage(Stage::kQuestions, true), StageError);

  p.run_stage(Stage::kIngest);
  Pipeline other(smoke_config(dir.path(), {{"chunking", {{"chunk_words", 300}}}}));
  try {
    other.run_stage(Stage::kBuildKg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("different configuration"), std::string::npos);
  }
  EXPECT_TRUE(other.run_stage(Stage::kBuildKg, true));
  auto m = other.manifest(Stage::kBuildKg);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->key, other.stage_key(Stage::kBuildKg));
}

TEST(Config, EnvironmentInterpolation) {
  ::setenv("RAGEVAL_TEST_CORPUS", "docs", 1);
  EXPECT_EQ(interpolate_env("x/${RAGEVAL_TEST_CORPUS}/y"), "x/docs/y");
  EXPECT_EQ(interpolate_env("no vars"), "no vars");
  ::unsetenv("RAGEVAL_TEST_MISSING");
  EXPECT_THROW(interpolate_env("${RAGEVAL_TEST_MISSING}"), InputError);

  auto j = smoke_json();
  j["corpus"] = "${RAGEVAL_TEST_CORPUS}";
  auto c = config_from_json(j, testing::fixture_dir() / "smoke");
  EXPECT_EQ(c.corpus, testing::fixture_dir() / "smoke" / "docs");
  ::unsetenv("RAGEVAL_TEST_CORPUS");
}

TEST(Config, Validation) {
  auto j = smoke_json();
  j["colour"] = "blue";
  EXPECT_THROW(config_from_json(j), InputError);
  j = smoke_json();
  j["trials"] = 0;
  EXPECT_THROW(config_from_json(j), InputError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InputError);

  auto a = smoke_config("/tmp/one");
  auto b = smoke_config("/tmp/two", {{"workers", 1}});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), smoke_config("/tmp/one", {{"seed", 1}}).hash());
}

TEST(Diagnose, SanityCheckWithFirstPositionBias) {
  testing::TempDir dir("sanity");
  Pipeline p(smoke_config(
      dir.path(), {{"backend", {{"mock", {{"judge", {{"kind", "first_position_bias"}, {"b", 1}}}}}}}}));
  p.full_run();
  auto out = p.diagnose_bias("sanity");
  const auto n = out["questions"].get<std::int64_t>();
  EXPECT_EQ(n, 6);
  EXPECT_EQ(out["naive"]["front_wins"], n);
  EXPECT_EQ(out["naive"]["back_wins"], 0);
  EXPECT_EQ(out["unbiased"]["tie"], n * 3);
  EXPECT_EQ(out["unbiased"]["a_win"], 0);
  EXPECT_EQ(out["unbiased"]["b_win"], 0);
  EXPECT_TRUE(fs::exists(dir.path() / "diagnostics" / "sanity.json"));

  auto pos = p.diagnose_bias("position");
  // The bias only ever helps the first slot.
  EXPECT_GE(pos["a_win_rate_when_first"]["value"].get<double>(),
            pos["a_win_rate_when_second"]["value"].get<double>());
  EXPECT_GE(pos["gap"]["num"].get<std::int64_t>(), 0);

  auto trial = p.diagnose_bias("trial");
  EXPECT_EQ(trial["repeats"].size(), 3u);
  EXPECT_EQ(trial["spread"]["num"], 0);
  EXPECT_THROW(p.diagnose_bias("astrology"), InputError);
}

TEST(Diagnose, LengthCurveRewardsPaddingUnderLengthBias) {
  testing::TempDir dir("length");
  Pipeline p(smoke_config(
      dir.path(), {{"backend", {{"mock", {{"judge", {{"kind", "length_bias"}, {"slope", 0.1}}}}}}}}));
  for (auto s : {Stage::kIngest, Stage::kBuildKg, Stage::kQuestions, Stage::kAnswers}) {
    p.run_stage(s);
  }
  auto out = p.diagnose_bias("length", std::string("alpha"));
  ASSERT_EQ(out["curve"].size(), 6u);
  EXPECT_EQ(out["curve"][0]["ties"], 6);
  EXPECT_EQ(out["curve"][5]["padded_wins"], 6);
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(RAGEVAL_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  testing::TempDir dir("cli");
  auto j = smoke_json();
  j["corpus"] = (testing::fixture_dir() / "smoke" / "docs").string();
  j["output_dir"] = (dir.path() / "run").string();
  auto cfg = dir.path() / "config.json";
  std::ofstream(cfg) << j.dump(2);

  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " levitate"), 1);
  EXPECT_EQ(run_cli("--config /nonexistent.json ingest"), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " gen-questions"), 2);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --force-stage nothing full-run"), 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " full-run"), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "run" / "report" / "summary.json"));
  EXPECT_EQ(run_cli("--config " + cfg.string() + " diagnose-bias sanity"), 0);
  ::setenv("RAGEVAL_BASE_URL", "http://127.0.0.1:9/v1", 1);
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --force-stage build-kg --backend remote "
                    "build-kg"),
            3);
  ::unsetenv("RAGEVAL_BASE_URL");
}

}  // namespace
}  // namespace rageval
