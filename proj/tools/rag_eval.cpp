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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rageval/error.hpp"
#include "rageval/llm.hpp"
#include "rageval/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kStage = 2, kBackend = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string force_stage;
  std::string backend;
  bool verbose = false;
};

rageval::RunConfig resolve_config(const Globals& g) {
  if (g.config.empty()) throw rageval::InputError("--config is required");
  auto cfg = rageval::load_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.sampler.seed = *g.seed;
  }
  if (!g.backend.empty()) {
    if (g.backend != "mock" && g.backend != "remote") {
      throw rageval::InputError("--backend must be mock or remote");
    }
    cfg.backend_kind = g.backend;
  }
  return cfg;
}

bool forced(const Globals& g, rageval::Stage s) {
  return g.force_stage == "all" || g.force_stage == rageval::stage_name(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbiased pairwise evaluation of retrieval-augmented generation systems"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured seed");
  app.add_option("--force-stage", g.force_stage,
                 "Re-run this stage (or 'all') even if up to date, accepting prior outputs "
                 "from a different configuration");
  app.add_option("--backend", g.backend, "Override the configured backend: mock or remote");
  app.add_flag("-v,--verbose", g.verbose, "Debug logging");

  std::optional<rageval::Stage> single;
  for (auto s : rageval::kAllStages) {
    auto* sub = app.add_subcommand(rageval::stage_name(s), "Run the " + rageval::stage_name(s) +
                                                               " stage");
    sub->callback([&single, s] { single = s; });
  }
  auto* full = app.add_subcommand("full-run", "Run every stage that is not up to date");
  std::string mode;
  std::string method;
  auto* diag = app.add_subcommand("diagnose-bias", "Measure judge biases on collected answers");
  diag->add_option("mode", mode, "sanity, position, length or trial")
      ->required()
      ->check(CLI::IsMember({"sanity", "position", "length", "trial"}));
  diag->add_option("--method", method, "Method to diagnose (default: first declared)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::info);
  if (!g.force_stage.empty() && g.force_stage != "all" &&
      !rageval::stage_from_name(g.force_stage)) {
    std::cerr << "error: unknown stage for --force-stage: " << g.force_stage << "\n";
    return kUsage;
  }

  try {
    rageval::Pipeline pipeline(resolve_config(g));
    if (single) {
      pipeline.run_stage(*single, forced(g, *single));
    } else if (full->parsed()) {
      std::optional<rageval::Stage> force;
      if (!g.force_stage.empty() && g.force_stage != "all") {
        force = rageval::stage_from_name(g.force_stage);
      }
      if (g.force_stage == "all") {
        for (auto s : rageval::kAllStages) pipeline.run_stage(s, true);
      } else {
        auto ran = pipeline.full_run(force);
        spdlog::info("{} stage(s) executed", ran.size());
      }
    } else if (diag->parsed()) {
      auto out = pipeline.diagnose_bias(mode, method.empty() ? std::nullopt
                                                            : std::optional<std::string>(method));
      std::cout << out.dump(2) << "\n";
    }
  } catch (const rageval::InputError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const rageval::BackendError& e) {
    spdlog::error("backend failure: {}", e.what());
    return kBackend;
  } catch (const rageval::Error& e) {
    spdlog::error("{}", e.what());
    return kStage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kStage;
  }
  return kOk;
}
