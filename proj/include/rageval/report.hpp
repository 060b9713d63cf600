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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rageval/answers.hpp"
#include "rageval/llm.hpp"
#include "rageval/stats.hpp"

namespace rageval {

// Stamped into every artifact.
struct ReportMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  bool synthesized_usage = false;
};

struct ReportInput {
  std::vector<ComparisonSummary> comparisons;
  std::vector<std::pair<std::string, AlignmentReport>> alignment;  // keyed "a_vs_b"
  UsageReport usage;
};

struct ReportBundle {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

// Methods in first-appearance order over the comparisons.
std::vector<std::string> method_order(const std::vector<ComparisonSummary>& comparisons);

// Square matrix of relative win rates: cell (i, j) is row method i against
// column method j. Zero diagonal; absent where the pair was not compared.
std::vector<std::vector<std::optional<Rational>>> relative_win_matrix(
    const std::vector<std::string>& methods, const std::vector<ComparisonSummary>& comparisons);

std::string render_boxplot_svg(const ComparisonSummary& summary, const ReportMeta& meta);

// Writes summary.json, win_tie_loss.csv, aspects.csv,
// relative_win_rate_heatmap.csv, boxplot_<a>_vs_<b>.svg per comparison and
// cost_table.md. An empty comparison set writes nothing and warns.
ReportBundle emit_reports(const ReportInput& input, const ReportMeta& meta,
                          const std::filesystem::path& out_dir);

}  // namespace rageval
