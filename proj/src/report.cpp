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

#include "rageval/report.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "rageval/jsonl.hpp"

namespace rageval {
namespace {

std::string dec(const Rational& r) { return fmt::format("{:.4f}", to_double(r)); }

std::string dec(const std::optional<Rational>& r) { return r ? dec(*r) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string stamp_line(const ReportMeta& meta) {
  return fmt::format("# config_hash={} seed={}\n", meta.config_hash, meta.seed);
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string win_tie_loss_csv(const std::vector<ComparisonSummary>& comps, const ReportMeta& meta) {
  std::string out = stamp_line(meta);
  out += "method_a,method_b,trials,a_win,b_win,tie,failed,win_rate_a,tie_rate,win_rate_b,"
         "median_win_rate_a,median_tie_rate,median_win_rate_b,relative_win_rate\n";
  for (const auto& s : comps) {
    std::int64_t failed = 0;
    for (const auto& t : s.trials) failed += t.failed;
    const auto judged = s.pooled.judged();
    auto pooled_rate = [&](std::int64_t n) {
      return judged ? dec(Rational(n, judged)) : std::string();
    };
    auto median = [](const std::optional<BoxPlotStats>& b) {
      return b ? dec(b->median) : std::string();
    };
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(s.method_a),
                       csv_field(s.method_b), s.trials.size(), s.pooled.a_win, s.pooled.b_win,
                       s.pooled.tie, failed, pooled_rate(s.pooled.a_win),
                       pooled_rate(s.pooled.tie), pooled_rate(s.pooled.b_win), median(s.box_a),
                       median(s.box_tie), median(s.box_b), dec(s.relative_win_rate));
  }
  return out;
}

std::string aspects_csv(const std::vector<ComparisonSummary>& comps, const ReportMeta& meta) {
  std::string out = stamp_line(meta);
  out += "method_a,method_b,aspect,a_win,tie,b_win,win_rate_a,tie_rate,win_rate_b,"
         "relative_win_rate\n";
  for (const auto& s : comps) {
    for (auto a : kAllAspects) {
      const auto& t = s.pooled_aspects[aspect_index(a)];
      const auto n = t.judged();
      auto r = [&](std::int64_t k) { return n ? dec(Rational(k, n)) : std::string(); };
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", csv_field(s.method_a),
                         csv_field(s.method_b), aspect_name(a), t.a_win, t.tie, t.b_win,
                         r(t.a_win), r(t.tie), r(t.b_win), dec(s.aspect_relative_win_rate(a)));
    }
  }
  return out;
}

std::string heatmap_csv(const std::vector<ComparisonSummary>& comps, const ReportMeta& meta) {
  const auto methods = method_order(comps);
  const auto matrix = relative_win_matrix(methods, comps);
  std::string out = stamp_line(meta);
  out += "method";
  for (const auto& m : methods) out += "," + csv_field(m);
  out += "\n";
  for (std::size_t i = 0; i < methods.size(); ++i) {
    out += csv_field(methods[i]);
    for (std::size_t j = 0; j < methods.size(); ++j) out += "," + dec(matrix[i][j]);
    out += "\n";
  }
  return out;
}

nlohmann::json summary_json(const ReportInput& input, const ReportMeta& meta) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& s : input.comparisons) comps.push_back(to_json(s));
  nlohmann::json alignment = nlohmann::json::object();
  for (const auto& [key, r] : input.alignment) alignment[key] = to_json(r);
  const auto methods = method_order(input.comparisons);
  const auto matrix = relative_win_matrix(methods, input.comparisons);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : matrix) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(cell ? rational_json(*cell) : nlohmann::json(nullptr));
    rows.push_back(std::move(r));
  }
  return {{"config_hash", meta.config_hash},
          {"seed", meta.seed},
          {"quartile_method", kQuartileMethod},
          {"token_counts", meta.synthesized_usage
                               ? "synthesized: ceil(words * 4 / 3) per message"
                               : "reported by backend"},
          {"comparisons", comps},
          {"alignment", alignment},
          {"relative_win_rate_matrix", {{"methods", methods}, {"rows", rows}}},
          {"usage", to_json(input.usage)}};
}

}  // namespace

std::vector<std::string> method_order(const std::vector<ComparisonSummary>& comparisons) {
  std::vector<std::string> out;
  for (const auto& s : comparisons) {
    for (const auto* m : {&s.method_a, &s.method_b}) {
      if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
    }
  }
  return out;
}

std::vector<std::vector<std::optional<Rational>>> relative_win_matrix(
    const std::vector<std::string>& methods, const std::vector<ComparisonSummary>& comparisons) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < methods.size(); ++i) index[methods[i]] = i;
  std::vector<std::vector<std::optional<Rational>>> m(
      methods.size(), std::vector<std::optional<Rational>>(methods.size()));
  for (std::size_t i = 0; i < methods.size(); ++i) m[i][i] = Rational(0);
  for (const auto& s : comparisons) {
    auto a = index.find(s.method_a);
    auto b = index.find(s.method_b);
    if (a == index.end() || b == index.end() || a->second == b->second) continue;
    if (!s.relative_win_rate) continue;
    m[a->second][b->second] = *s.relative_win_rate;
    m[b->second][a->second] = -*s.relative_win_rate;
  }
  return m;
}

std::string render_boxplot_svg(const ComparisonSummary& s, const ReportMeta& meta) {
  constexpr int kWidth = 440;
  constexpr int kHeight = 320;
  constexpr double kTop = 40;
  constexpr double kBottom = 270;
  auto y = [&](const Rational& v) { return kBottom - to_double(v) * (kBottom - kTop); };

  nlohmann::json stats = {{"config_hash", meta.config_hash},
                          {"seed", meta.seed},
                          {"quartile_method", kQuartileMethod},
                          {"trials", s.trials.size()}};
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  struct Series {
    const char* key;
    std::string label;
    const std::optional<BoxPlotStats>* box;
    const char* color;
  };
  const Series series[] = {{"win_rate_a", s.method_a + " wins", &s.box_a, "#4c78a8"},
                           {"tie_rate", "tie", &s.box_tie, "#9d9d9d"},
                           {"win_rate_b", s.method_b + " wins", &s.box_b, "#f58518"}};
  for (const auto& ser : series) {
    stats[ser.key] = *ser.box ? to_json(**ser.box) : nlohmann::json(nullptr);
  }
  out += "<metadata>" + xml_escape(stats.dump()) + "</metadata>\n";
  out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{} vs {} ({} trials)</text>\n",
                     kWidth / 2, xml_escape(s.method_a), xml_escape(s.method_b), s.trials.size());
  out += fmt::format("<line x1=\"60\" y1=\"{}\" x2=\"60\" y2=\"{}\" stroke=\"black\"/>\n", kTop,
                     kBottom);
  for (int tick = 0; tick <= 4; ++tick) {
    const Rational v(tick, 4);
    out += fmt::format(
        "<line x1=\"55\" y1=\"{0:.2f}\" x2=\"{1}\" y2=\"{0:.2f}\" stroke=\"#dddddd\"/>"
        "<text x=\"50\" y=\"{2:.2f}\" text-anchor=\"end\">{3:.2f}</text>\n",
        y(v), kWidth - 20, y(v) + 4, to_double(v));
  }
  double cx = 130;
  for (const auto& ser : series) {
    if (*ser.box) {
      const auto& b = **ser.box;
      out += fmt::format("<g class=\"box\" data-series=\"{}\">\n", ser.key);
      out += fmt::format(
          "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{0}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
          y(b.whisker_high), y(b.q75));
      out += fmt::format(
          "<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{0}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
          y(b.q25), y(b.whisker_low));
      for (const auto& w : {b.whisker_low, b.whisker_high}) {
        out += fmt::format(
            "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\"/>\n", cx - 15,
            y(w), cx + 15, y(w));
      }
      out += fmt::format(
          "<rect x=\"{}\" y=\"{:.2f}\" width=\"60\" height=\"{:.2f}\" fill=\"{}\" "
          "fill-opacity=\"0.6\" stroke=\"black\"/>\n",
          cx - 30, y(b.q75), y(b.q25) - y(b.q75), ser.color);
      out += fmt::format(
          "<line x1=\"{}\" y1=\"{:.2f}\" x2=\"{}\" y2=\"{:.2f}\" stroke=\"black\" "
          "stroke-width=\"2\"/>\n",
          cx - 30, y(b.median), cx + 30, y(b.median));
      for (const auto& o : b.outliers) {
        out += fmt::format("<circle cx=\"{}\" cy=\"{:.2f}\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n",
                           cx, y(o));
      }
      out += "</g>\n";
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", cx,
                       kBottom + 20, xml_escape(ser.label));
    cx += 110;
  }
  out += "</svg>\n";
  return out;
}

ReportBundle emit_reports(const ReportInput& input, const ReportMeta& meta,
                          const std::filesystem::path& out_dir) {
  ReportBundle bundle;
  if (input.comparisons.empty()) {
    bundle.warnings.push_back("no comparisons to report; nothing written");
    spdlog::warn("{}", bundle.warnings.back());
    return bundle;
  }
  auto emit = [&](const std::string& name, const std::string& content) {
    auto path = out_dir / name;
    write_text_file(path, content);
    bundle.files.push_back(path);
  };
  emit("summary.json", summary_json(input, meta).dump(2) + "\n");
  emit("win_tie_loss.csv", win_tie_loss_csv(input.comparisons, meta));
  emit("aspects.csv", aspects_csv(input.comparisons, meta));
  emit("relative_win_rate_heatmap.csv", heatmap_csv(input.comparisons, meta));
  for (const auto& s : input.comparisons) {
    emit("boxplot_" + file_safe(s.method_a) + "_vs_" + file_safe(s.method_b) + ".svg",
         render_boxplot_svg(s, meta));
  }
  std::string cost = fmt::format("<!-- config_hash={} seed={} -->\n\n", meta.config_hash, meta.seed);
  cost += input.usage.empty() ? std::string("No usage recorded.\n")
                              : format_cost_table(input.usage, Purpose::kAnswer);
  if (meta.synthesized_usage) {
    cost += "\nToken counts are synthesized by the mock backend (ceil(words * 4 / 3)).\n";
  }
  emit("cost_table.md", cost);
  return bundle;
}

}  // namespace rageval
