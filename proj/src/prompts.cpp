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

#include "rageval/prompts.hpp"

#include "rageval/error.hpp"
#include "rageval/jsonl.hpp"

namespace rageval {
namespace {

// Template files open with a block of '#' lines (license text) that is not
// part of the prompt.
std::string strip_header(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && text[pos] == '#') {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) return "";
    pos = nl + 1;
  }
  while (pos < text.size() && text[pos] == '\n') ++pos;
  return text.substr(pos);
}

}  // namespace

PromptSet::PromptSet() {
  for (const auto& [name, text] : embedded_prompts()) templates_[name] = strip_header(text);
}

PromptSet::PromptSet(const std::filesystem::path& override_dir) : PromptSet() {
  if (override_dir.empty()) return;
  if (!std::filesystem::is_directory(override_dir)) {
    throw InputError("prompt directory not found: " + override_dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(override_dir)) {
    if (entry.path().extension() != ".txt") continue;
    templates_[entry.path().stem().string()] = strip_header(read_text_file(entry.path()));
  }
}

const std::string& PromptSet::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw InputError("unknown prompt template: " + name);
  return it->second;
}

std::vector<std::string> PromptSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

}  // namespace rageval
