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
#include <map>
#include <string>
#include <vector>

namespace rageval {

// Prompt templates by name ("extract", "judge_score", ...). Defaults are the
// files under prompts/ compiled into the library; a directory of .txt files
// can override any subset of them.
class PromptSet {
 public:
  PromptSet();
  explicit PromptSet(const std::filesystem::path& override_dir);

  // Throws InputError for unknown names.
  const std::string& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::string> templates_;
};

const std::map<std::string, std::string>& embedded_prompts();

}  // namespace rageval
