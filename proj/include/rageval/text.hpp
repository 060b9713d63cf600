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
#include <string>
#include <string_view>
#include <vector>

namespace rageval {

// Maximal whitespace-delimited tokens.
std::vector<std::string> split_words(std::string_view text);

std::size_t count_words(std::string_view text);

std::string join_words(const std::vector<std::string>& words, std::size_t begin,
                       std::size_t end);

std::string trim(std::string_view text);

// Case-folded (ASCII), whitespace-collapsed, trimmed.
std::string normalize_name(std::string_view name);

// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// First `hex_chars` characters of the SHA-256 digest; used for ids.
std::string short_hash(std::string_view data, std::size_t hex_chars = 16);

// 64-bit value derived from SHA-256; stable across platforms.
std::uint64_t stable_hash64(std::string_view data);

// Replaces every "{{key}}" with the mapped value. Unknown keys are left as is.
std::string render_template(
    std::string_view tmpl,
    const std::vector<std::pair<std::string, std::string>>& values);

// Strips markdown code fences and any prose before the first '{' or after
// the matching last '}'. Returns the input unchanged if no braces exist.
std::string repair_json_text(std::string_view text);

// "3310" -> "3,310".
std::string with_thousands(std::int64_t value);

}  // namespace rageval
