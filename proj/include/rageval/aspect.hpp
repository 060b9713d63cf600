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

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace rageval {

// Answer-quality dimensions scored by the judge. Relevance takes the slot
// that Diversity held in earlier pairwise protocols.
enum class Aspect { kComprehensiveness, kRelevance, kEmpowerment, kDirectness };

inline constexpr std::array<Aspect, 4> kAllAspects = {
    Aspect::kComprehensiveness, Aspect::kRelevance, Aspect::kEmpowerment,
    Aspect::kDirectness};

inline constexpr std::size_t kAspectCount = kAllAspects.size();

constexpr std::string_view aspect_name(Aspect a) {
  switch (a) {
    case Aspect::kComprehensiveness: return "Comprehensiveness";
    case Aspect::kRelevance: return "Relevance";
    case Aspect::kEmpowerment: return "Empowerment";
    case Aspect::kDirectness: return "Directness";
  }
  return "";
}

constexpr std::size_t aspect_index(Aspect a) { return static_cast<std::size_t>(a); }

inline std::optional<Aspect> aspect_from_name(std::string_view name) {
  for (auto a : kAllAspects) {
    if (aspect_name(a) == name) return a;
  }
  return std::nullopt;
}

}  // namespace rageval
