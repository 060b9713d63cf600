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

#include <chrono>
#include <map>
#include <string>

#include "rageval/llm.hpp"

namespace rageval {

struct RemoteOptions {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  std::map<Purpose, std::string> model_overrides;
  std::chrono::seconds timeout{120};
};

// Reads RAGEVAL_BASE_URL, RAGEVAL_MODEL, RAGEVAL_API_KEY and per-purpose
// overrides RAGEVAL_MODEL_<PURPOSE> (e.g. RAGEVAL_MODEL_JUDGE).
RemoteOptions remote_options_from_env();

// Chat-completions client: POST {base_url}/chat/completions.
// 429 and 5xx replies and connection failures raise TransientBackendError;
// 401/403 raise AuthError; anything else that is not a well-formed
// completion raises BackendError.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options);

  BackendReply send(const ChatRequest& request) override;
  std::string name() const override { return "remote"; }

  const RemoteOptions& options() const { return options_; }

 private:
  RemoteOptions options_;
  std::string host_;         // scheme://host[:port]
  std::string path_prefix_;  // "/v1"
};

}  // namespace rageval
