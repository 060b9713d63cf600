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

#include "rageval/remote_backend.hpp"

#include <cctype>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace rageval {
namespace {

std::string env_or(const char* name, const std::string& fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

RemoteOptions remote_options_from_env() {
  RemoteOptions o;
  o.base_url = env_or("RAGEVAL_BASE_URL", "https://api.openai.com/v1");
  o.model = env_or("RAGEVAL_MODEL", "gpt-4o-mini");
  o.api_key = env_or("RAGEVAL_API_KEY");
  for (auto p : {Purpose::kExtract, Purpose::kGlean, Purpose::kSummarize,
                 Purpose::kQuestion, Purpose::kAnswerExpand, Purpose::kJudge}) {
    auto var = "RAGEVAL_MODEL_" + upper(purpose_name(p));
    if (const char* v = std::getenv(var.c_str())) o.model_overrides[p] = v;
  }
  return o;
}

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError("backend base URL must include a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (options_.model.empty()) throw InputError("remote backend requires a model name");
}

BackendReply RemoteBackend::send(const ChatRequest& request) {
  nlohmann::json body;
  auto model = options_.model;
  if (auto it = options_.model_overrides.find(request.purpose);
      it != options_.model_overrides.end()) {
    model = it->second;
  }
  body["model"] = model;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  if (request.temperature) body["temperature"] = *request.temperature;
  if (request.max_output) body["max_tokens"] = *request.max_output;

  httplib::Client client(host_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  auto res = client.Post(path_prefix_ + "/chat/completions", headers, body.dump(),
                         "application/json");
  if (!res) {
    throw TransientBackendError("connection to " + host_ +
                                " failed: " + httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw AuthError("backend rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status == 429 || status >= 500) {
    throw TransientBackendError("backend returned HTTP " + std::to_string(status));
  }
  if (status != 200) {
    throw BackendError("backend returned HTTP " + std::to_string(status) + ": " +
                       res->body.substr(0, 200));
  }

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    throw BackendError("malformed backend reply: not JSON");
  }
  if (!reply.contains("choices") || !reply["choices"].is_array() ||
      reply["choices"].empty() || !reply["choices"][0].contains("message") ||
      !reply["choices"][0]["message"].contains("content") ||
      !reply["choices"][0]["message"]["content"].is_string()) {
    throw BackendError("malformed backend reply: missing choices[0].message.content");
  }
  BackendReply out;
  out.text = reply["choices"][0]["message"]["content"].get<std::string>();
  if (reply.contains("usage") && reply["usage"].is_object()) {
    const auto& u = reply["usage"];
    if (u.contains("prompt_tokens")) out.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
    if (u.contains("completion_tokens")) {
      out.completion_tokens = u["completion_tokens"].get<std::int64_t>();
    }
  }
  return out;
}

}  // namespace rageval
