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

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <gtest/gtest.h>

#include "rageval/error.hpp"
#include "rageval/judge.hpp"
#include "rageval/llm.hpp"
#include "rageval/mock_backend.hpp"
#include "rageval/remote_backend.hpp"
#include "support.hpp"

namespace rageval {
namespace {

ChatRequest simple_request(const std::string& text, Purpose p = Purpose::kQuestion) {
  ChatRequest r;
  r.purpose = p;
  r.messages.push_back({"user", text});
  return r;
}

// Chat-completions endpoint on a local port whose first `failures` calls
// answer `fail_status`.
class FakeServer {
 public:
  FakeServer(int failures, int fail_status, std::string body = "")
      : failures_(failures), fail_status_(fail_status), body_(std::move(body)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++calls_;
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (failures_-- > 0) {
        res.status = fail_status_;
        res.set_content("{\"error\": \"busy\"}", "application/json");
        return;
      }
      res.status = 200;
      res.set_content(body_.empty() ? R"({"choices": [{"message": {"role": "assistant",
                        "content": "hello there"}}],
                        "usage": {"prompt_tokens": 11, "completion_tokens": 2}})"
                                    : body_,
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int calls() const { return calls_; }
  std::string last_auth() const { return last_auth_; }
  std::string last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::atomic<int> failures_;
  int fail_status_;
  std::string body_;
  std::atomic<int> calls_{0};
  std::string last_auth_;
  std::string last_body_;
  int port_ = 0;
  std::thread thread_;
};

RemoteOptions local_options(const FakeServer& s) {
  RemoteOptions o;
  o.base_url = s.base_url();
  o.model = "test-model";
  o.api_key = "secret";
  o.timeout = std::chrono::seconds(5);
  return o;
}

TEST(RemoteBackend, TransientTwiceThenSuccessIsOneCompletion) {
  FakeServer server(2, 503);
  Gateway gw(std::make_shared<RemoteBackend>(local_options(server)), testing::fast_gateway());
  auto done = gw.complete(simple_request("hi"));
  EXPECT_EQ(done.text, "hello there");
  EXPECT_EQ(done.attempts, 3);
  EXPECT_EQ(server.calls(), 3);
  EXPECT_EQ(gw.total_attempts(), 3u);
  EXPECT_EQ(done.usage.prompt_tokens, 11);
  EXPECT_EQ(done.usage.completion_tokens, 2);
  ASSERT_EQ(gw.usage().size(), 1u);
  EXPECT_EQ(server.last_auth(), "Bearer secret");
  EXPECT_EQ(nlohmann::json::parse(server.last_body())["model"], "test-model");
}

TEST(RemoteBackend, RateLimitStatusIsRetried) {
  FakeServer server(1, 429);
  Gateway gw(std::make_shared<RemoteBackend>(local_options(server)), testing::fast_gateway());
  EXPECT_EQ(gw.complete(simple_request("hi")).attempts, 2);
}

TEST(RemoteBackend, ExhaustedRetries) {
  FakeServer server(100, 500);
  auto opts = testing::fast_gateway();
  opts.max_attempts = 3;
  Gateway gw(std::make_shared<RemoteBackend>(local_options(server)), opts);
  EXPECT_THROW(gw.complete(simple_request("hi")), BackendError);
  EXPECT_EQ(server.calls(), 3);
}

TEST(RemoteBackend, AuthFailureIsNotRetried) {
  FakeServer server(100, 401);
  Gateway gw(std::make_shared<RemoteBackend>(local_options(server)), testing::fast_gateway());
  EXPECT_THROW(gw.complete(simple_request("hi")), AuthError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(RemoteBackend, MalformedReply) {
  FakeServer server(0, 200, R"({"choices": []})");
  Gateway gw(std::make_shared<RemoteBackend>(local_options(server)), testing::fast_gateway());
  EXPECT_THROW(gw.complete(simple_request("hi")), BackendError);
  EXPECT_EQ(server.calls(), 1);
}

TEST(RemoteBackend, PerPurposeModelOverride) {
  FakeServer server(0, 200);
  auto opts = local_options(server);
  opts.model_overrides[Purpose::kJudge] = "judge-model";
  Gateway gw(std::make_shared<RemoteBackend>(opts), testing::fast_gateway());
  gw.complete(simple_request("hi", Purpose::kJudge));
  EXPECT_EQ(nlohmann::json::parse(server.last_body())["model"], "judge-model");
}

TEST(RemoteOptions, FromEnvironment) {
  ::setenv("RAGEVAL_BASE_URL", "http://localhost:9/v1", 1);
  ::setenv("RAGEVAL_MODEL", "m1", 1);
  ::setenv("RAGEVAL_API_KEY", "k", 1);
  ::setenv("RAGEVAL_MODEL_JUDGE", "m2", 1);
  auto o = remote_options_from_env();
  EXPECT_EQ(o.base_url, "http://localhost:9/v1");
  EXPECT_EQ(o.model, "m1");
  EXPECT_EQ(o.api_key, "k");
  EXPECT_EQ(o.model_overrides.at(Purpose::kJudge), "m2");
  for (const char* v : {"RAGEVAL_BASE_URL", "RAGEVAL_MODEL", "RAGEVAL_API_KEY",
                        "RAGEVAL_MODEL_JUDGE"}) {
    ::unsetenv(v);
  }
}

TEST(Gateway, RejectsEmptyMessages) {
  auto gw = testing::mock_gateway();
  EXPECT_THROW(gw->complete(ChatRequest{}), PreconditionError);
}

TEST(Gateway, MockTransientFailuresAreRetried) {
  MockConfig cfg;
  cfg.transient_failures = 2;
  auto gw = testing::mock_gateway(cfg);
  auto done = gw->complete(simple_request("hi"));
  EXPECT_EQ(done.attempts, 3);
}

TEST(Gateway, ParseRetriesThenFails) {
  std::atomic<int> calls{0};
  auto backend = std::make_shared<FunctionBackend>([&](const ChatRequest&) {
    BackendReply r;
    r.text = ++calls < 3 ? "garbage" : "42";
    return r;
  });
  Gateway gw(backend, testing::fast_gateway());
  auto parse = [](const std::string& t) {
    if (t != "42") throw ParseError("not 42");
    return 42;
  };
  EXPECT_EQ(gw.complete_parsed(simple_request("q"), parse, 3), 42);
  calls = 0;
  EXPECT_THROW(gw.complete_parsed(simple_request("q"), parse, 2), ParseError);
}

TEST(RateLimiter, CapsInFlight) {
  auto backend = std::make_shared<FunctionBackend>([](const ChatRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return BackendReply{"ok", 1, 1, Micros(1)};
  });
  auto opts = testing::fast_gateway();
  opts.max_in_flight = 3;
  Gateway gw(backend, opts);
  std::vector<std::thread> threads;
  for (int t = 0; t < 12; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 4; ++i) gw.complete(simple_request("x"));
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(gw.limiter().peak_in_flight(), 3u);
  EXPECT_EQ(gw.usage().size(), 48u);
}

TEST(RateLimiter, SpacesRequestStarts) {
  RateLimiter limiter(8, 200.0);  // one start per 5 ms
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) limiter.acquire();
  EXPECT_GE(std::chrono::steady_clock::now() - t0, std::chrono::milliseconds(19));
}

TEST(UsageReport, CostTableFormatting) {
  std::vector<UsageRecord> records;
  for (int i = 0; i < 100; ++i) {
    UsageRecord u;
    u.prompt_tokens = 3000;
    u.completion_tokens = 310;
    u.latency = Micros(8'770'000);
    u.purpose = Purpose::kAnswer;
    u.method_id = "FGRAG";
    records.push_back(u);
  }
  auto report = usage_report(records);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].calls, 100u);
  EXPECT_DOUBLE_EQ(report.rows[0].mean_tokens(), 3310.0);
  auto table = format_cost_table(report);
  EXPECT_NE(table.find("| Method name | Token consumption | Query time (s) |"), std::string::npos);
  EXPECT_NE(table.find("| FGRAG | 3,310 | 8.77 |"), std::string::npos) << table;
}

TEST(UsageReport, EmptyAndInterleaving) {
  EXPECT_TRUE(usage_report({}).empty());
  std::vector<UsageRecord> a;
  std::vector<UsageRecord> mixed;
  for (int i = 0; i < 10; ++i) {
    UsageRecord x{100 + i, 5, Micros(1000 * i), Purpose::kAnswer, std::string("x")};
    UsageRecord y{900 - i, 7, Micros(7), Purpose::kAnswer, std::string("y")};
    a.push_back(x);
    mixed.push_back(y);
    mixed.push_back(x);
  }
  auto only = usage_report(a);
  auto both = usage_report(mixed);
  ASSERT_EQ(both.rows.size(), 2u);
  EXPECT_EQ(both.rows[0].method_id, "x");
  EXPECT_EQ(both.rows[0].total_tokens(), only.rows[0].total_tokens());
  EXPECT_EQ(both.rows[0].latency, only.rows[0].latency);
  EXPECT_EQ(both.rows[0].total_tokens(), 10 * 100 + 45 + 50);
}

ChatRequest judge_request(const std::string& first, const std::string& second,
                          std::uint64_t nonce = 0) {
  return build_judge_request("Which school?", first, second, default_rubric(), PromptSet(), {},
                             nonce);
}

TEST(MockPersona, FirstPositionBiasAddsExactlyB) {
  for (int b = 1; b <= 3; ++b) {
    MockConfig cfg;
    cfg.judge = MockPersona::first_position_bias(b, 17);
    MockBackend mock(cfg);
    auto req = judge_request("answer one text", "answer two text");
    for (auto a : kAllAspects) {
      EXPECT_EQ(mock.judge_score(a, req, 0),
                cfg.judge.base_score(a, "Which school?", "answer one text") + b);
      EXPECT_EQ(mock.judge_score(a, req, 1),
                cfg.judge.base_score(a, "Which school?", "answer two text"));
    }
  }
}

TEST(MockPersona, NoisyIsReproducibleUnderSeed) {
  MockConfig cfg;
  cfg.judge = MockPersona::noisy(42, 1.0);
  auto req = judge_request("left", "right", 7);
  auto first = MockBackend(cfg).send(req).text;
  EXPECT_EQ(MockBackend(cfg).send(req).text, first);
  bool varied = false;
  for (std::uint64_t n = 0; n < 20 && !varied; ++n) {
    varied = MockBackend(cfg).send(judge_request("left", "right", n)).text != first;
  }
  EXPECT_TRUE(varied);
}

TEST(MockPersona, ScriptedMapByFingerprint) {
  auto req = simple_request("tell me", Purpose::kQuestion);
  MockConfig cfg;
  cfg.scripted[req.fingerprint()] = "fixed response";
  auto gw = testing::mock_gateway(cfg);
  auto done = gw->complete(req);
  EXPECT_EQ(done.text, "fixed response");
  EXPECT_GT(done.usage.latency.count(), 0);

  MockConfig map_only;
  map_only.judge.kind = MockPersona::Kind::kScriptedMap;
  auto gw2 = testing::mock_gateway(map_only);
  EXPECT_THROW(gw2->complete(judge_request("a", "b")), BackendError);
}

TEST(MockPersona, FromJson) {
  auto p = persona_from_json({{"kind", "first_position_bias"}, {"b", 2}});
  EXPECT_EQ(p.kind, MockPersona::Kind::kFirstPositionBias);
  EXPECT_EQ(p.effective_base_max(), 3);
  EXPECT_THROW(persona_from_json({{"kind", "psychic"}}), InputError);
}

}  // namespace
}  // namespace rageval
