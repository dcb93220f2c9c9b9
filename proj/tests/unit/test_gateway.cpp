#include "doctest.h"

#include <atomic>
#include <thread>

#include <httplib.h>

#include "copygen/gateway.hpp"

using namespace copygen;

namespace {

ProviderConfig mock_config() {
  ProviderConfig c;
  c.provider_kind = ProviderKind::mock;
  c.attempts = 3;
  return c;
}

struct Recorder {
  std::vector<AuditRecord> records;
  std::mutex mu;
  AuditSink sink() {
    return [this](const AuditRecord& r) {
      std::lock_guard lock(mu);
      records.push_back(r);
    };
  }
};

}  // namespace

TEST_CASE("mock echoes the scripted response") {
  MockTranscript t{{{"generation", std::nullopt, R"([{"header":"A"}])", std::nullopt}}, true};
  Gateway g(std::make_unique<MockProvider>(t), mock_config());
  CHECK(g.complete("write copies", "generation") == R"([{"header":"A"}])");
}

TEST_CASE("strict mock") {
  MockTranscript t{{{"generation", std::nullopt, "one", std::nullopt}, {"judge:tone", std::nullopt, "two", std::nullopt}},
                   true};
  Recorder rec;
  Gateway g(std::make_unique<MockProvider>(t), mock_config(), rec.sink());
  SUBCASE("exhaustion") {
    CHECK(g.complete("p", "generation") == "one");
    CHECK(g.complete("p", "judge:tone") == "two");
    CHECK_THROWS_AS(g.complete("p", "generation"), TranscriptExhausted);
    CHECK(rec.records.size() == 3);
    CHECK(rec.records.back().outcome == "TranscriptExhausted");
  }
  SUBCASE("mismatch") {
    CHECK_THROWS_AS(g.complete("p", "judge:tone"), TranscriptMismatch);
  }
}

TEST_CASE("lenient mock picks the first matching entry") {
  MockTranscript t;
  t.strict = false;
  t.entries = {{"judge:*", std::string("k0002"), "second", std::nullopt},
               {"judge:*", std::string("k0001"), "first", std::nullopt},
               {"*", std::nullopt, "fallback", std::nullopt}};
  auto provider = std::make_unique<MockProvider>(t);
  auto* raw = provider.get();
  Gateway g(std::move(provider), mock_config());
  CHECK(g.complete("copy k0001", "judge:tone") == "first");
  CHECK(g.complete("copy k0002", "judge:persona") == "second");
  CHECK(g.complete("anything", "refinement") == "fallback");
  CHECK(raw->consumed() == 3);
  CHECK(raw->remaining() == 0);
  CHECK(raw->requests().size() == 3);
}

TEST_CASE("retries are bounded and audited once per call") {
  MockTranscript t{{{"*", std::nullopt, "", std::string("timeout")},
                    {"*", std::nullopt, "", std::string("rejected:503")},
                    {"*", std::nullopt, "ok", std::nullopt}},
                   true};
  Recorder rec;
  Gateway g(std::make_unique<MockProvider>(t), mock_config(), rec.sink());
  CHECK(g.complete("p", "generation") == "ok");
  REQUIRE(rec.records.size() == 1);
  CHECK(rec.records[0].attempts == 3);
  CHECK(rec.records[0].outcome == "ok");
}

TEST_CASE("non-retryable rejection fails immediately") {
  MockTranscript t{{{"*", std::nullopt, "", std::string("rejected:400")}, {"*", std::nullopt, "ok", std::nullopt}},
                   true};
  Gateway g(std::make_unique<MockProvider>(t), mock_config());
  try {
    g.complete("p", "generation");
    FAIL("expected rejection");
  } catch (const ProviderRejected& e) {
    CHECK(e.status() == 400);
    CHECK_FALSE(e.retryable());
  }
}

TEST_CASE("empty prompts are rejected") {
  Gateway g(std::make_unique<MockProvider>(MockTranscript{}), mock_config());
  CHECK_THROWS_AS(g.complete("", "generation"), std::invalid_argument);
}

TEST_CASE("transcript json forms") {
  const auto bare = Json::parse(R"([{"tag":"generation","response":"x"}])").get<MockTranscript>();
  CHECK(bare.strict);
  CHECK(bare.entries.size() == 1);
  const auto wrapped =
      Json::parse(R"({"strict":false,"entries":[{"tag":"*","contains":"k1","error":"timeout"}]})").get<MockTranscript>();
  CHECK_FALSE(wrapped.strict);
  CHECK(*wrapped.entries[0].contains == "k1");
  CHECK(Json(wrapped).get<MockTranscript>().entries[0].error == std::optional<std::string>("timeout"));
  CHECK_THROWS(Json::parse(R"([{"tag":"*"}])").get<MockTranscript>());
}

TEST_CASE("unreachable http endpoint times out after the configured attempts") {
  ProviderConfig c;
  c.provider_kind = ProviderKind::http;
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout_ms = 200;
  c.attempts = 3;
  Recorder rec;
  auto g = make_gateway(c, rec.sink());
  std::vector<long long> sleeps;
  g->set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
  CHECK_THROWS_AS(g->complete("p", "generation"), ProviderTimeout);
  CHECK(sleeps == std::vector<long long>{1000, 4000});
  REQUIRE(rec.records.size() == 1);
  CHECK(rec.records[0].attempts == 3);
  CHECK(rec.records[0].outcome == "ProviderTimeout");
}

TEST_CASE("http provider speaks the chat completion protocol") {
  httplib::Server server;
  std::atomic<int> calls{0};
  Json last_body;
  std::string last_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    last_body = Json::parse(req.body);
    last_auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("COPYGEN_TEST_KEY", "secret", 1);
  ProviderConfig c;
  c.provider_kind = ProviderKind::http;
  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  c.credential_env = "COPYGEN_TEST_KEY";
  c.model_id = "m1";
  c.temperature = 0.2;
  auto g = make_gateway(c);
  CHECK(g->complete("prompt text", "judge:tone") == "hello");
  CHECK(last_body["model"] == "m1");
  CHECK(last_body["messages"][0]["content"] == "prompt text");
  CHECK(last_body["metadata"]["request_tag"] == "judge:tone");
  CHECK(last_auth == "Bearer secret");

  c.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
  c.attempts = 2;
  auto broken = make_gateway(c);
  broken->set_sleeper([](std::chrono::milliseconds) {});
  CHECK_THROWS_AS(broken->complete("p", "generation"), ProviderRejected);

  server.stop();
  th.join();
  CHECK(calls == 1);
}

TEST_CASE("concurrent callers share the lenient mock safely") {
  MockTranscript t;
  t.strict = false;
  for (int i = 0; i < 200; ++i) t.entries.push_back({"*", std::nullopt, std::to_string(i), std::nullopt});
  auto cfg = mock_config();
  cfg.max_concurrency = 4;
  Gateway g(std::make_unique<MockProvider>(t), cfg);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int w = 0; w < 8; ++w) {
    threads.emplace_back([&] {
      for (int i = 0; i < 25; ++i) ok += !g.complete("p", "generation").empty();
    });
  }
  for (auto& th : threads) th.join();
  CHECK(ok == 200);
  CHECK_THROWS_AS(g.complete("p", "generation"), TranscriptExhausted);
}
