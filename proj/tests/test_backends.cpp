#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "admir/agent.hpp"
#include "admir/http_backend.hpp"
#include "admir/imaging.hpp"
#include "admir/mock_backend.hpp"
#include "admir/retry.hpp"
#include "test_support.hpp"

using namespace admir;
using namespace admir::backend;

// ---------------------------------------------------------------------------
// with_retry
// ---------------------------------------------------------------------------

TEST_CASE("with_retry: always-succeeding action runs once") {
  int attempts = 0;
  const int result = with_retry([&] { ++attempts; return 42; }, RetryPolicy{}, [](auto) {});
  CHECK(result == 42);
  CHECK(attempts == 1);
}

TEST_CASE("with_retry: exhaustion after 1 + max_retries attempts") {
  int attempts = 0;
  RetryPolicy policy;
  policy.max_retries = 8;
  CHECK_THROWS_AS(with_retry(
                      [&]() -> int {
                        ++attempts;
                        throw TransportError("boom");
                      },
                      policy, [](auto) {}),
                  TransportError);
  CHECK(attempts == 9);
}

TEST_CASE("with_retry: fails twice then succeeds -> 3 attempts") {
  int attempts = 0;
  const int result = with_retry(
      [&] {
        if (++attempts <= 2) throw TransportError("flaky");
        return attempts;
      },
      RetryPolicy{.max_retries = 8}, [](auto) {});
  CHECK(result == 3);
  CHECK(attempts == 3);
}

TEST_CASE("with_retry: geometric delays 100, 200, 400 ms") {
  std::vector<long long> delays;
  int attempts = 0;
  RetryPolicy policy;
  policy.max_retries = 3;
  policy.base_delay = std::chrono::milliseconds(100);
  policy.growth = 2.0;
  CHECK_THROWS(with_retry(
      [&]() -> int {
        ++attempts;
        throw TransportError("down");
      },
      policy, [&](std::chrono::milliseconds d) { delays.push_back(d.count()); }));
  CHECK(delays == std::vector<long long>{100, 200, 400});
}

TEST_CASE("with_retry: non-retryable errors propagate immediately") {
  int attempts = 0;
  CHECK_THROWS_AS(with_retry(
                      [&]() -> int {
                        ++attempts;
                        throw AuthError("bad key");
                      },
                      RetryPolicy{.max_retries = 8}, [](auto) {}),
                  AuthError);
  CHECK(attempts == 1);
}

TEST_CASE("retry policy delay sequence is nondecreasing and capped") {
  RetryPolicy policy;
  policy.base_delay = std::chrono::milliseconds(100);
  policy.growth = 2.0;
  policy.max_delay = std::chrono::milliseconds(1000);
  long long prev = 0;
  for (int k = 0; k < 12; ++k) {
    const auto d = policy.delay_for(k).count();
    CHECK(d >= prev);
    CHECK(d <= 1000);
    prev = d;
  }
}

// ---------------------------------------------------------------------------
// Request validation and tool-call normalization
// ---------------------------------------------------------------------------

TEST_CASE("chat request needs a user message") {
  ChatRequest request;
  request.messages.push_back({ChatMessage::Kind::System, "sys"});
  CHECK_THROWS_AS(request.validate(), std::invalid_argument);
  request.messages.push_back({ChatMessage::Kind::User, "hi"});
  CHECK_NOTHROW(request.validate());
}

TEST_CASE("normalize_tool_call extracts embedded json tool calls") {
  ChatResponse response;
  response.text = "Thought: search first.\n```json\n{\"tool\": \"clip_search\", "
                  "\"arguments\": {\"query\": \"red car\"}}\n```";
  normalize_tool_call(response);
  REQUIRE(response.tool_call.has_value());
  CHECK(response.tool_call->name == "clip_search");
  CHECK(response.tool_call->arguments.at("query") == "red car");
  CHECK(response.text == "Thought: search first.");

  ChatResponse plain;
  plain.text = "no calls here {\"answer\": 3}";
  normalize_tool_call(plain);
  CHECK_FALSE(plain.tool_call.has_value());

  ChatResponse already;
  already.text = "{\"tool\": \"x\"}";
  already.tool_call = ToolCallPayload{"finish", nlohmann::json::object()};
  normalize_tool_call(already);
  CHECK(already.tool_call->name == "finish");  // native payload wins
}

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

TEST_CASE("mock: scripted controller answer") {
  MockBackend mock(MockBackend::Mode::FirstMatch, 4);
  mock.add_text_rule(ModelRole::Controller, "", "PARIS");
  const auto response = mock.chat(ChatRequest::simple(ModelRole::Controller, "", "capital?"));
  CHECK(response.text == "PARIS");
}

TEST_CASE("mock: empty script is an unmatched-request error") {
  MockBackend mock(MockBackend::Mode::FirstMatch, 4);
  CHECK_THROWS_AS(mock.chat(ChatRequest::simple(ModelRole::Controller, "", "anything")),
                  MalformedResponse);
}

TEST_CASE("mock: ordered mode consumes rules in order and rejects mismatches") {
  MockBackend mock(MockBackend::Mode::Ordered, 4);
  mock.add_text_rule(ModelRole::Controller, "first", "one");
  mock.add_text_rule(ModelRole::Captioner, "", "two");
  CHECK(mock.chat(ChatRequest::simple(ModelRole::Controller, "", "the first call")).text == "one");
  CHECK(mock.chat(ChatRequest::simple(ModelRole::Captioner, "", "x")).text == "two");
  CHECK(mock.rules_consumed() == 2);
  CHECK_THROWS_AS(mock.chat(ChatRequest::simple(ModelRole::Captioner, "", "x")),
                  MalformedResponse);

  MockBackend strict(MockBackend::Mode::Ordered, 4);
  strict.add_text_rule(ModelRole::Judge, "", "never");
  CHECK_THROWS_AS(strict.chat(ChatRequest::simple(ModelRole::Controller, "", "x")),
                  MalformedResponse);
}

TEST_CASE("mock: determinism: identical request sequence, identical responses") {
  auto make = [] {
    MockBackend mock(MockBackend::Mode::FirstMatch, 4);
    mock.add_text_rule(ModelRole::Controller, "a", "A");
    mock.add_text_rule(ModelRole::Controller, "", "B");
    return mock;
  };
  auto m1 = make();
  auto m2 = make();
  for (const char* content : {"a then b", "plain", "a", "zzz"}) {
    const auto r1 = m1.chat(ChatRequest::simple(ModelRole::Controller, "", content));
    const auto r2 = m2.chat(ChatRequest::simple(ModelRole::Controller, "", content));
    CHECK(r1.text == r2.text);
  }
}

TEST_CASE("mock: embeddings are table-driven, normalized, dimension-checked") {
  MockBackend mock(MockBackend::Mode::FirstMatch, 3);
  mock.set_embedding("a", {2.f, 0.f, 0.f});
  const auto vectors = mock.embed({"a"});
  REQUIRE(vectors.size() == 1);
  CHECK(vectors[0].size() == 3);
  CHECK(vectors[0][0] == doctest::Approx(1.0));  // normalized at the boundary
  CHECK(l2_norm(vectors[0]) == doctest::Approx(1.0).epsilon(1e-6));

  // identical texts embed identically
  mock.set_embedding("x", {1.f, 1.f, 0.f});
  const auto two = mock.embed({"x", "x"});
  CHECK(two[0] == two[1]);
  CHECK(cosine(two[0], two[1]) == doctest::Approx(1.0).epsilon(1e-6));

  // missing table entry is an error unless the hashed fallback is enabled
  CHECK_THROWS_AS(mock.embed({"unknown"}), MalformedResponse);
  mock.set_embedding_fallback(MockBackend::EmbeddingFallback::Hashed);
  const auto hashed = mock.embed({"unknown"});
  CHECK(hashed[0].size() == 3);

  // wrong width in the table surfaces as DimensionMismatch
  mock.set_embedding("bad", {1.f, 2.f});
  CHECK_THROWS_AS(mock.embed({"bad"}), DimensionMismatch);
}

TEST_CASE("mock: embed validates inputs") {
  MockBackend mock(MockBackend::Mode::FirstMatch, 3);
  CHECK_THROWS_AS(mock.embed({}), std::invalid_argument);
  CHECK_THROWS_AS(mock.embed({"  "}), std::invalid_argument);
}

TEST_CASE("mock: script file round trip") {
  testing::ScratchDir scratch("mockfile");
  const auto path = scratch.path() / "script.json";
  write_file(path, R"({
    "mode": "first_match",
    "embedding_dim": 4,
    "embedding_fallback": "hashed",
    "embeddings": {"hello": [1, 0, 0, 0]},
    "rules": [
      {"match": {"role": "controller", "contains": "ping"},
       "response": {"text": "pong"}},
      {"match": {"role": "controller"},
       "response": {"text": "go", "tool": "finish", "arguments": {"answer": "done"}}}
    ]
  })");
  auto mock = MockBackend::from_file(path);
  CHECK(mock.chat(ChatRequest::simple(ModelRole::Controller, "", "ping me")).text == "pong");
  const auto with_tool = mock.chat(ChatRequest::simple(ModelRole::Controller, "", "other"));
  REQUIRE(with_tool.tool_call.has_value());
  CHECK(with_tool.tool_call->name == "finish");
  CHECK(mock.embed({"hello"})[0][0] == doctest::Approx(1.0));
  CHECK(mock.embed({"fallback text"})[0].size() == 4);
}

TEST_CASE("fault injection: backend-level retry heals transient chat failures") {
  std::atomic<int> attempts{0};
  testing::FnBackend flaky(
      [&](const ChatRequest&) -> ChatResponse {
        if (++attempts <= 2) throw TransportError("transient");
        return {"recovered", "stop", std::nullopt};
      },
      4, RetryPolicy{.max_retries = 8});
  const auto response = flaky.chat(ChatRequest::simple(ModelRole::Controller, "", "q"));
  CHECK(response.text == "recovered");
  CHECK(attempts.load() == 3);
}

// ---------------------------------------------------------------------------
// HTTP adapter against a local server
// ---------------------------------------------------------------------------

namespace {

struct LocalServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  HttpBackendConfig config() const {
    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.api_key = "test-key";
    cfg.embedding_dim = 3;
    cfg.retry.max_retries = 3;
    cfg.retry.base_delay = std::chrono::milliseconds(1);
    cfg.timeout_secs = 5;
    return cfg;
  }
};

}  // namespace

TEST_CASE("http backend: chat completions wire shape") {
  LocalServer local;
  nlohmann::json seen_body;
  std::string seen_auth;
  local.server.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      seen_body = nlohmann::json::parse(req.body);
                      seen_auth = req.get_header_value("Authorization");
                      nlohmann::json reply = {
                          {"choices",
                           {{{"finish_reason", "stop"},
                             {"message",
                              {{"content", "hello"},
                               {"tool_calls",
                                {{{"function",
                                   {{"name", "clip_search"},
                                    {"arguments", "{\"query\": \"dog\"}"}}}}}}}}}}}};
                      res.set_content(reply.dump(), "application/json");
                    });
  local.start();

  HttpBackend http(local.config());
  ChatRequest request = ChatRequest::simple(ModelRole::Expert, "sys", "user text");
  const auto response = http.chat(request);

  CHECK(seen_auth == "Bearer test-key");
  CHECK(seen_body["model"] == "o1");
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][1]["content"] == "user text");
  CHECK(response.text == "hello");
  REQUIRE(response.tool_call.has_value());
  CHECK(response.tool_call->name == "clip_search");
  CHECK(response.tool_call->arguments["query"] == "dog");
}

TEST_CASE("http backend: image attachments ride as data urls") {
  testing::ScratchDir scratch("http_img");
  const auto frame = scratch.path() / "0.png";
  imaging::save_image(imaging::Image::solid(2, 2, 1, 2, 3), frame);

  LocalServer local;
  nlohmann::json seen_body;
  local.server.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      seen_body = nlohmann::json::parse(req.body);
                      res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})",
                                      "application/json");
                    });
  local.start();

  HttpBackend http(local.config());
  ChatRequest request = ChatRequest::simple(ModelRole::Captioner, "", "describe");
  request.images.push_back({frame.string(), "high"});
  CHECK(http.chat(request).text == "ok");

  const auto& parts = seen_body["messages"][0]["content"];
  REQUIRE(parts.is_array());
  CHECK(parts[0]["type"] == "text");
  CHECK(parts[1]["type"] == "image_url");
  const std::string url = parts[1]["image_url"]["url"];
  CHECK(url.rfind("data:image/png;base64,", 0) == 0);
  CHECK(parts[1]["image_url"]["detail"] == "high");
}

TEST_CASE("http backend: 5xx retries then succeeds; 401 fails fast") {
  LocalServer local;
  std::atomic<int> hits{0};
  local.server.Post("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      if (++hits <= 2) {
                        res.status = 503;
                        return;
                      }
                      res.set_content(R"({"choices":[{"message":{"content":"up again"}}]})",
                                      "application/json");
                    });
  local.server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 401;
  });
  local.start();

  HttpBackend http(local.config());
  CHECK(http.chat(ChatRequest::simple(ModelRole::Controller, "", "q")).text == "up again");
  CHECK(hits.load() == 3);
  CHECK_THROWS_AS(http.embed({"x"}), AuthError);
}

TEST_CASE("http backend: embeddings parsed and normalized") {
  LocalServer local;
  local.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["data"] = nlohmann::json::array();
    for (size_t i = 0; i < body["input"].size(); ++i)
      reply["data"].push_back({{"embedding", {2.0, 0.0, 0.0}}});
    res.set_content(reply.dump(), "application/json");
  });
  local.start();

  HttpBackend http(local.config());
  const auto vectors = http.embed({"a", "b"});
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0][0] == doctest::Approx(1.0));
  CHECK(l2_norm(vectors[1]) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("http backend: profile file overrides") {
  testing::ScratchDir scratch("http_cfg");
  const auto path = scratch.path() / "profile.json";
  write_file(path, R"({
    "base_url": "http://localhost:1",
    "embedding_model": "tiny-embed",
    "embedding_dim": 16,
    "models": {"expert": "mega-brain", "refiner": "nano"},
    "retry": {"max_retries": 2, "base_delay_ms": 5, "growth": 3.0}
  })");
  const auto config = HttpBackendConfig::from_file(path);
  CHECK(config.base_url == "http://localhost:1");
  CHECK(config.embedding_model == "tiny-embed");
  CHECK(config.embedding_dim == 16);
  CHECK(config.model_for(ModelRole::Expert) == "mega-brain");
  CHECK(config.model_for(ModelRole::Refiner) == "nano");
  CHECK(config.model_for(ModelRole::Controller) == "gpt-4o");  // default kept
  CHECK(config.retry.max_retries == 2);
  CHECK(config.retry.growth == 3.0);

  write_file(scratch.path() / "bad.json", "{nope");
  CHECK_THROWS_AS(HttpBackendConfig::from_file(scratch.path() / "bad.json"), InputError);
}

TEST_CASE("http backend: full session loop against a local completions server") {
  // A minimal chat-completions endpoint that always finishes with a grounded
  // answer; exercises the live wire path through the whole agent stack.
  LocalServer local;
  local.server.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      const auto body = nlohmann::json::parse(req.body);
                      std::string user;
                      for (const auto& message : body["messages"])
                        if (message["content"].is_string())
                          user += message["content"].get<std::string>();
                      nlohmann::json reply;
                      std::string content;
                      if (user.find("VISUAL LOGS") != std::string::npos) {
                        content = R"({"narrative_reconstruction": "An ad about a Zephyr bike.",
                                      "genre": "promo", "inferred_objects": ["Zephyr bike"],
                                      "explicit_text_found": ["ZEPHYR"],
                                      "audio_visual_mismatch": "", "final_answer": ""})";
                      } else if (user.find("compressing an answer") != std::string::npos) {
                        content = "A Zephyr bike.";
                      } else {
                        content = "Thought: the logs already name it.\n"
                                  "{\"tool\": \"finish\", \"arguments\": "
                                  "{\"answer\": \"A Zephyr bike is advertised.\"}}";
                      }
                      reply["choices"] = {{{"finish_reason", "stop"},
                                           {"message", {{"content", content}}}}};
                      res.set_content(reply.dump(), "application/json");
                    });
  local.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["data"] = nlohmann::json::array();
    for (size_t i = 0; i < body["input"].size(); ++i) {
      const auto v = admir::testing::FnBackend::unit_vector(body["input"][i].get<std::string>(), 3);
      reply["data"].push_back({{"embedding", v}});
    }
    res.set_content(reply.dump(), "application/json");
  });
  local.start();

  HttpBackend http(local.config());

  VideoDatabase db;
  db.meta.video_id = "live";
  db.meta.duration = 10;
  for (int i = 0; i < 2; ++i) {
    ClipRecord clip;
    clip.index = i;
    clip.start = i * 5.0;
    clip.end = (i + 1) * 5.0;
    clip.caption = "a bike glides through traffic";
    clip.embedding = admir::testing::FnBackend::unit_vector("c" + std::to_string(i), 3);
    db.clips.push_back(clip);
  }

  const auto lib = admir::PromptLibrary::load(ADMIR_PROMPTS_DIR);
  const auto result = admir::agent::run_session(db, "what is advertised?", http, lib, {});
  CHECK(result.verified());
  CHECK(result.answer == "A Zephyr bike.");
  CHECK(result.trace.footer.chat_calls >= 3);  // browse, controller, refine
}

TEST_CASE("default embedding width is 1024 unless configured otherwise") {
  MockBackend mock;
  CHECK(mock.embedding_dim() == 1024);
  mock.set_embedding_fallback(MockBackend::EmbeddingFallback::Hashed);
  const auto v = mock.embed({"anything"});
  CHECK(v[0].size() == 1024);
  CHECK(l2_norm(v[0]) == doctest::Approx(1.0).epsilon(1e-6));

  HttpBackendConfig config;
  CHECK(config.embedding_dim == 1024);
}
