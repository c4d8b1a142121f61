// VQA backends: config validation, presets, transcripts, the oracle and
// replay backends, the rate limiter, and both HTTP protocols against a local
// in-process server.
#include <doctest.h>

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "thermovqa/backend.hpp"
#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"
#include "thermovqa/synth.hpp"
#include "thermovqa/util.hpp"

#include "test_support.hpp"

using namespace thermovqa;

namespace {

constexpr const char* kTokenVar = "THERMOVQA_TEST_TOKEN";

struct EnvToken {
    explicit EnvToken(const char* value) { ::setenv(kTokenVar, value, 1); }
    ~EnvToken() { ::unsetenv(kTokenVar); }
};

// In-process HTTP server; register handlers before start().
struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }

    std::string url(const std::string& path) const {
        return "http://127.0.0.1:" + std::to_string(port) + path;
    }
};

BackendConfig chat_config(const std::string& endpoint) {
    BackendConfig config;
    config.id = "chat-under-test";
    config.kind = BackendKind::HttpChat;
    config.endpoint = endpoint;
    config.model_name = "test-model";
    config.auth_env_var = kTokenVar;
    config.max_retries = 2;
    config.retry_base_delay_s = 0.01;
    config.requests_per_minute = 0;
    config.timeout_s = 5.0;
    return config;
}

BackendConfig prediction_config(const std::string& endpoint) {
    BackendConfig config = chat_config(endpoint);
    config.id = "prediction-under-test";
    config.kind = BackendKind::HttpPrediction;
    config.poll_interval_s = 0.02;
    return config;
}

QueryRequest sample_request() {
    QueryRequest request;
    request.prompt_text = "Is the attached image a normal battery? a) Yes b) No";
    request.image_png = {0x89, 0x50, 0x4e, 0x47, 0x01, 0x02, 0x03, 0x04};
    request.prompt_id = 1;
    request.image_id = "img-000";
    request.trial_index = 0;
    return request;
}

std::string chat_answer(const std::string& text) {
    nlohmann::json body = {
        {"choices",
         nlohmann::json::array(
             {{{"message", {{"role", "assistant"}, {"content", text}}}}})}};
    return body.dump();
}

}  // namespace

TEST_CASE("backend kind strings round-trip") {
    for (BackendKind k : {BackendKind::HttpChat, BackendKind::HttpPrediction,
                          BackendKind::Oracle, BackendKind::Replay}) {
        CHECK(backend_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(backend_kind_from_string("grpc"), ConfigError);
}

TEST_CASE("backend config validation") {
    BackendConfig config = chat_config("http://example.invalid/v1");
    CHECK_NOTHROW(config.validate());

    BackendConfig bad = config;
    bad.id.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.endpoint.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.auth_env_var.clear();
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.sampling_temperature = 2.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.sampling_temperature = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.sampling_temperature = 0.0;
    CHECK_NOTHROW(bad.validate());

    bad = config;
    bad.timeout_s = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.max_retries = -1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.requests_per_minute = -5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.retry_base_delay_s = -0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = config;
    bad.poll_interval_s = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    BackendConfig replay;
    replay.id = "replay";
    replay.kind = BackendKind::Replay;
    CHECK_THROWS_AS(replay.validate(), ConfigError);  // no transcript
    replay.transcript_path = "t.jsonl";
    CHECK_NOTHROW(replay.validate());

    BackendConfig oracle;
    oracle.id = "oracle";
    oracle.kind = BackendKind::Oracle;
    CHECK_NOTHROW(oracle.validate());  // no endpoint needed
}

TEST_CASE("the three service presets are wired correctly") {
    std::vector<BackendConfig> presets = preset_backends();
    REQUIRE(presets.size() == 3);

    BackendConfig chatgpt = preset_backend("chatgpt-4o");
    CHECK(chatgpt.kind == BackendKind::HttpChat);
    CHECK(chatgpt.endpoint == "https://api.openai.com/v1/chat/completions");
    CHECK(chatgpt.model_name == "gpt-4o");
    CHECK(chatgpt.auth_env_var == "OPENAI_API_KEY");
    CHECK_FALSE(chatgpt.sampling_temperature.has_value());

    BackendConfig llava = preset_backend("llava-13b");
    CHECK(llava.kind == BackendKind::HttpPrediction);
    CHECK(llava.endpoint ==
          "https://api.replicate.com/v1/models/yorickvp/llava-13b/predictions");
    CHECK(llava.auth_env_var == "REPLICATE_API_TOKEN");
    REQUIRE(llava.sampling_temperature.has_value());
    CHECK(*llava.sampling_temperature == doctest::Approx(0.1));

    BackendConfig blip = preset_backend("blip-2");
    CHECK(blip.kind == BackendKind::HttpPrediction);
    CHECK(blip.endpoint ==
          "https://api.replicate.com/v1/models/andreasjansson/blip-2/predictions");
    CHECK(blip.auth_env_var == "REPLICATE_API_TOKEN");

    CHECK_THROWS_AS(preset_backend("gpt-5"), ConfigError);
}

TEST_CASE("transcripts round-trip and reject corrupt rows") {
    testsupport::TempDir dir;
    std::vector<TranscriptEntry> entries = {
        {"backend-a", 1, "img-000", 0, "a) Yes"},
        {"backend-a", 1, "img-000", 1, "b) No"},
        {"backend-b", 5, "img-033", 2, "The battery looks fine. Yes."},
    };
    write_transcript(entries, dir / "t.jsonl");
    std::vector<TranscriptEntry> back = read_transcript(dir / "t.jsonl");
    REQUIRE(back.size() == entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        CHECK(back[i].backend_id == entries[i].backend_id);
        CHECK(back[i].prompt_id == entries[i].prompt_id);
        CHECK(back[i].image_id == entries[i].image_id);
        CHECK(back[i].trial == entries[i].trial);
        CHECK(back[i].text == entries[i].text);
    }

    write_text_file(dir / "bad.jsonl", "{\"backend_id\":\"x\"}\n");
    CHECK_THROWS_AS(read_transcript(dir / "bad.jsonl"), ConfigError);
    CHECK_THROWS_AS(read_transcript(dir / "missing.jsonl"), ConfigError);
}

TEST_CASE("the oracle backend answers from the detector and caches by id") {
    BackendConfig config;
    config.id = "oracle";
    config.kind = BackendKind::Oracle;
    std::unique_ptr<Backend> backend = make_backend(config);

    const auto& scenes = testsupport::sample_scenes();
    const char* expected[] = {"a) Yes", "b) No", "b) No", "b) No"};
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        QueryRequest request;
        request.image_png = encode_png(scenes[i].image);
        request.image_id = "scene-" + std::to_string(i);
        request.prompt_id = 1;
        RawResponse response = backend->query(request);
        CHECK(response.text == expected[i]);
        CHECK(response.backend_id == "oracle");
        CHECK(response.attempt_count == 1);
    }

    // Cached by image id: the same id returns the first verdict even when the
    // bytes now show a different scene.
    QueryRequest swapped;
    swapped.image_png = encode_png(scenes[1].image);  // overheating bytes
    swapped.image_id = "scene-0";                     // cached as normal
    CHECK(backend->query(swapped).text == "a) Yes");
}

TEST_CASE("the replay backend serves canned answers by exact key") {
    testsupport::TempDir dir;
    write_transcript(
        {
            {"replay-x", 2, "img-000", 0, "a) Yes"},
            {"replay-x", 2, "img-000", 1, "b) No"},
            {"other-backend", 2, "img-000", 0, "b) No"},
        },
        dir / "t.jsonl");

    BackendConfig config;
    config.id = "replay-x";
    config.kind = BackendKind::Replay;
    config.transcript_path = dir / "t.jsonl";
    std::unique_ptr<Backend> backend = make_backend(config);

    QueryRequest request;
    request.prompt_id = 2;
    request.image_id = "img-000";
    request.trial_index = 0;
    CHECK(backend->query(request).text == "a) Yes");
    request.trial_index = 1;
    CHECK(backend->query(request).text == "b) No");

    request.trial_index = 2;  // never recorded
    CHECK_THROWS_AS(backend->query(request), ConfigError);
    request.trial_index = 0;
    request.prompt_id = 3;  // wrong prompt
    CHECK_THROWS_AS(backend->query(request), ConfigError);

    BackendConfig missing = config;
    missing.transcript_path = dir / "absent.jsonl";
    CHECK_THROWS_AS(make_backend(missing), ConfigError);
}

TEST_CASE("rate limiter enforces a sliding window") {
    RateLimiter limiter(3, 0.25);
    auto start = std::chrono::steady_clock::now();
    limiter.acquire();
    limiter.acquire();
    limiter.acquire();
    double after_three =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    CHECK(after_three < 0.2);  // first three pass immediately

    limiter.acquire();  // must wait for the window to roll
    double after_four =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    CHECK(after_four >= 0.2);

    RateLimiter unlimited(0, 0.25);
    auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 100; ++i) unlimited.acquire();
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count() < 0.1);
}

TEST_CASE("http chat backend sends the expected request shape") {
    EnvToken token("testtoken");
    TestServer server;
    nlohmann::json seen_body;
    std::string seen_auth, seen_content_type;
    server.server.Post("/v1/chat", [&](const httplib::Request& req,
                                       httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_content_type = req.get_header_value("Content-Type");
        seen_body = nlohmann::json::parse(req.body);
        res.set_content(chat_answer("a) Yes, it looks normal."),
                        "application/json");
    });
    server.start();

    BackendConfig config = chat_config(server.url("/v1/chat"));
    config.sampling_temperature = 0.3;
    std::unique_ptr<Backend> backend = make_backend(config);
    QueryRequest request = sample_request();
    RawResponse response = backend->query(request);

    CHECK(response.text == "a) Yes, it looks normal.");
    CHECK(response.attempt_count == 1);
    CHECK(response.backend_id == "chat-under-test");
    CHECK(response.latency_s >= 0.0);

    CHECK(seen_auth == "Bearer testtoken");
    CHECK(seen_content_type == "application/json");
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("temperature").get<double>() == doctest::Approx(0.3));
    REQUIRE(seen_body.at("messages").size() == 1);
    const nlohmann::json& message = seen_body.at("messages").at(0);
    CHECK(message.at("role") == "user");
    REQUIRE(message.at("content").size() == 2);
    CHECK(message.at("content").at(0).at("type") == "text");
    CHECK(message.at("content").at(0).at("text") == request.prompt_text);
    CHECK(message.at("content").at(1).at("type") == "image_url");
    std::string url =
        message.at("content").at(1).at("image_url").at("url").get<std::string>();
    CHECK(url == "data:image/png;base64," + base64_encode(request.image_png));
}

TEST_CASE("http chat backend omits temperature when unset") {
    EnvToken token("testtoken");
    TestServer server;
    nlohmann::json seen_body;
    server.server.Post("/v1/chat",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           seen_body = nlohmann::json::parse(req.body);
                           res.set_content(chat_answer("b) No"),
                                           "application/json");
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(chat_config(server.url("/v1/chat")));
    CHECK(backend->query(sample_request()).text == "b) No");
    CHECK_FALSE(seen_body.contains("temperature"));
}

TEST_CASE("http chat backend retries 5xx with backoff, then succeeds") {
    EnvToken token("testtoken");
    TestServer server;
    std::atomic<int> hits{0};
    server.server.Post("/v1/chat",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++hits <= 2) {
                               res.status = 500;
                               res.set_content("busy", "text/plain");
                           } else {
                               res.set_content(chat_answer("a) Yes"),
                                               "application/json");
                           }
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(chat_config(server.url("/v1/chat")));  // max_retries 2
    RawResponse response = backend->query(sample_request());
    CHECK(response.text == "a) Yes");
    CHECK(response.attempt_count == 3);
    CHECK(hits.load() == 3);
}

TEST_CASE("http chat backend gives up after exhausting retries") {
    EnvToken token("testtoken");
    TestServer server;
    std::atomic<int> hits{0};
    server.server.Post("/v1/chat",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++hits;
                           res.status = 503;
                           res.set_content("overloaded", "text/plain");
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(chat_config(server.url("/v1/chat")));  // max_retries 2
    CHECK_THROWS_AS(backend->query(sample_request()), TransportError);
    CHECK(hits.load() == 3);  // initial attempt + 2 retries
}

TEST_CASE("http 429 is retryable but other 4xx fail fast") {
    EnvToken token("testtoken");
    TestServer server;
    std::atomic<int> too_many_hits{0}, not_found_hits{0};
    server.server.Post("/v1/limited",
                       [&](const httplib::Request&, httplib::Response& res) {
                           if (++too_many_hits <= 1) {
                               res.status = 429;
                               res.set_content("slow down", "text/plain");
                           } else {
                               res.set_content(chat_answer("a) Yes"),
                                               "application/json");
                           }
                       });
    server.server.Post("/v1/missing",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++not_found_hits;
                           res.status = 404;
                           res.set_content("no such model", "text/plain");
                       });
    server.start();

    std::unique_ptr<Backend> retried =
        make_backend(chat_config(server.url("/v1/limited")));
    CHECK(retried->query(sample_request()).attempt_count == 2);
    CHECK(too_many_hits.load() == 2);

    std::unique_ptr<Backend> fatal =
        make_backend(chat_config(server.url("/v1/missing")));
    CHECK_THROWS_AS(fatal->query(sample_request()), ConfigError);
    CHECK(not_found_hits.load() == 1);  // no retry on 404
}

TEST_CASE("http chat backend rejects unusable responses") {
    EnvToken token("testtoken");
    TestServer server;
    server.server.Post("/v1/empty",
                       [&](const httplib::Request&, httplib::Response& res) {
                           res.set_content(chat_answer(""), "application/json");
                       });
    server.server.Post("/v1/garbled",
                       [&](const httplib::Request&, httplib::Response& res) {
                           res.set_content("not json at all", "application/json");
                       });
    server.server.Post("/v1/shapeless",
                       [&](const httplib::Request&, httplib::Response& res) {
                           res.set_content("{\"unexpected\":true}",
                                           "application/json");
                       });
    server.start();

    for (const char* path : {"/v1/empty", "/v1/garbled", "/v1/shapeless"}) {
        std::unique_ptr<Backend> backend = make_backend(chat_config(server.url(path)));
        CHECK_THROWS_AS(backend->query(sample_request()), TransportError);
    }
}

TEST_CASE("a missing auth variable fails before any network traffic") {
    ::unsetenv(kTokenVar);
    TestServer server;
    std::atomic<int> hits{0};
    server.server.Post("/v1/chat",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++hits;
                           res.set_content(chat_answer("a) Yes"),
                                           "application/json");
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(chat_config(server.url("/v1/chat")));
    CHECK_THROWS_AS(backend->query(sample_request()), ConfigError);
    CHECK(hits.load() == 0);

    ::setenv(kTokenVar, "", 1);  // present but empty is just as unusable
    CHECK_THROWS_AS(backend->query(sample_request()), ConfigError);
    CHECK(hits.load() == 0);
    ::unsetenv(kTokenVar);
}

TEST_CASE("an unreachable endpoint raises TransportError") {
    EnvToken token("testtoken");
    BackendConfig config = chat_config("http://127.0.0.1:1/v1/chat");
    config.max_retries = 0;
    config.timeout_s = 2.0;
    std::unique_ptr<Backend> backend = make_backend(config);
    CHECK_THROWS_AS(backend->query(sample_request()), TransportError);
}

TEST_CASE("http prediction backend handles an immediate success") {
    EnvToken token("testtoken");
    TestServer server;
    nlohmann::json seen_body;
    server.server.Post("/v1/predictions",
                       [&](const httplib::Request& req, httplib::Response& res) {
                           seen_body = nlohmann::json::parse(req.body);
                           nlohmann::json body = {{"status", "succeeded"},
                                                  {"output", "b) No"}};
                           res.set_content(body.dump(), "application/json");
                       });
    server.start();

    BackendConfig config = prediction_config(server.url("/v1/predictions"));
    config.sampling_temperature = 0.1;
    std::unique_ptr<Backend> backend = make_backend(config);
    QueryRequest request = sample_request();
    RawResponse response = backend->query(request);

    CHECK(response.text == "b) No");
    CHECK(response.attempt_count == 1);
    CHECK(seen_body.at("input").at("prompt") == request.prompt_text);
    CHECK(seen_body.at("input").at("image").get<std::string>() ==
          "data:image/png;base64," + base64_encode(request.image_png));
    CHECK(seen_body.at("input").at("temperature").get<double>() ==
          doctest::Approx(0.1));
}

TEST_CASE("http prediction backend polls until success and joins arrays") {
    EnvToken token("testtoken");
    TestServer server;
    std::atomic<int> polls{0};
    server.server.Post(
        "/v1/predictions",
        [&](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body = {
                {"status", "processing"},
                {"urls", {{"get", server.url("/v1/predictions/ab12")}}}};
            res.set_content(body.dump(), "application/json");
        });
    server.server.Get(
        "/v1/predictions/ab12",
        [&](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body;
            if (++polls < 3) {
                body = {{"status", "processing"},
                        {"urls", {{"get", server.url("/v1/predictions/ab12")}}}};
            } else {
                body = {{"status", "succeeded"},
                        {"output", nlohmann::json::array({"b) ", "No", ""})}};
            }
            res.set_content(body.dump(), "application/json");
        });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(prediction_config(server.url("/v1/predictions")));
    RawResponse response = backend->query(sample_request());
    CHECK(response.text == "b) No");
    CHECK(polls.load() == 3);
    CHECK(response.attempt_count == 4);  // create + three polls
}

TEST_CASE("http prediction failures are terminal") {
    EnvToken token("testtoken");
    TestServer server;
    std::atomic<int> creates{0};
    server.server.Post("/v1/predictions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           ++creates;
                           nlohmann::json body = {{"status", "failed"},
                                                  {"error", "CUDA OOM"}};
                           res.set_content(body.dump(), "application/json");
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(prediction_config(server.url("/v1/predictions")));
    try {
        backend->query(sample_request());
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("CUDA OOM") != std::string::npos);
    }
    CHECK(creates.load() == 1);  // a failed prediction is not retried
}

TEST_CASE("http prediction respects the overall deadline while polling") {
    EnvToken token("testtoken");
    TestServer server;
    server.server.Post(
        "/v1/predictions",
        [&](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body = {
                {"status", "processing"},
                {"urls", {{"get", server.url("/v1/predictions/slow")}}}};
            res.set_content(body.dump(), "application/json");
        });
    server.server.Get(
        "/v1/predictions/slow",
        [&](const httplib::Request&, httplib::Response& res) {
            nlohmann::json body = {
                {"status", "processing"},
                {"urls", {{"get", server.url("/v1/predictions/slow")}}}};
            res.set_content(body.dump(), "application/json");
        });
    server.start();

    BackendConfig config = prediction_config(server.url("/v1/predictions"));
    config.timeout_s = 0.3;
    std::unique_ptr<Backend> backend = make_backend(config);
    try {
        backend->query(sample_request());
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("did not finish") != std::string::npos);
    }
}

TEST_CASE("http prediction requires a status URL while processing") {
    EnvToken token("testtoken");
    TestServer server;
    server.server.Post("/v1/predictions",
                       [&](const httplib::Request&, httplib::Response& res) {
                           nlohmann::json body = {{"status", "processing"}};
                           res.set_content(body.dump(), "application/json");
                       });
    server.start();

    std::unique_ptr<Backend> backend =
        make_backend(prediction_config(server.url("/v1/predictions")));
    try {
        backend->query(sample_request());
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(std::string(e.what()).find("no status URL") != std::string::npos);
    }
}
