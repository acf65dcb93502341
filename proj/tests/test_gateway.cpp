#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddc/gateway.hpp"
#include "ddc/trace.hpp"
#include "mock_server.hpp"

namespace {

ddc::EndpointConfig fast_config(const std::string& base_url) {
    ddc::EndpointConfig cfg;
    cfg.base_url = base_url;
    cfg.top_logprobs = 3;
    cfg.timeout_sec = 5;
    cfg.retry_count = 2;
    cfg.retry_backoff_ms = 10;
    return cfg;
}

std::vector<ddc::TokenEvent> drain(ddc::PathStream& stream) {
    std::vector<ddc::TokenEvent> events;
    while (auto ev = stream.next()) events.push_back(*ev);
    return events;
}

}  // namespace

TEST_CASE("sse parser reassembles blocks across feeds and line endings") {
    ddc::detail::SseParser p;
    auto none = p.feed("data: {\"a\"", 10);
    REQUIRE(none.empty());
    auto one = p.feed(":1}\n\n", 5);
    REQUIRE(one.size() == 1);
    REQUIRE(one[0] == "{\"a\":1}");

    const std::string crlf = "data: x\r\ndata: y\r\n\r\ndata: z\n\n";
    auto two = p.feed(crlf.data(), crlf.size());
    REQUIRE(two.size() == 2);
    REQUIRE(two[0] == "x\ny");  // multi-line data joins with newline
    REQUIRE(two[1] == "z");

    const std::string noise = ": keepalive\n\nevent: ping\n\n";
    REQUIRE(p.feed(noise.data(), noise.size()).empty());
}

TEST_CASE("completions chunks parse into ordered logprob vectors") {
    auto chunk = nlohmann::json::parse(R"({
        "choices": [{
            "text": "ab",
            "logprobs": {
                "tokens": ["a", "b"],
                "token_logprobs": [-0.5, -0.7],
                "top_logprobs": [{"a": -0.5, "x": -2.0}, {"b": -0.7, "y": -1.0}]
            }
        }]
    })");
    auto toks = ddc::detail::parse_stream_chunk(chunk);
    REQUIRE(toks.size() == 2);
    REQUIRE(toks[0].text == "a");
    REQUIRE(toks[0].top_logprobs == std::vector<double>{-0.5, -2.0});
    REQUIRE(toks[1].top_logprobs == std::vector<double>{-0.7, -1.0});
}

TEST_CASE("completions chunks fall back to token_logprobs when no map present") {
    auto chunk = nlohmann::json::parse(R"({
        "choices": [{
            "text": "a",
            "logprobs": {"tokens": ["a"], "token_logprobs": [-0.25]}
        }]
    })");
    auto toks = ddc::detail::parse_stream_chunk(chunk);
    REQUIRE(toks.size() == 1);
    REQUIRE(toks[0].top_logprobs == std::vector<double>{-0.25});
}

TEST_CASE("chat chunks parse content entries") {
    auto chunk = nlohmann::json::parse(R"({
        "choices": [{
            "delta": {"content": "hi"},
            "logprobs": {"content": [
                {"token": "hi", "logprob": -0.3,
                 "top_logprobs": [{"token": "hi", "logprob": -0.3},
                                   {"token": "yo", "logprob": -1.5}]}
            ]}
        }]
    })");
    auto toks = ddc::detail::parse_stream_chunk(chunk);
    REQUIRE(toks.size() == 1);
    REQUIRE(toks[0].text == "hi");
    REQUIRE(toks[0].top_logprobs == std::vector<double>{-0.3, -1.5});
}

TEST_CASE("token text without logprobs is a capability error") {
    auto completions = nlohmann::json::parse(R"({"choices": [{"text": "a"}]})");
    REQUIRE_THROWS_AS(ddc::detail::parse_stream_chunk(completions), ddc::ConfigError);
    auto chat = nlohmann::json::parse(R"({"choices": [{"delta": {"content": "a"}}]})");
    REQUIRE_THROWS_AS(ddc::detail::parse_stream_chunk(chat), ddc::ConfigError);
    // Role preambles and finish chunks carry no text and pass through.
    auto preamble = nlohmann::json::parse(R"({"choices": [{"delta": {"role": "assistant"}}]})");
    REQUIRE(ddc::detail::parse_stream_chunk(preamble).empty());
    auto finish =
        nlohmann::json::parse(R"({"choices": [{"text": "", "finish_reason": "stop"}]})");
    REQUIRE(ddc::detail::parse_stream_chunk(finish).empty());
}

TEST_CASE("prompt template substitution") {
    REQUIRE(ddc::detail::apply_template("{prompt}", "x") == "x");
    REQUIRE(ddc::detail::apply_template("Q: {prompt}\nA:", "why") == "Q: why\nA:");
    // No placeholder: template becomes a prefix.
    REQUIRE(ddc::detail::apply_template("Solve: ", "x") == "Solve: x");
}

TEST_CASE("endpoint config validation and environment fallback") {
    ddc::EndpointConfig cfg;
    REQUIRE_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("DDC_BASE_URL"));

    ::setenv("DDC_BASE_URL", "http://example.test:1", 1);
    ::setenv("DDC_API_KEY", "sk-env-secret", 1);
    cfg.resolve_env();
    REQUIRE(cfg.base_url == "http://example.test:1");
    REQUIRE(cfg.api_key == "sk-env-secret");

    // Explicit settings take precedence over the environment.
    ddc::EndpointConfig explicit_cfg;
    explicit_cfg.base_url = "http://other.test:1";
    explicit_cfg.api_key = "sk-flagless";
    explicit_cfg.resolve_env();
    REQUIRE(explicit_cfg.base_url == "http://other.test:1");
    REQUIRE(explicit_cfg.api_key == "sk-flagless");
    ::unsetenv("DDC_BASE_URL");
    ::unsetenv("DDC_API_KEY");
}

TEST_CASE("streams a full completion with strictly increasing positions") {
    mock::SseServer server(mock::simple_stream(12, 3));
    ddc::HttpPathStream stream(fast_config(server.base_url()), "what is 6*7?");
    auto events = drain(stream);
    REQUIRE(events.size() == 12);
    for (std::size_t i = 0; i < events.size(); ++i) {
        REQUIRE(events[i].position == i);
        REQUIRE(events[i].top_logprobs.size() == 3);
        REQUIRE(std::is_sorted(events[i].top_logprobs.rbegin(),
                               events[i].top_logprobs.rend()));
    }
    REQUIRE(stream.final_text() == "t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11 ");
    // A finished stream keeps returning nullopt.
    REQUIRE_FALSE(stream.next().has_value());
    REQUIRE(server.requests_seen() == 1);
}

TEST_CASE("request carries auth, model, and sampling parameters") {
    mock::SseServer server(mock::simple_stream(2, 2));
    auto cfg = fast_config(server.base_url());
    cfg.api_key = "sk-test-123";
    cfg.model_name = "m1";
    cfg.top_logprobs = 2;
    {
        ddc::HttpPathStream stream(cfg, "prompt text");
        drain(stream);
    }
    auto captured = server.captured();
    REQUIRE(captured.size() == 1);
    REQUIRE(captured[0].path == "/v1/completions");
    REQUIRE(captured[0].authorization == "Bearer sk-test-123");
    REQUIRE(captured[0].body["model"] == "m1");
    REQUIRE(captured[0].body["prompt"] == "prompt text");
    REQUIRE(captured[0].body["logprobs"] == 2);
    REQUIRE(captured[0].body["stream"] == true);
    REQUIRE(captured[0].body["temperature"] == Catch::Approx(0.6));
    REQUIRE(captured[0].body["top_p"] == Catch::Approx(0.95));
}

TEST_CASE("no api key means no authorization header") {
    mock::SseServer server(mock::simple_stream(1, 2));
    {
        ddc::HttpPathStream stream(fast_config(server.base_url()), "p");
        drain(stream);
    }
    REQUIRE(server.captured().at(0).authorization.empty());
}

TEST_CASE("chat mode posts to the chat endpoint with the template applied") {
    auto behavior = mock::simple_stream(3, 2);
    mock::SseServer server(behavior);
    auto cfg = fast_config(server.base_url());
    cfg.chat_mode = true;
    cfg.prompt_template = "Question: {prompt}";
    ddc::HttpPathStream stream(cfg, "why?");
    auto events = drain(stream);
    REQUIRE(events.size() == 3);
    auto captured = server.captured();
    REQUIRE(captured.at(0).path == "/v1/chat/completions");
    REQUIRE(captured.at(0).body["messages"][0]["content"] == "Question: why?");
    REQUIRE(captured.at(0).body["logprobs"] == true);
    REQUIRE(captured.at(0).body["top_logprobs"] == 3);
}

TEST_CASE("http 500 responses are retried until the stream succeeds") {
    auto behavior = mock::simple_stream(4, 2);
    behavior.error_status_first = 2;
    mock::SseServer server(behavior);
    ddc::HttpPathStream stream(fast_config(server.base_url()), "p");
    auto events = drain(stream);
    REQUIRE(events.size() == 4);
    REQUIRE(server.requests_seen() == 3);
}

TEST_CASE("a cut stream resumes without duplicating delivered tokens") {
    auto behavior = mock::simple_stream(10, 2);
    behavior.cut_stream_first = 1;
    behavior.cut_after_tokens = 4;
    mock::SseServer server(behavior);
    ddc::HttpPathStream stream(fast_config(server.base_url()), "p");
    auto events = drain(stream);
    REQUIRE(server.requests_seen() == 2);
    REQUIRE(events.size() == 10);
    for (std::size_t i = 0; i < events.size(); ++i) {
        REQUIRE(events[i].position == i);
        REQUIRE(events[i].token_text == "t" + std::to_string(i) + " ");
    }
}

TEST_CASE("exhausted retries surface as a transport error") {
    auto behavior = mock::simple_stream(2, 2);
    behavior.error_status_first = 99;
    mock::SseServer server(behavior);
    auto cfg = fast_config(server.base_url());
    cfg.retry_count = 1;
    ddc::HttpPathStream stream(cfg, "p");
    REQUIRE_THROWS_AS(drain(stream), ddc::TransportError);
    REQUIRE(server.requests_seen() == 2);  // initial try plus one retry
}

TEST_CASE("logprob-less servers fail fast with a capability error") {
    auto behavior = mock::simple_stream(3, 2);
    behavior.omit_logprobs = true;
    mock::SseServer server(behavior);
    ddc::HttpPathStream stream(fast_config(server.base_url()), "p");
    REQUIRE_THROWS_AS(drain(stream), ddc::ConfigError);
    REQUIRE(server.requests_seen() == 1);  // a capability gap is never retried
}

TEST_CASE("cancellation delivers no events after the cancel returns") {
    auto behavior = mock::simple_stream(64, 2);
    behavior.chunk_delay_ms = 5;
    mock::SseServer server(behavior);
    ddc::HttpPathStream stream(fast_config(server.base_url()), "p");
    for (int i = 0; i < 3; ++i) REQUIRE(stream.next().has_value());
    stream.cancel();
    std::size_t trailing = 0;
    while (stream.next().has_value()) ++trailing;
    REQUIRE(trailing <= 1);
}

TEST_CASE("live source issues one request per path") {
    mock::SseServer server(mock::simple_stream(2, 2));
    ddc::LiveSource source(fast_config(server.base_url()), "p");
    for (int i = 0; i < 3; ++i) {
        auto stream = source.start_path();
        REQUIRE(stream != nullptr);
        REQUIRE(drain(*stream).size() == 2);
    }
    REQUIRE(server.requests_seen() == 3);
}

TEST_CASE("recorded traces never contain the api key") {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "ddc-test-secrets";
    fs::remove_all(root);

    mock::SseServer server(mock::simple_stream(4, 2));
    auto cfg = fast_config(server.base_url());
    cfg.api_key = "sk-super-secret-value";
    ddc::LiveSource live(cfg, "p");
    ddc::RecordingSource recorder(live, root, "q0", 7);
    {
        auto stream = recorder.start_path();
        while (stream->next()) {
        }
    }
    std::string all;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::ifstream in(entry.path());
        std::stringstream ss;
        ss << in.rdbuf();
        all += ss.str();
    }
    REQUIRE_FALSE(all.empty());
    REQUIRE(all.find("sk-super-secret-value") == std::string::npos);
    fs::remove_all(root);
}
