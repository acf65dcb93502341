#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ddc/errors.hpp"
#include "ddc/path_source.hpp"
#include "ddc/token_event.hpp"

namespace ddc {

struct EndpointConfig {
    std::string base_url;    // falls back to DDC_BASE_URL
    std::string model_name = "default";
    std::string api_key;     // falls back to DDC_API_KEY; never persisted
    double temperature = 0.6;
    double top_p = 0.95;
    std::size_t top_logprobs = 20;
    std::size_t max_tokens = 8192;
    int timeout_sec = 120;
    int retry_count = 2;
    int retry_backoff_ms = 100;
    bool chat_mode = false;  // completions endpoint by default
    std::string prompt_template = "{prompt}";  // chat-mode user message wrapper

    // Pulls endpoint/secret material from the environment when unset.
    void resolve_env() {
        if (base_url.empty()) {
            if (const char* v = std::getenv("DDC_BASE_URL")) base_url = v;
        }
        if (api_key.empty()) {
            if (const char* v = std::getenv("DDC_API_KEY")) api_key = v;
        }
    }

    void validate() const {
        if (base_url.empty()) {
            throw ConfigError("no endpoint: set --base-url or DDC_BASE_URL");
        }
        if (top_logprobs < 1) throw ConfigError("top_logprobs must be >= 1");
        if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
        if (retry_count < 0 || retry_backoff_ms < 0) throw ConfigError("bad retry policy");
    }
};

namespace detail {

// Incremental server-sent-events framing: feed raw bytes, get back complete
// "data:" payloads (multi-line data joined per the SSE spec).
class SseParser {
   public:
    std::vector<std::string> feed(const char* data, std::size_t len) {
        buf_.append(data, len);
        std::vector<std::string> payloads;
        std::size_t start = 0;
        while (true) {
            const std::size_t sep = find_block_end(start);
            if (sep == std::string::npos) break;
            std::string payload = extract_data(start, sep);
            if (!payload.empty()) payloads.push_back(std::move(payload));
            start = skip_separator(sep);
        }
        buf_.erase(0, start);
        return payloads;
    }

   private:
    std::size_t find_block_end(std::size_t from) const {
        const std::size_t a = buf_.find("\n\n", from);
        const std::size_t b = buf_.find("\r\n\r\n", from);
        return std::min(a, b);
    }

    std::size_t skip_separator(std::size_t sep) const {
        return sep + (buf_.compare(sep, 2, "\n\n") == 0 ? 2 : 4);
    }

    std::string extract_data(std::size_t start, std::size_t end) const {
        std::string out;
        std::size_t pos = start;
        while (pos < end) {
            std::size_t eol = buf_.find('\n', pos);
            if (eol == std::string::npos || eol > end) eol = end;
            std::size_t line_end = eol;
            if (line_end > pos && buf_[line_end - 1] == '\r') --line_end;
            if (buf_.compare(pos, 5, "data:") == 0 && pos + 5 <= line_end) {
                std::size_t v = pos + 5;
                if (v < line_end && buf_[v] == ' ') ++v;
                if (!out.empty()) out += '\n';
                out.append(buf_, v, line_end - v);
            }
            pos = eol + 1;
        }
        return out;
    }

    std::string buf_;
};

struct ParsedToken {
    std::string text;
    std::vector<double> top_logprobs;  // sorted descending
};

inline std::vector<double> sorted_desc(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
}

// Converts one streamed chunk into per-token events. Understands both the
// completions shape (logprobs.tokens / logprobs.top_logprobs) and the chat
// shape (logprobs.content[].top_logprobs). A chunk that carries token text
// without logprobs is a server capability problem, reported as such.
inline std::vector<ParsedToken> parse_stream_chunk(const nlohmann::json& chunk) {
    std::vector<ParsedToken> out;
    if (!chunk.contains("choices") || chunk["choices"].empty()) return out;
    const auto& choice = chunk["choices"][0];

    if (choice.contains("delta")) {  // chat style
        const auto& delta = choice["delta"];
        const bool has_text =
            delta.contains("content") && delta["content"].is_string() &&
            !delta["content"].get<std::string>().empty();
        const bool has_logprobs = choice.contains("logprobs") &&
                                  choice["logprobs"].is_object() &&
                                  choice["logprobs"].contains("content") &&
                                  choice["logprobs"]["content"].is_array();
        if (!has_logprobs) {
            if (has_text) {
                throw ConfigError(
                    "server streamed tokens without logprobs; enable logprobs with "
                    "top_logprobs on the chat endpoint");
            }
            return out;  // role preamble or finish chunk
        }
        for (const auto& entry : choice["logprobs"]["content"]) {
            ParsedToken tok;
            tok.text = entry.value("token", "");
            std::vector<double> lps;
            if (entry.contains("top_logprobs") && entry["top_logprobs"].is_array() &&
                !entry["top_logprobs"].empty()) {
                for (const auto& alt : entry["top_logprobs"]) {
                    lps.push_back(alt.at("logprob").get<double>());
                }
            } else if (entry.contains("logprob")) {
                lps.push_back(entry.at("logprob").get<double>());
            }
            if (lps.empty()) {
                throw ConfigError(
                    "chat logprob entry carries no alternatives; set top_logprobs >= 1");
            }
            tok.top_logprobs = sorted_desc(std::move(lps));
            out.push_back(std::move(tok));
        }
        return out;
    }

    // completions style
    const bool has_text = choice.contains("text") && choice["text"].is_string() &&
                          !choice["text"].get<std::string>().empty();
    const bool has_logprobs = choice.contains("logprobs") && choice["logprobs"].is_object();
    if (!has_logprobs) {
        if (has_text) {
            throw ConfigError(
                "server streamed tokens without logprobs; pass logprobs=<k> on the "
                "completions endpoint");
        }
        return out;
    }
    const auto& lp = choice["logprobs"];
    if (!lp.contains("tokens") || !lp["tokens"].is_array()) return out;
    const auto& tokens = lp["tokens"];
    const bool has_top = lp.contains("top_logprobs") && lp["top_logprobs"].is_array();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        ParsedToken tok;
        tok.text = tokens[i].get<std::string>();
        std::vector<double> lps;
        if (has_top && i < lp["top_logprobs"].size() && lp["top_logprobs"][i].is_object()) {
            for (const auto& [alt, v] : lp["top_logprobs"][i].items()) {
                (void)alt;
                lps.push_back(v.get<double>());
            }
        } else if (lp.contains("token_logprobs") && i < lp["token_logprobs"].size() &&
                   lp["token_logprobs"][i].is_number()) {
            lps.push_back(lp["token_logprobs"][i].get<double>());
        }
        if (lps.empty()) {
            throw ConfigError(
                "completions logprobs carry no per-token alternatives; pass logprobs=<k>");
        }
        tok.top_logprobs = sorted_desc(std::move(lps));
        out.push_back(std::move(tok));
    }
    return out;
}

inline std::string apply_template(const std::string& tmpl, const std::string& prompt) {
    const std::string key = "{prompt}";
    const std::size_t pos = tmpl.find(key);
    if (pos == std::string::npos) return tmpl + prompt;
    std::string out = tmpl;
    out.replace(pos, key.size(), prompt);
    return out;
}

}  // namespace detail

// Live streaming path. A worker thread owns the HTTP request and pushes
// parsed events into a queue; next() pulls. cancel() aborts the transfer at
// the next chunk boundary, so at most the in-flight chunk is ever parsed and
// nothing after it is delivered.
class HttpPathStream : public PathStream {
   public:
    HttpPathStream(EndpointConfig cfg, std::string prompt)
        : cfg_(std::move(cfg)), prompt_(std::move(prompt)) {
        cfg_.resolve_env();
        cfg_.validate();
        worker_ = std::thread([this] { run(); });
    }

    ~HttpPathStream() override {
        cancel();
        if (worker_.joinable()) worker_.join();
    }

    std::optional<TokenEvent> next() override {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return !queue_.empty() || done_ || cancelled_; });
        if (cancelled_) return std::nullopt;
        if (!queue_.empty()) {
            TokenEvent ev = std::move(queue_.front());
            queue_.pop_front();
            return ev;
        }
        if (config_error_) throw ConfigError(*config_error_);
        if (transport_error_) throw TransportError(*transport_error_);
        return std::nullopt;
    }

    std::string final_text() override {
        std::lock_guard lock(mu_);
        return final_text_;
    }

    void cancel() override {
        {
            std::lock_guard lock(mu_);
            cancelled_ = true;
        }
        cv_.notify_all();
    }

   private:
    bool is_cancelled() {
        std::lock_guard lock(mu_);
        return cancelled_;
    }

    void push_token(detail::ParsedToken&& tok) {
        std::lock_guard lock(mu_);
        if (seen_in_attempt_++ < pushed_) return;  // replayed by a retry, already delivered
        TokenEvent ev;
        ev.position = pushed_++;
        ev.top_logprobs = std::move(tok.top_logprobs);
        ev.token_text = tok.text;
        final_text_ += ev.token_text;
        queue_.push_back(std::move(ev));
        cv_.notify_all();
    }

    // One HTTP attempt; true when the stream finished cleanly.
    bool attempt_once() {
        {
            std::lock_guard lock(mu_);
            seen_in_attempt_ = 0;
        }
        httplib::Client client(cfg_.base_url);
        client.set_connection_timeout(cfg_.timeout_sec, 0);
        client.set_read_timeout(cfg_.timeout_sec, 0);
        httplib::Headers headers{{"Accept", "text/event-stream"}};
        if (!cfg_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        }

        nlohmann::json body;
        body["model"] = cfg_.model_name;
        body["stream"] = true;
        body["temperature"] = cfg_.temperature;
        body["top_p"] = cfg_.top_p;
        body["max_tokens"] = cfg_.max_tokens;
        std::string path;
        if (cfg_.chat_mode) {
            path = "/v1/chat/completions";
            body["messages"] = nlohmann::json::array(
                {{{"role", "user"},
                  {"content", detail::apply_template(cfg_.prompt_template, prompt_)}}});
            body["logprobs"] = true;
            body["top_logprobs"] = cfg_.top_logprobs;
        } else {
            path = "/v1/completions";
            body["prompt"] = prompt_;
            body["logprobs"] = cfg_.top_logprobs;
        }

        detail::SseParser sse;
        httplib::Request req;
        req.method = "POST";
        req.path = path;
        req.headers = headers;
        req.set_header("Content-Type", "application/json");
        req.body = body.dump();
        // Exceptions must not unwind through httplib's read loop, so the
        // capability error is recorded and the transfer aborted instead.
        req.content_receiver = [&](const char* data, std::size_t len, std::uint64_t,
                                   std::uint64_t) {
            if (is_cancelled()) return false;
            try {
                for (auto& payload : sse.feed(data, len)) {
                    if (payload == "[DONE]") continue;
                    nlohmann::json chunk;
                    try {
                        chunk = nlohmann::json::parse(payload);
                    } catch (const nlohmann::json::parse_error&) {
                        continue;  // torn keep-alive or comment frame
                    }
                    for (auto& tok : detail::parse_stream_chunk(chunk)) {
                        push_token(std::move(tok));
                    }
                }
            } catch (const ConfigError& e) {
                std::lock_guard lock(mu_);
                config_error_ = e.what();
                return false;
            }
            return !is_cancelled();
        };
        auto result = client.send(req);

        if (is_cancelled()) return true;
        // Clean EOF ends the path whether or not a [DONE] sentinel arrived.
        return result && result->status == 200;
    }

    void run() {
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.retry_count; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(
                    std::chrono::milliseconds(cfg_.retry_backoff_ms * attempt));
            }
            bool ok = false;
            try {
                ok = attempt_once();
            } catch (const ConfigError& e) {
                std::lock_guard lock(mu_);
                config_error_ = e.what();
                break;
            } catch (const std::exception& e) {
                last_error = e.what();
            }
            {
                // A capability error recorded by the receiver is permanent.
                std::lock_guard lock(mu_);
                if (config_error_) break;
            }
            if (ok) {
                finish();
                return;
            }
            last_error = last_error.empty() ? "endpoint request failed" : last_error;
        }
        {
            std::lock_guard lock(mu_);
            if (!config_error_) {
                transport_error_ = "transport failure after " +
                                   std::to_string(cfg_.retry_count + 1) +
                                   " attempts: " + last_error;
            }
        }
        finish();
    }

    void finish() {
        {
            std::lock_guard lock(mu_);
            done_ = true;
        }
        cv_.notify_all();
    }

    EndpointConfig cfg_;
    std::string prompt_;
    std::thread worker_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<TokenEvent> queue_;
    std::string final_text_;
    std::optional<std::string> config_error_;
    std::optional<std::string> transport_error_;
    std::size_t pushed_ = 0;
    std::size_t seen_in_attempt_ = 0;
    bool done_ = false;
    bool cancelled_ = false;
};

// PathSource over a live endpoint: every start_path() issues a fresh
// streaming completion for the same prompt.
class LiveSource : public PathSource {
   public:
    LiveSource(EndpointConfig cfg, std::string prompt)
        : cfg_(std::move(cfg)), prompt_(std::move(prompt)) {
        cfg_.resolve_env();
        cfg_.validate();
    }

    std::unique_ptr<PathStream> start_path() override {
        return std::make_unique<HttpPathStream>(cfg_, prompt_);
    }

   private:
    EndpointConfig cfg_;
    std::string prompt_;
};

}  // namespace ddc
