#include "thermovqa/backend.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "thermovqa/errors.hpp"
#include "thermovqa/image_io.hpp"
#include "thermovqa/util.hpp"
#include "thermovqa/verdict.hpp"

namespace thermovqa {

std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::HttpChat: return "http_chat";
        case BackendKind::HttpPrediction: return "http_prediction";
        case BackendKind::Oracle: return "oracle";
        case BackendKind::Replay: return "replay";
    }
    throw ConfigError("invalid backend kind value");
}

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http_chat") return BackendKind::HttpChat;
    if (s == "http_prediction") return BackendKind::HttpPrediction;
    if (s == "oracle") return BackendKind::Oracle;
    if (s == "replay") return BackendKind::Replay;
    throw ConfigError("unknown backend kind: '" + std::string(s) + "'");
}

void BackendConfig::validate() const {
    if (id.empty()) {
        throw ConfigError("backend id must be non-empty");
    }
    bool http = kind == BackendKind::HttpChat || kind == BackendKind::HttpPrediction;
    if (http && endpoint.empty()) {
        throw ConfigError("backend '" + id + "': http kinds require an endpoint");
    }
    if (http && auth_env_var.empty()) {
        throw ConfigError("backend '" + id + "': http kinds require auth_env_var");
    }
    if (kind == BackendKind::Replay && transcript_path.empty()) {
        throw ConfigError("backend '" + id + "': replay requires transcript_path");
    }
    if (sampling_temperature &&
        !(*sampling_temperature >= 0.0 && *sampling_temperature <= 2.0)) {
        throw ConfigError("backend '" + id +
                          "': sampling_temperature must be in [0, 2]");
    }
    if (!(timeout_s > 0.0)) {
        throw ConfigError("backend '" + id + "': timeout must be > 0");
    }
    if (max_retries < 0) {
        throw ConfigError("backend '" + id + "': max_retries must be >= 0");
    }
    if (requests_per_minute < 0) {
        throw ConfigError("backend '" + id + "': requests_per_minute must be >= 0");
    }
    if (retry_base_delay_s < 0.0) {
        throw ConfigError("backend '" + id + "': retry_base_delay must be >= 0");
    }
    if (!(poll_interval_s > 0.0)) {
        throw ConfigError("backend '" + id + "': poll_interval must be > 0");
    }
}

RateLimiter::RateLimiter(int max_requests, double window_s)
    : max_requests_(max_requests), window_(window_s) {}

void RateLimiter::acquire() {
    if (max_requests_ <= 0) return;
    std::unique_lock lock(mutex_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        while (!issued_.empty() && now - issued_.front() >= window_) {
            issued_.pop_front();
        }
        if (static_cast<int>(issued_.size()) < max_requests_) {
            issued_.push_back(now);
            return;
        }
        auto reopens =
            issued_.front() + std::chrono::duration_cast<
                                  std::chrono::steady_clock::duration>(window_);
        slot_freed_.wait_until(lock, reopens);
    }
}

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // starts with '/'
};

ParsedUrl parse_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("endpoint URL needs a scheme: " + url);
    }
    std::size_t slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, slash), url.substr(slash)};
}

std::string bearer_token(const BackendConfig& config) {
    const char* token = std::getenv(config.auth_env_var.c_str());
    if (!token || token[0] == '\0') {
        throw ConfigError("backend '" + config.id + "': environment variable " +
                          config.auth_env_var + " is not set");
    }
    return token;
}

std::string body_snippet(const std::string& body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return body;
    return body.substr(0, kMax) + "...";
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

// Shared retry loop: run try_once until it returns a body, signals a
// retryable failure (timeout / 5xx / 429), or raises. On exhaustion, throws
// TransportError carrying the last failure description.
template <typename TryOnce>
std::string with_retries(const BackendConfig& config, RateLimiter& limiter,
                         TryOnce&& try_once, int& attempts_used) {
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        attempts_used = attempt + 1;
        if (attempt > 0) {
            double delay = config.retry_base_delay_s * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
        limiter.acquire();
        std::optional<std::string> body = try_once(last_failure);
        if (body) {
            return *body;
        }
    }
    throw TransportError("backend '" + config.id + "': giving up after " +
                         std::to_string(attempts_used) + " attempt(s): " +
                         last_failure);
}

class HttpBackendBase : public Backend {
public:
    HttpBackendBase(BackendConfig config)
        : config_(std::move(config)),
          limiter_(config_.requests_per_minute) {}

    const BackendConfig& config() const override { return config_; }

protected:
    httplib::Client make_client(const std::string& base) const {
        httplib::Client client(base);
        client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_write_timeout(std::chrono::duration<double>(config_.timeout_s));
        client.set_bearer_token_auth(token_);
        return client;
    }

    // POST json to the endpoint with retry/backoff; returns the response body.
    std::string post_with_retries(const ParsedUrl& url, const std::string& payload,
                                  int& attempts_used) {
        return with_retries(
            config_, limiter_,
            [&](std::string& last_failure) -> std::optional<std::string> {
                httplib::Client client = make_client(url.base);
                httplib::Result res =
                    client.Post(url.path, payload, "application/json");
                if (!res) {
                    last_failure = "transport failure: " + httplib::to_string(res.error());
                    return std::nullopt;
                }
                if (retryable_status(res->status)) {
                    last_failure = "HTTP " + std::to_string(res->status) + ": " +
                                   body_snippet(res->body);
                    return std::nullopt;
                }
                if (res->status >= 400) {
                    throw ConfigError("backend '" + config_.id + "': HTTP " +
                                      std::to_string(res->status) + ": " +
                                      body_snippet(res->body));
                }
                return res->body;
            },
            attempts_used);
    }

    std::string get_with_retries(const ParsedUrl& url, int& attempts_used) {
        return with_retries(
            config_, limiter_,
            [&](std::string& last_failure) -> std::optional<std::string> {
                httplib::Client client = make_client(url.base);
                httplib::Result res = client.Get(url.path);
                if (!res) {
                    last_failure = "transport failure: " + httplib::to_string(res.error());
                    return std::nullopt;
                }
                if (retryable_status(res->status)) {
                    last_failure = "HTTP " + std::to_string(res->status) + ": " +
                                   body_snippet(res->body);
                    return std::nullopt;
                }
                if (res->status >= 400) {
                    throw ConfigError("backend '" + config_.id + "': HTTP " +
                                      std::to_string(res->status) + ": " +
                                      body_snippet(res->body));
                }
                return res->body;
            },
            attempts_used);
    }

    nlohmann::json parse_response(const std::string& body) const {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("backend '" + config_.id +
                                 "': response is not valid JSON: " + e.what());
        }
    }

    void fetch_token() { token_ = bearer_token(config_); }

    BackendConfig config_;
    RateLimiter limiter_;
    std::string token_;
};

// OpenAI-compatible chat-completions endpoint: prompt as a text part, image
// as a base64 data URL part; answer in choices[0].message.content.
class HttpChatBackend final : public HttpBackendBase {
public:
    using HttpBackendBase::HttpBackendBase;

    RawResponse query(const QueryRequest& request) override {
        fetch_token();
        auto started = std::chrono::steady_clock::now();

        nlohmann::json text_part;
        text_part["type"] = "text";
        text_part["text"] = request.prompt_text;
        nlohmann::json image_part;
        image_part["type"] = "image_url";
        image_part["image_url"]["url"] =
            "data:image/png;base64," + base64_encode(request.image_png);
        nlohmann::json message;
        message["role"] = "user";
        message["content"] = nlohmann::json::array({text_part, image_part});
        nlohmann::json payload;
        payload["model"] = config_.model_name;
        payload["messages"] = nlohmann::json::array({message});
        if (config_.sampling_temperature) {
            payload["temperature"] = *config_.sampling_temperature;
        }

        ParsedUrl url = parse_url(config_.endpoint);
        int attempts = 0;
        std::string body = post_with_retries(url, payload.dump(), attempts);

        nlohmann::json response = parse_response(body);
        std::string text;
        try {
            text = response.at("choices").at(0).at("message").at("content")
                       .get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw TransportError("backend '" + config_.id +
                                 "': unexpected chat response shape: " + e.what());
        }
        if (text.empty()) {
            throw TransportError("backend '" + config_.id +
                                 "': empty answer from chat endpoint");
        }

        RawResponse out;
        out.text = std::move(text);
        out.attempt_count = attempts;
        out.backend_id = config_.id;
        out.latency_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        return out;
    }
};

// Prediction-style endpoint: POST {input:{prompt,image,...}}, then poll the
// returned status URL until the prediction succeeds.
class HttpPredictionBackend final : public HttpBackendBase {
public:
    using HttpBackendBase::HttpBackendBase;

    RawResponse query(const QueryRequest& request) override {
        fetch_token();
        auto started = std::chrono::steady_clock::now();

        nlohmann::json input = {
            {"prompt", request.prompt_text},
            {"image", "data:image/png;base64," + base64_encode(request.image_png)},
        };
        if (config_.sampling_temperature) {
            input["temperature"] = *config_.sampling_temperature;
        }
        nlohmann::json payload = {{"input", input}};

        ParsedUrl url = parse_url(config_.endpoint);
        int attempts = 0;
        nlohmann::json prediction =
            parse_response(post_with_retries(url, payload.dump(), attempts));

        auto deadline = started + std::chrono::duration_cast<
                                      std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(config_.timeout_s));
        for (;;) {
            std::string status = prediction.value("status", "");
            if (status == "succeeded") break;
            if (status == "failed" || status == "canceled") {
                throw TransportError("backend '" + config_.id + "': prediction " +
                                     status + ": " +
                                     prediction.value("error", "(no detail)"));
            }
            if (std::chrono::steady_clock::now() >= deadline) {
                throw TransportError("backend '" + config_.id +
                                     "': prediction did not finish within " +
                                     std::to_string(config_.timeout_s) + "s");
            }
            std::string poll_url;
            try {
                poll_url = prediction.at("urls").at("get").get<std::string>();
            } catch (const nlohmann::json::exception&) {
                throw TransportError("backend '" + config_.id +
                                     "': prediction response carries no status URL");
            }
            std::this_thread::sleep_for(
                std::chrono::duration<double>(config_.poll_interval_s));
            int poll_attempts = 0;
            prediction = parse_response(
                get_with_retries(parse_url(poll_url), poll_attempts));
            attempts += poll_attempts;
        }

        std::string text = extract_output(prediction);
        if (text.empty()) {
            throw TransportError("backend '" + config_.id +
                                 "': prediction succeeded with empty output");
        }

        RawResponse out;
        out.text = std::move(text);
        out.attempt_count = attempts;
        out.backend_id = config_.id;
        out.latency_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        return out;
    }

private:
    std::string extract_output(const nlohmann::json& prediction) const {
        if (!prediction.contains("output")) {
            throw TransportError("backend '" + config_.id +
                                 "': prediction succeeded without output");
        }
        const nlohmann::json& output = prediction.at("output");
        if (output.is_string()) {
            return output.get<std::string>();
        }
        if (output.is_array()) {  // token streams arrive as string arrays
            std::string joined;
            for (const auto& part : output) {
                if (part.is_string()) joined += part.get<std::string>();
            }
            return joined;
        }
        throw TransportError("backend '" + config_.id +
                             "': prediction output has unexpected type " +
                             std::string(output.type_name()));
    }
};

// Offline stand-in: decodes the image and answers from the rule-based
// detector, phrased like the benchmark's binary options.
class OracleBackend final : public Backend {
public:
    OracleBackend(BackendConfig config, ColormapSpec cmap, OracleParams params)
        : config_(std::move(config)), cmap_(std::move(cmap)), params_(params) {}

    RawResponse query(const QueryRequest& request) override {
        auto started = std::chrono::steady_clock::now();
        Verdict verdict;
        {
            std::lock_guard lock(mutex_);
            auto hit = cache_.find(request.image_id);
            if (!request.image_id.empty() && hit != cache_.end()) {
                verdict = hit->second;
            } else {
                verdict = classify_png(request.image_png);
                if (!request.image_id.empty()) {
                    cache_.emplace(request.image_id, verdict);
                }
            }
        }
        RawResponse out;
        out.text = verdict == Verdict::Normal ? "a) Yes" : "b) No";
        out.attempt_count = 1;
        out.backend_id = config_.id;
        out.latency_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        return out;
    }

    const BackendConfig& config() const override { return config_; }

private:
    Verdict classify_png(const std::vector<std::uint8_t>& png) const {
        ThermalImage image = decode_png(png);
        DecodeResult decoded = decode(image, cmap_);
        return classify(decoded.field, params_).verdict;
    }

    BackendConfig config_;
    ColormapSpec cmap_;
    OracleParams params_;
    std::mutex mutex_;
    std::map<std::string, Verdict> cache_;
};

// Canned answers keyed by (backend_id, prompt_id, image_id, trial).
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(BackendConfig config) : config_(std::move(config)) {
        for (auto& entry : read_transcript(config_.transcript_path)) {
            answers_[{entry.backend_id, entry.prompt_id, entry.image_id,
                      entry.trial}] = std::move(entry.text);
        }
    }

    RawResponse query(const QueryRequest& request) override {
        auto started = std::chrono::steady_clock::now();
        auto hit = answers_.find({config_.id, request.prompt_id, request.image_id,
                                  request.trial_index});
        if (hit == answers_.end()) {
            std::ostringstream msg;
            msg << "backend '" << config_.id << "': transcript "
                << config_.transcript_path.string() << " has no entry for prompt "
                << request.prompt_id << ", image '" << request.image_id
                << "', trial " << request.trial_index;
            throw ConfigError(msg.str());
        }
        RawResponse out;
        out.text = hit->second;
        out.attempt_count = 1;
        out.backend_id = config_.id;
        out.latency_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
        return out;
    }

    const BackendConfig& config() const override { return config_; }

private:
    using Key = std::tuple<std::string, int, std::string, int>;
    BackendConfig config_;
    std::map<Key, std::string> answers_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      const ColormapSpec& cmap,
                                      const OracleParams& oracle_params) {
    config.validate();
    switch (config.kind) {
        case BackendKind::HttpChat:
            return std::make_unique<HttpChatBackend>(config);
        case BackendKind::HttpPrediction:
            return std::make_unique<HttpPredictionBackend>(config);
        case BackendKind::Oracle:
            if (config.sampling_temperature) {
                std::fprintf(stderr,
                             "warning: backend '%s' ignores sampling_temperature\n",
                             config.id.c_str());
            }
            return std::make_unique<OracleBackend>(config, cmap, oracle_params);
        case BackendKind::Replay:
            if (config.sampling_temperature) {
                std::fprintf(stderr,
                             "warning: backend '%s' ignores sampling_temperature\n",
                             config.id.c_str());
            }
            return std::make_unique<ReplayBackend>(config);
    }
    throw ConfigError("invalid backend kind value");
}

std::vector<BackendConfig> preset_backends() {
    BackendConfig chatgpt;
    chatgpt.id = "chatgpt-4o";
    chatgpt.kind = BackendKind::HttpChat;
    chatgpt.endpoint = "https://api.openai.com/v1/chat/completions";
    chatgpt.model_name = "gpt-4o";
    chatgpt.auth_env_var = "OPENAI_API_KEY";

    BackendConfig llava;
    llava.id = "llava-13b";
    llava.kind = BackendKind::HttpPrediction;
    llava.endpoint =
        "https://api.replicate.com/v1/models/yorickvp/llava-13b/predictions";
    llava.model_name = "yorickvp/llava-13b";
    llava.auth_env_var = "REPLICATE_API_TOKEN";
    llava.sampling_temperature = 0.1;

    BackendConfig blip;
    blip.id = "blip-2";
    blip.kind = BackendKind::HttpPrediction;
    blip.endpoint =
        "https://api.replicate.com/v1/models/andreasjansson/blip-2/predictions";
    blip.model_name = "andreasjansson/blip-2";
    blip.auth_env_var = "REPLICATE_API_TOKEN";

    return {chatgpt, llava, blip};
}

BackendConfig preset_backend(std::string_view id) {
    for (auto& config : preset_backends()) {
        if (config.id == id) return config;
    }
    throw ConfigError("unknown backend preset: '" + std::string(id) +
                      "' (available: chatgpt-4o, llava-13b, blip-2)");
}

void write_transcript(const std::vector<TranscriptEntry>& entries,
                      const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& entry : entries) {
        nlohmann::json row = {
            {"backend_id", entry.backend_id}, {"prompt_id", entry.prompt_id},
            {"image_id", entry.image_id},     {"trial", entry.trial},
            {"text", entry.text},
        };
        out << row.dump() << "\n";
    }
    write_text_file(path, out.str());
}

std::vector<TranscriptEntry> read_transcript(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<TranscriptEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            nlohmann::json row = nlohmann::json::parse(line);
            TranscriptEntry entry;
            entry.backend_id = row.at("backend_id").get<std::string>();
            entry.prompt_id = row.at("prompt_id").get<int>();
            entry.image_id = row.at("image_id").get<std::string>();
            entry.trial = row.at("trial").get<int>();
            entry.text = row.at("text").get<std::string>();
            entries.push_back(std::move(entry));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("transcript " + path.string() + " line " +
                              std::to_string(line_no) + ": " + e.what());
        }
    }
    return entries;
}

}  // namespace thermovqa
