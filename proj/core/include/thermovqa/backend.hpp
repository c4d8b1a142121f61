#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermovqa/oracle.hpp"
#include "thermovqa/thermal.hpp"

namespace thermovqa {

enum class BackendKind { HttpChat, HttpPrediction, Oracle, Replay };

std::string to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);  // throws ConfigError

struct BackendConfig {
    std::string id;
    BackendKind kind = BackendKind::Oracle;
    std::string endpoint;      // required for http kinds
    std::string model_name;
    std::string auth_env_var;  // bearer token source; the value is never logged
    std::optional<double> sampling_temperature;  // [0, 2] when set
    double timeout_s = 120.0;
    int max_retries = 4;        // retries after the first attempt
    int requests_per_minute = 60;  // 0 disables rate limiting
    double retry_base_delay_s = 0.5;
    double poll_interval_s = 1.0;              // http_prediction status polling
    std::filesystem::path transcript_path;     // required for replay

    void validate() const;  // throws ConfigError
};

struct QueryRequest {
    std::string prompt_text;
    std::vector<std::uint8_t> image_png;  // sent exactly as stored
    int prompt_id = 0;
    std::string image_id;
    int trial_index = 0;
};

struct RawResponse {
    std::string text;  // non-empty on success
    double latency_s = 0.0;
    int attempt_count = 1;
    std::string backend_id;
};

class Backend {
public:
    virtual ~Backend() = default;

    // Issues one query. Timeouts, HTTP >= 500 and rate-limit responses are
    // retried with exponential backoff up to max_retries and then raise
    // TransportError; any other 4xx raises ConfigError immediately.
    virtual RawResponse query(const QueryRequest& request) = 0;

    virtual const BackendConfig& config() const = 0;
};

// Builds the backend for config.kind. The colormap and oracle parameters are
// used by the oracle kind, which answers queries by decoding the image and
// running the rule-based detector.
std::unique_ptr<Backend> make_backend(
    const BackendConfig& config, const ColormapSpec& cmap = ColormapSpec::standard(),
    const OracleParams& oracle_params = {});

// Ready-made configs for the three benchmark services: "chatgpt-4o" (chat
// endpoint), "llava-13b" (prediction endpoint, temperature 0.1), "blip-2"
// (prediction endpoint).
std::vector<BackendConfig> preset_backends();
BackendConfig preset_backend(std::string_view id);  // throws ConfigError

// One canned answer for the replay backend.
struct TranscriptEntry {
    std::string backend_id;
    int prompt_id = 0;
    std::string image_id;
    int trial = 0;
    std::string text;
};

void write_transcript(const std::vector<TranscriptEntry>& entries,
                      const std::filesystem::path& path);
std::vector<TranscriptEntry> read_transcript(const std::filesystem::path& path);

// Sliding-window rate limiter: at most max_requests acquisitions in any
// window_s span. acquire() blocks until a slot frees up. Thread-safe;
// max_requests <= 0 disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(int max_requests, double window_s = 60.0);
    void acquire();

private:
    int max_requests_;
    std::chrono::duration<double> window_;
    std::mutex mutex_;
    std::condition_variable slot_freed_;
    std::deque<std::chrono::steady_clock::time_point> issued_;
};

}  // namespace thermovqa
