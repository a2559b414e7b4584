#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "magic/core.hpp"

namespace magic::gateway {

enum class Mode { Live, Record, Replay };

Mode mode_from_name(const std::string& name);
const char* mode_name(Mode m);

struct ChatMessage {
    std::string role; // system | user | assistant
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
};

// Content hash of the request under a fixed serialization order; stable
// across runs and platforms. SHA-256 hex.
std::string fingerprint(const ChatRequest& request);

std::string sha256_hex(const std::string& data);

// Virtual clock so retry/backoff and the limiter are testable without
// real waiting.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::time_point now() const = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SteadyClock : public Clock {
public:
    std::chrono::steady_clock::time_point now() const override;
    void sleep_for(std::chrono::milliseconds d) override;
};

class FakeClock : public Clock {
public:
    std::chrono::steady_clock::time_point now() const override;
    void sleep_for(std::chrono::milliseconds d) override; // advances instantly
    std::chrono::milliseconds slept() const;

private:
    mutable std::mutex mu_;
    std::chrono::steady_clock::time_point now_{};
    std::chrono::milliseconds slept_{0};
};

// Caps concurrent in-flight requests and requests per minute,
// process-wide for one gateway instance.
class RateLimiter {
public:
    RateLimiter(int max_inflight, int requests_per_minute, std::shared_ptr<Clock> clock);

    class Token {
    public:
        Token(Token&& other) noexcept;
        Token(const Token&) = delete;
        ~Token();

    private:
        friend class RateLimiter;
        explicit Token(RateLimiter* owner) : owner_(owner) {}
        RateLimiter* owner_;
    };

    Token acquire();
    int inflight() const;
    int high_water() const;

private:
    void release();

    const int max_inflight_;
    const int requests_per_minute_;
    std::shared_ptr<Clock> clock_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    int inflight_ = 0;
    int high_water_ = 0;
    std::deque<std::chrono::steady_clock::time_point> recent_;
};

// One file per fingerprint under <root>/<model>/<hash>.txt plus an index
// manifest. Writes are atomic (temp then rename) and serialized.
class FixtureStore {
public:
    explicit FixtureStore(std::string root);

    std::optional<std::string> lookup(const std::string& fp) const;
    void store(const std::string& fp, const std::string& model, const std::string& response);

    const std::string& root() const { return root_; }

private:
    std::string root_;
    mutable std::mutex mu_;
};

struct GatewayConfig {
    std::string fixtures_dir = "fixtures";
    int max_inflight = 4;
    int requests_per_minute = 60;
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{1000}; // doubles per attempt
    std::chrono::milliseconds timeout{60000};
    std::string api_base;                     // overrides MAGIC_API_BASE
    std::string api_key;                      // overrides MAGIC_API_KEY
};

// Chat-completion HTTP client with retries, rate limiting and a
// record/replay store. Endpoint resolution: MAGIC_API_BASE_<MODEL> then
// MAGIC_API_BASE; bearer key from MAGIC_API_KEY. Replay never touches the
// network.
class Gateway {
public:
    explicit Gateway(GatewayConfig config = {}, std::shared_ptr<Clock> clock = nullptr);

    std::string chat(const ChatRequest& request, Mode mode);

    const FixtureStore& fixtures() const { return fixtures_; }
    RateLimiter& limiter() { return limiter_; }

private:
    std::string call_endpoint(const ChatRequest& request);
    std::string resolve_base(const std::string& model) const;

    GatewayConfig config_;
    std::shared_ptr<Clock> clock_;
    FixtureStore fixtures_;
    RateLimiter limiter_;
};

} // namespace magic::gateway
