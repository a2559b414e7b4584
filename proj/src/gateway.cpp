#include "magic/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ctime>
#include <thread>

#include <openssl/evp.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace fs = std::filesystem;

namespace magic::gateway {

Mode mode_from_name(const std::string& name) {
    if (name == "live") return Mode::Live;
    if (name == "record") return Mode::Record;
    if (name == "replay") return Mode::Replay;
    throw Error(Errc::ConfigError, "unknown mode '" + name + "'");
}

const char* mode_name(Mode m) {
    switch (m) {
    case Mode::Live: return "live";
    case Mode::Record: return "record";
    case Mode::Replay: return "replay";
    }
    return "unknown";
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string fingerprint(const ChatRequest& request) {
    json j;
    j["model"] = request.model;
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    json msgs = json::array();
    for (const ChatMessage& m : request.messages)
        msgs.push_back(json{{"role", m.role}, {"content", m.content}});
    j["messages"] = msgs;
    // nlohmann objects serialize with sorted keys, giving a fixed order.
    return sha256_hex(j.dump());
}

// ── Clocks ───────────────────────────────────────────────────────────

std::chrono::steady_clock::time_point SteadyClock::now() const {
    return std::chrono::steady_clock::now();
}

void SteadyClock::sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

std::chrono::steady_clock::time_point FakeClock::now() const {
    std::lock_guard lock(mu_);
    return now_;
}

void FakeClock::sleep_for(std::chrono::milliseconds d) {
    std::lock_guard lock(mu_);
    now_ += d;
    slept_ += d;
}

std::chrono::milliseconds FakeClock::slept() const {
    std::lock_guard lock(mu_);
    return slept_;
}

// ── RateLimiter ──────────────────────────────────────────────────────

RateLimiter::RateLimiter(int max_inflight, int requests_per_minute, std::shared_ptr<Clock> clock)
    : max_inflight_(max_inflight), requests_per_minute_(requests_per_minute),
      clock_(std::move(clock)) {}

RateLimiter::Token::Token(Token&& other) noexcept : owner_(other.owner_) {
    other.owner_ = nullptr;
}

RateLimiter::Token::~Token() {
    if (owner_) owner_->release();
}

RateLimiter::Token RateLimiter::acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = clock_->now();
        while (!recent_.empty() && now - recent_.front() >= std::chrono::minutes(1))
            recent_.pop_front();
        if (inflight_ < max_inflight_ &&
            static_cast<int>(recent_.size()) < requests_per_minute_) {
            ++inflight_;
            high_water_ = std::max(high_water_, inflight_);
            recent_.push_back(now);
            return Token(this);
        }
        if (inflight_ >= max_inflight_) {
            cv_.wait(lock, [&] { return inflight_ < max_inflight_; });
        } else {
            // Window full: wait out the oldest entry on the virtual clock.
            auto wait = recent_.front() + std::chrono::minutes(1) - now;
            lock.unlock();
            clock_->sleep_for(std::chrono::duration_cast<std::chrono::milliseconds>(wait) +
                              std::chrono::milliseconds(1));
            lock.lock();
        }
    }
}

void RateLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --inflight_;
    }
    cv_.notify_one();
}

int RateLimiter::inflight() const {
    std::lock_guard lock(mu_);
    return inflight_;
}

int RateLimiter::high_water() const {
    std::lock_guard lock(mu_);
    return high_water_;
}

// ── FixtureStore ─────────────────────────────────────────────────────

namespace {

std::string sanitize_model(const std::string& model) {
    std::string out;
    for (char c : model) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out.empty() ? "_" : out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

} // namespace

FixtureStore::FixtureStore(std::string root) : root_(std::move(root)) {}

std::optional<std::string> FixtureStore::lookup(const std::string& fp) const {
    std::lock_guard lock(mu_);
    fs::path manifest = fs::path(root_) / "manifest.json";
    if (!fs::exists(manifest)) return std::nullopt;
    std::ifstream in(manifest);
    json index = json::parse(in);
    if (!index.contains(fp)) return std::nullopt;
    fs::path file = fs::path(root_) / index.at(fp).at("file").get<std::string>();
    std::ifstream body(file, std::ios::binary);
    if (!body) return std::nullopt;
    std::string out((std::istreambuf_iterator<char>(body)), std::istreambuf_iterator<char>());
    return out;
}

void FixtureStore::store(const std::string& fp, const std::string& model,
                         const std::string& response) {
    std::lock_guard lock(mu_);
    fs::path dir = fs::path(root_) / sanitize_model(model);
    fs::create_directories(dir);
    fs::path file = dir / (fp + ".txt");
    fs::path tmp = dir / (fp + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        out << response;
    }
    fs::rename(tmp, file);

    fs::path manifest = fs::path(root_) / "manifest.json";
    json index = json::object();
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        index = json::parse(in);
    }
    char created[32] = {0};
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(created, sizeof created, "%Y-%m-%dT%H:%M:%SZ", &tm);
    index[fp] = json{{"file", sanitize_model(model) + "/" + fp + ".txt"},
                     {"model", model},
                     {"created_at", created}};
    fs::path mtmp = fs::path(root_) / "manifest.json.tmp";
    {
        std::ofstream out(mtmp, std::ios::binary);
        out << index.dump(2) << "\n";
    }
    fs::rename(mtmp, manifest);
}

// ── Gateway ──────────────────────────────────────────────────────────

Gateway::Gateway(GatewayConfig config, std::shared_ptr<Clock> clock)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()),
      fixtures_(config_.fixtures_dir),
      limiter_(config_.max_inflight, config_.requests_per_minute, clock_) {}

std::string Gateway::resolve_base(const std::string& model) const {
    if (!config_.api_base.empty()) return config_.api_base;
    std::string per_model = "MAGIC_API_BASE_" + sanitize_model(model);
    std::transform(per_model.begin(), per_model.end(), per_model.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::string base = env_or(per_model.c_str(), env_or("MAGIC_API_BASE", ""));
    if (base.empty())
        throw Error(Errc::ConfigError, "no endpoint: set MAGIC_API_BASE or pass api_base");
    return base;
}

std::string Gateway::call_endpoint(const ChatRequest& request) {
    const std::string base = resolve_base(request.model);
    const std::string key = !config_.api_key.empty() ? config_.api_key
                                                     : env_or("MAGIC_API_KEY", "");

    json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_tokens;
    json msgs = json::array();
    for (const ChatMessage& m : request.messages)
        msgs.push_back(json{{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;

    // Split base into host part and path prefix.
    std::string prefix;
    std::string host = base;
    size_t scheme = host.find("://");
    size_t path_start = host.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start != std::string::npos) {
        prefix = host.substr(path_start);
        host = host.substr(0, path_start);
        if (prefix == "/") prefix.clear();
    }

    httplib::Client client(host);
    client.set_connection_timeout(std::chrono::milliseconds(config_.timeout));
    client.set_read_timeout(std::chrono::milliseconds(config_.timeout));
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    int attempt = 0;
    for (;;) {
        ++attempt;
        auto res = [&] {
            auto token = limiter_.acquire(); // released before any backoff sleep
            return client.Post(prefix + "/chat/completions", headers, body.dump(),
                               "application/json");
        }();
        bool transient = false;
        if (!res) {
            transient = true;
        } else if (res->status == 401 || res->status == 403) {
            throw Error(Errc::AuthError, "endpoint returned " + std::to_string(res->status));
        } else if (res->status == 429 || res->status >= 500) {
            transient = true;
        } else if (res->status == 200) {
            json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } else {
            throw Error(Errc::AgentFailure, "endpoint returned " + std::to_string(res->status));
        }
        if (transient) {
            if (attempt >= config_.max_attempts) {
                if (res && res->status == 429)
                    throw Error(Errc::RateLimited, "still rate limited after " +
                                                       std::to_string(attempt) + " attempts");
                throw Error(Errc::GatewayTimeout, "endpoint unreachable after " +
                                                      std::to_string(attempt) + " attempts");
            }
            clock_->sleep_for(config_.backoff_base * (1 << (attempt - 1)));
        }
    }
}

std::string Gateway::chat(const ChatRequest& request, Mode mode) {
    if (request.messages.empty()) throw Error(Errc::InvalidField, "empty messages");
    const std::string fp = fingerprint(request);
    switch (mode) {
    case Mode::Replay: {
        auto hit = fixtures_.lookup(fp);
        if (!hit)
            throw Error(Errc::FixtureMiss, "no fixture for fingerprint " + fp + " (model " +
                                               request.model + ")");
        return *hit;
    }
    case Mode::Record: {
        auto hit = fixtures_.lookup(fp);
        if (hit) return *hit; // already recorded; keep runs idempotent
        std::string response = call_endpoint(request);
        fixtures_.store(fp, request.model, response);
        return response;
    }
    case Mode::Live: return call_endpoint(request);
    }
    throw Error(Errc::ConfigError, "bad mode");
}

} // namespace magic::gateway
