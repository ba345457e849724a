#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "qaeval/dataset.hpp"
#include "qaeval/promptkit.hpp"

namespace qaeval::actors {

enum class ActorKind { llm, recorded_human, scripted };
enum class ThinkingMode {
    disabled,
    minimal,
    dynamic,
    effort_low,
    effort_medium,
    effort_high,
};

std::string to_string(ActorKind kind);
std::string to_string(ThinkingMode mode);

struct PriceTable {
    double input_usd_per_1m_tokens = 0.0;
    double output_usd_per_1m_tokens = 0.0;
};

struct ActorConfig {
    std::string name;
    ActorKind kind = ActorKind::scripted;
    std::string provider;  // llm only: "openai", "anthropic", "google"
    std::string model_id;
    double temperature = 0.2;
    ThinkingMode thinking = ThinkingMode::disabled;
    std::optional<PriceTable> price;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 2;
    std::chrono::milliseconds retry_backoff{250};
    // Scripted actors answer from this map (item id -> canned answer).
    std::map<std::string, std::string> script;
    std::optional<std::string> script_default;

    void validate() const;

    // Stable digest of everything that can change an answer; the cache key
    // is a function of (fingerprint, prompt hash).
    std::string fingerprint() const;
};

// cents = (input*p_in + output*p_out) / 1e6 USD, expressed in USD cents.
double compute_cost_cents(std::int64_t input_tokens, std::int64_t output_tokens,
                          const PriceTable& price);

struct ActorOutput {
    std::string item_id;
    std::string answer_text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::chrono::milliseconds latency{0};
    double cost_cents = 0.0;
    bool from_cache = false;
};

nlohmann::json to_json(const ActorOutput& output);
ActorOutput actor_output_from_json(const nlohmann::json& j);

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    std::chrono::milliseconds timeout{30000};
};

struct HttpResponse {
    int status = 0;  // 0 = transport failure, message in body
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_default_transport();
// Refuses every request; backs --offline so a cold cache key cannot reach
// the network.
std::shared_ptr<Transport> make_offline_transport();

struct CacheEntry {
    ActorOutput output;
    std::string raw_response;
};

// One <key>.json per key (full ActorOutput), raw provider response
// retained alongside as <key>.raw. Writes go through a temp file + rename
// so concurrent readers never see torn entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<CacheEntry> lookup(const std::string& key) const;
    void store(const std::string& key, const CacheEntry& entry);
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::mutex& shard(const std::string& key) const;

    std::filesystem::path dir_;
    mutable std::array<std::mutex, 16> shards_;
};

struct ProviderLimits {
    int max_in_flight = 4;
    double requests_per_second = 0.0;  // 0 = no ceiling
};

class ProviderLimiter;

// Executes actors: scripted answers locally, llm actors over the transport
// with caching, retries with exponential backoff, and per-provider
// concurrency/rate limits. Safe for concurrent invoke calls.
class ActorInvoker {
public:
    ActorInvoker(std::shared_ptr<Transport> transport,
                 std::shared_ptr<ResponseCache> cache, bool offline = false);
    ~ActorInvoker();

    void set_provider_limits(const std::string& provider, ProviderLimits limits);
    bool offline() const { return offline_; }

    // `cache_salt` separates judge runs/attempts sharing one prompt.
    ActorOutput invoke(const ActorConfig& actor,
                       const promptkit::RenderedPrompt& prompt,
                       const std::string& cache_salt = "");

private:
    ActorOutput invoke_llm(const ActorConfig& actor,
                           const promptkit::RenderedPrompt& prompt,
                           const std::string& cache_key);

    ProviderLimiter& limiter_for(const std::string& provider);

    std::shared_ptr<Transport> transport_;
    std::shared_ptr<ResponseCache> cache_;
    bool offline_ = false;
    std::mutex limiters_mutex_;
    std::map<std::string, ProviderLimits> configured_limits_;
    std::map<std::string, std::unique_ptr<ProviderLimiter>> limiters_;
};

// Educator answer as an actor output (zero tokens, zero cost); absent when
// the item was never answered. Unknown ids are an error.
std::optional<ActorOutput> recorded_answer(const dataset::EvalDataset& dataset,
                                           const std::string& item_id);

nlohmann::json actor_config_to_json(const ActorConfig& actor);
ActorConfig actor_config_from_json(const nlohmann::json& j);
ActorConfig load_actor_config(const std::filesystem::path& path);

// Price-table file: {"<provider>/<model_id>": {"input_usd_per_1m_tokens":
// ..., "output_usd_per_1m_tokens": ...}, ...}
PriceTable lookup_price(const nlohmann::json& table, const std::string& provider,
                        const std::string& model_id);

}  // namespace qaeval::actors
