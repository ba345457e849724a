#include "qaeval/actors.hpp"

#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"
#include "qaeval/hash.hpp"
#include "qaeval/providers.hpp"

namespace qaeval::actors {

namespace {

using nlohmann::json;

std::string kind_to_string(ActorKind kind) {
    switch (kind) {
        case ActorKind::llm: return "llm";
        case ActorKind::recorded_human: return "recorded_human";
        case ActorKind::scripted: return "scripted";
    }
    return "";
}

ActorKind kind_from_string(const std::string& s) {
    if (s == "llm") return ActorKind::llm;
    if (s == "recorded_human") return ActorKind::recorded_human;
    if (s == "scripted") return ActorKind::scripted;
    fail(ErrorKind::config, "unknown actor kind \"" + s + "\"");
}

std::string thinking_to_string(ThinkingMode mode) {
    switch (mode) {
        case ThinkingMode::disabled: return "disabled";
        case ThinkingMode::minimal: return "minimal";
        case ThinkingMode::dynamic: return "dynamic";
        case ThinkingMode::effort_low: return "effort_low";
        case ThinkingMode::effort_medium: return "effort_medium";
        case ThinkingMode::effort_high: return "effort_high";
    }
    return "";
}

ThinkingMode thinking_from_string(const std::string& s) {
    if (s == "disabled") return ThinkingMode::disabled;
    if (s == "minimal") return ThinkingMode::minimal;
    if (s == "dynamic") return ThinkingMode::dynamic;
    if (s == "effort_low") return ThinkingMode::effort_low;
    if (s == "effort_medium") return ThinkingMode::effort_medium;
    if (s == "effort_high") return ThinkingMode::effort_high;
    fail(ErrorKind::config, "unknown thinking mode \"" + s + "\"");
}

bool retryable_status(int status) {
    return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string to_string(ActorKind kind) { return kind_to_string(kind); }
std::string to_string(ThinkingMode mode) { return thinking_to_string(mode); }

void ActorConfig::validate() const {
    if (name.empty()) fail(ErrorKind::config, "actor needs a name");
    if (temperature < 0.0)
        fail(ErrorKind::config,
             "actor \"" + name + "\": temperature must be >= 0");
    if (max_retries < 0)
        fail(ErrorKind::config, "actor \"" + name + "\": max_retries must be >= 0");
    if (kind == ActorKind::llm) {
        if (provider.empty() || model_id.empty())
            fail(ErrorKind::config,
                 "llm actor \"" + name + "\" needs provider and model_id");
        if (!price.has_value())
            fail(ErrorKind::config,
                 "llm actor \"" + name + "\" needs a price (inline or via price table)");
        if (price->input_usd_per_1m_tokens < 0.0 ||
            price->output_usd_per_1m_tokens < 0.0)
            fail(ErrorKind::config,
                 "actor \"" + name + "\": prices must be >= 0");
        adapter_for(provider).check_support(*this);
    }
}

std::string ActorConfig::fingerprint() const {
    json identity{
        {"kind", kind_to_string(kind)},
        {"provider", provider},
        {"model_id", model_id},
        {"temperature", temperature},
        {"thinking", thinking_to_string(thinking)},
    };
    if (kind == ActorKind::scripted) {
        identity["script"] = script;
        if (script_default) identity["script_default"] = *script_default;
    }
    return sha256_hex(identity.dump());
}

double compute_cost_cents(std::int64_t input_tokens, std::int64_t output_tokens,
                          const PriceTable& price) {
    const double usd =
        (static_cast<double>(input_tokens) * price.input_usd_per_1m_tokens +
         static_cast<double>(output_tokens) * price.output_usd_per_1m_tokens) /
        1'000'000.0;
    return usd * 100.0;
}

nlohmann::json to_json(const ActorOutput& output) {
    return json{
        {"item_id", output.item_id},
        {"answer_text", output.answer_text},
        {"input_tokens", output.input_tokens},
        {"output_tokens", output.output_tokens},
        {"latency_ms", output.latency.count()},
        {"cost_cents", output.cost_cents},
    };
}

ActorOutput actor_output_from_json(const nlohmann::json& j) {
    ActorOutput out;
    out.item_id = j.at("item_id").get<std::string>();
    out.answer_text = j.at("answer_text").get<std::string>();
    out.input_tokens = j.at("input_tokens").get<std::int64_t>();
    out.output_tokens = j.at("output_tokens").get<std::int64_t>();
    out.latency = std::chrono::milliseconds(j.at("latency_ms").get<std::int64_t>());
    out.cost_cents = j.at("cost_cents").get<double>();
    return out;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::mutex& ResponseCache::shard(const std::string& key) const {
    return shards_[std::hash<std::string>{}(key) % shards_.size()];
}

std::optional<CacheEntry> ResponseCache::lookup(const std::string& key) const {
    std::lock_guard lock(shard(key));
    const auto path = dir_ / (key + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::parse_error&) {
        return std::nullopt;  // treat a damaged entry as a miss
    }
    CacheEntry entry;
    entry.output = actor_output_from_json(j);
    std::ifstream raw(dir_ / (key + ".raw"), std::ios::binary);
    if (raw) {
        std::ostringstream buffer;
        buffer << raw.rdbuf();
        entry.raw_response = buffer.str();
    }
    return entry;
}

void ResponseCache::store(const std::string& key, const CacheEntry& entry) {
    std::lock_guard lock(shard(key));
    const auto path = dir_ / (key + ".json");
    const auto tmp = dir_ / (key + ".json.tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write cache entry: " + path.string());
        out << to_json(entry.output).dump(2) << "\n";
    }
    std::filesystem::rename(tmp, path);
    const auto raw_path = dir_ / (key + ".raw");
    const auto raw_tmp = dir_ / (key + ".raw.tmp");
    {
        std::ofstream out(raw_tmp, std::ios::binary);
        if (!out)
            fail(ErrorKind::io, "cannot write cache entry: " + raw_path.string());
        out << entry.raw_response;
    }
    std::filesystem::rename(raw_tmp, raw_path);
}

namespace {

class OfflineTransport final : public Transport {
public:
    HttpResponse post(const HttpRequest& request) override {
        fail(ErrorKind::provider,
             "network disabled (--offline), refused request to " + request.url);
    }
};

}  // namespace

std::shared_ptr<Transport> make_offline_transport() {
    return std::make_shared<OfflineTransport>();
}

// Serializes request starts per provider: at most max_in_flight concurrent
// requests, and with a rate ceiling, a minimum interval between starts.
class ProviderLimiter {
public:
    explicit ProviderLimiter(ProviderLimits limits) : limits_(limits) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return in_flight_ < limits_.max_in_flight; });
        ++in_flight_;
        if (limits_.requests_per_second > 0.0) {
            const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(1.0 / limits_.requests_per_second));
            const auto now = std::chrono::steady_clock::now();
            const auto start = std::max(now, next_start_);
            next_start_ = start + interval;
            lock.unlock();
            std::this_thread::sleep_until(start);
            return;
        }
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            --in_flight_;
        }
        cv_.notify_one();
    }

private:
    ProviderLimits limits_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int in_flight_ = 0;
    std::chrono::steady_clock::time_point next_start_{};
};

namespace {

struct LimiterGuard {
    explicit LimiterGuard(ProviderLimiter& limiter) : limiter_(limiter) {
        limiter_.acquire();
    }
    ~LimiterGuard() { limiter_.release(); }
    LimiterGuard(const LimiterGuard&) = delete;
    LimiterGuard& operator=(const LimiterGuard&) = delete;

private:
    ProviderLimiter& limiter_;
};

}  // namespace

ActorInvoker::ActorInvoker(std::shared_ptr<Transport> transport,
                           std::shared_ptr<ResponseCache> cache, bool offline)
    : transport_(std::move(transport)), cache_(std::move(cache)),
      offline_(offline) {}

ActorInvoker::~ActorInvoker() = default;

void ActorInvoker::set_provider_limits(const std::string& provider,
                                       ProviderLimits limits) {
    std::lock_guard lock(limiters_mutex_);
    configured_limits_[provider] = limits;
    limiters_.erase(provider);
}

ProviderLimiter& ActorInvoker::limiter_for(const std::string& provider) {
    std::lock_guard lock(limiters_mutex_);
    auto it = limiters_.find(provider);
    if (it == limiters_.end()) {
        ProviderLimits limits;
        auto configured = configured_limits_.find(provider);
        if (configured != configured_limits_.end()) limits = configured->second;
        it = limiters_
                 .emplace(provider, std::make_unique<ProviderLimiter>(limits))
                 .first;
    }
    return *it->second;
}

ActorOutput ActorInvoker::invoke(const ActorConfig& actor,
                                 const promptkit::RenderedPrompt& prompt,
                                 const std::string& cache_salt) {
    actor.validate();
    if (actor.kind == ActorKind::recorded_human)
        fail(ErrorKind::config,
             "recorded_human actors answer via recorded_answer(), not invoke()");

    const std::string cache_key = sha256_hex(
        actor.fingerprint() + "\n" + prompt.config_hash + "\n" + cache_salt);

    if (cache_) {
        if (auto entry = cache_->lookup(cache_key)) {
            ActorOutput out = entry->output;
            out.from_cache = true;
            return out;
        }
    }

    if (actor.kind == ActorKind::scripted) {
        ActorOutput out;
        out.item_id = prompt.item_id;
        auto canned = actor.script.find(prompt.item_id);
        if (canned != actor.script.end()) {
            out.answer_text = canned->second;
        } else if (actor.script_default) {
            out.answer_text = *actor.script_default;
        } else {
            fail(ErrorKind::provider, "scripted actor \"" + actor.name +
                                          "\" has no answer for item \"" +
                                          prompt.item_id + "\"");
        }
        if (cache_) cache_->store(cache_key, CacheEntry{out, ""});
        return out;
    }

    if (offline_)
        fail(ErrorKind::provider, "offline run hit a cold cache key " + cache_key +
                                      " (actor \"" + actor.name + "\", item \"" +
                                      prompt.item_id + "\")");

    return invoke_llm(actor, prompt, cache_key);
}

ActorOutput ActorInvoker::invoke_llm(const ActorConfig& actor,
                                     const promptkit::RenderedPrompt& prompt,
                                     const std::string& cache_key) {
    const ProviderAdapter& adapter = adapter_for(actor.provider);
    const char* credential = std::getenv(adapter.credential_env());
    if (credential == nullptr || *credential == '\0')
        fail(ErrorKind::credentials,
             std::string("missing credential: set ") + adapter.credential_env() +
                 " for provider \"" + actor.provider + "\"");

    const HttpRequest request =
        adapter.build_request(actor, prompt.text, credential);

    std::string last_error;
    const int attempts = 1 + actor.max_retries;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(actor.retry_backoff * (1 << (attempt - 1)));

        HttpResponse response;
        std::chrono::milliseconds latency{0};
        {
            LimiterGuard guard(limiter_for(actor.provider));
            const auto start = std::chrono::steady_clock::now();
            response = transport_->post(request);
            latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);
        }

        if (response.status == 401 || response.status == 403)
            fail(ErrorKind::credentials,
                 "provider \"" + actor.provider + "\" rejected the credential (HTTP " +
                     std::to_string(response.status) + ")");

        if (response.status >= 200 && response.status < 300) {
            const ProviderReply reply = adapter.parse_response(response.body);
            ActorOutput out;
            out.item_id = prompt.item_id;
            out.answer_text = reply.answer_text;
            out.input_tokens = reply.input_tokens;
            out.output_tokens = reply.output_tokens;
            out.latency = latency;
            out.cost_cents =
                compute_cost_cents(reply.input_tokens, reply.output_tokens,
                                   actor.price.value());
            if (cache_) cache_->store(cache_key, CacheEntry{out, response.body});
            return out;
        }

        last_error = "HTTP " + std::to_string(response.status);
        if (!response.body.empty())
            last_error += ": " + response.body.substr(0, 200);
        if (!retryable_status(response.status)) break;
    }

    fail(ErrorKind::provider, "actor \"" + actor.name + "\" failed after " +
                                  std::to_string(attempts) + " attempt(s): " +
                                  last_error);
}

std::optional<ActorOutput> recorded_answer(const dataset::EvalDataset& dataset,
                                           const std::string& item_id) {
    if (dataset.find_item(item_id) == nullptr)
        fail(ErrorKind::validation, "unknown item \"" + item_id + "\"");
    auto it = dataset.recorded_answers.find(item_id);
    if (it == dataset.recorded_answers.end()) return std::nullopt;
    ActorOutput out;
    out.item_id = item_id;
    out.answer_text = it->second.answer_text;
    return out;
}

nlohmann::json actor_config_to_json(const ActorConfig& actor) {
    json j{
        {"name", actor.name},
        {"kind", kind_to_string(actor.kind)},
        {"temperature", actor.temperature},
        {"thinking", thinking_to_string(actor.thinking)},
        {"request_timeout_ms", actor.request_timeout.count()},
        {"max_retries", actor.max_retries},
        {"retry_backoff_ms", actor.retry_backoff.count()},
    };
    if (!actor.provider.empty()) j["provider"] = actor.provider;
    if (!actor.model_id.empty()) j["model_id"] = actor.model_id;
    if (actor.price)
        j["price"] = {{"input_usd_per_1m_tokens", actor.price->input_usd_per_1m_tokens},
                      {"output_usd_per_1m_tokens", actor.price->output_usd_per_1m_tokens}};
    if (!actor.script.empty()) j["script"] = actor.script;
    if (actor.script_default) j["script_default"] = *actor.script_default;
    return j;
}

ActorConfig actor_config_from_json(const nlohmann::json& j) {
    ActorConfig actor;
    actor.name = j.value("name", std::string{});
    actor.kind = kind_from_string(j.value("kind", std::string("llm")));
    actor.provider = j.value("provider", std::string{});
    actor.model_id = j.value("model_id", std::string{});
    actor.temperature = j.value("temperature", 0.2);
    if (j.contains("thinking"))
        actor.thinking = thinking_from_string(j["thinking"].get<std::string>());
    if (j.contains("price") && !j["price"].is_null()) {
        PriceTable price;
        price.input_usd_per_1m_tokens =
            j["price"].value("input_usd_per_1m_tokens", 0.0);
        price.output_usd_per_1m_tokens =
            j["price"].value("output_usd_per_1m_tokens", 0.0);
        actor.price = price;
    }
    actor.request_timeout =
        std::chrono::milliseconds(j.value("request_timeout_ms", std::int64_t{30000}));
    actor.max_retries = j.value("max_retries", 2);
    actor.retry_backoff =
        std::chrono::milliseconds(j.value("retry_backoff_ms", std::int64_t{250}));
    if (j.contains("script"))
        actor.script = j["script"].get<std::map<std::string, std::string>>();
    if (j.contains("script_default") && !j["script_default"].is_null())
        actor.script_default = j["script_default"].get<std::string>();
    return actor;
}

ActorConfig load_actor_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open actor config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        fail(ErrorKind::config,
             "malformed actor config " + path.string() + ": " + e.what());
    }
    return actor_config_from_json(j);
}

PriceTable lookup_price(const nlohmann::json& table, const std::string& provider,
                        const std::string& model_id) {
    const std::string key = provider + "/" + model_id;
    if (!table.contains(key))
        fail(ErrorKind::config, "price table has no entry for \"" + key + "\"");
    PriceTable price;
    price.input_usd_per_1m_tokens =
        table[key].value("input_usd_per_1m_tokens", 0.0);
    price.output_usd_per_1m_tokens =
        table[key].value("output_usd_per_1m_tokens", 0.0);
    return price;
}

}  // namespace qaeval::actors
