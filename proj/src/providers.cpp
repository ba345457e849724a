#include "qaeval/providers.hpp"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "qaeval/errors.hpp"

namespace qaeval::actors {

namespace {

using nlohmann::json;

std::string base_url(const char* env_key, const std::string& fallback) {
    const char* value = std::getenv(env_key);
    return (value != nullptr && *value != '\0') ? std::string(value) : fallback;
}

json parse_body(const std::string& body, std::string_view provider) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::provider, std::string(provider) +
                                      " returned unparseable JSON: " + e.what());
    }
}

[[noreturn]] void unsupported_thinking(const ActorConfig& actor,
                                       std::string_view provider) {
    fail(ErrorKind::config, "thinking mode \"" + to_string(actor.thinking) +
                                "\" is unsupported for provider \"" +
                                std::string(provider) + "\" (actor \"" +
                                actor.name + "\")");
}

class OpenAiAdapter final : public ProviderAdapter {
public:
    std::string_view name() const override { return "openai"; }
    const char* credential_env() const override { return "OPENAI_API_KEY"; }

    void check_support(const ActorConfig& actor) const override {
        if (actor.thinking == ThinkingMode::dynamic)
            unsupported_thinking(actor, name());
    }

    HttpRequest build_request(const ActorConfig& actor,
                              const std::string& prompt_text,
                              const std::string& credential) const override {
        json body{
            {"model", actor.model_id},
            {"temperature", actor.temperature},
            {"messages", json::array({json{{"role", "user"},
                                           {"content", prompt_text}}})},
        };
        switch (actor.thinking) {
            case ThinkingMode::disabled: break;
            case ThinkingMode::minimal: body["reasoning_effort"] = "minimal"; break;
            case ThinkingMode::effort_low: body["reasoning_effort"] = "low"; break;
            case ThinkingMode::effort_medium:
                body["reasoning_effort"] = "medium";
                break;
            case ThinkingMode::effort_high: body["reasoning_effort"] = "high"; break;
            case ThinkingMode::dynamic: unsupported_thinking(actor, name());
        }
        HttpRequest request;
        request.url = base_url("OPENAI_BASE_URL", "https://api.openai.com") +
                      "/v1/chat/completions";
        request.headers = {{"Authorization", "Bearer " + credential},
                           {"Content-Type", "application/json"}};
        request.body = body.dump();
        request.timeout = actor.request_timeout;
        return request;
    }

    ProviderReply parse_response(const std::string& body) const override {
        const json j = parse_body(body, name());
        ProviderReply reply;
        try {
            reply.answer_text =
                j.at("choices").at(0).at("message").at("content").get<std::string>();
            reply.input_tokens = j.at("usage").at("prompt_tokens").get<std::int64_t>();
            reply.output_tokens =
                j.at("usage").at("completion_tokens").get<std::int64_t>();
        } catch (const json::exception& e) {
            fail(ErrorKind::provider,
                 std::string("unexpected openai response shape: ") + e.what());
        }
        return reply;
    }
};

class AnthropicAdapter final : public ProviderAdapter {
public:
    std::string_view name() const override { return "anthropic"; }
    const char* credential_env() const override { return "ANTHROPIC_API_KEY"; }

    void check_support(const ActorConfig& actor) const override {
        if (actor.thinking == ThinkingMode::dynamic ||
            actor.thinking == ThinkingMode::minimal)
            unsupported_thinking(actor, name());
    }

    HttpRequest build_request(const ActorConfig& actor,
                              const std::string& prompt_text,
                              const std::string& credential) const override {
        json body{
            {"model", actor.model_id},
            {"max_tokens", 4096},
            {"temperature", actor.temperature},
            {"messages", json::array({json{{"role", "user"},
                                           {"content", prompt_text}}})},
        };
        switch (actor.thinking) {
            case ThinkingMode::disabled: break;
            case ThinkingMode::effort_low:
                body["thinking"] = {{"type", "enabled"}, {"budget_tokens", 1024}};
                break;
            case ThinkingMode::effort_medium:
                body["thinking"] = {{"type", "enabled"}, {"budget_tokens", 8192}};
                break;
            case ThinkingMode::effort_high:
                body["thinking"] = {{"type", "enabled"}, {"budget_tokens", 32768}};
                break;
            default: unsupported_thinking(actor, name());
        }
        HttpRequest request;
        request.url = base_url("ANTHROPIC_BASE_URL", "https://api.anthropic.com") +
                      "/v1/messages";
        request.headers = {{"x-api-key", credential},
                           {"anthropic-version", "2023-06-01"},
                           {"Content-Type", "application/json"}};
        request.body = body.dump();
        request.timeout = actor.request_timeout;
        return request;
    }

    ProviderReply parse_response(const std::string& body) const override {
        const json j = parse_body(body, name());
        ProviderReply reply;
        try {
            for (const auto& block : j.at("content"))
                if (block.value("type", "") == "text")
                    reply.answer_text += block.at("text").get<std::string>();
            reply.input_tokens = j.at("usage").at("input_tokens").get<std::int64_t>();
            reply.output_tokens =
                j.at("usage").at("output_tokens").get<std::int64_t>();
        } catch (const json::exception& e) {
            fail(ErrorKind::provider,
                 std::string("unexpected anthropic response shape: ") + e.what());
        }
        return reply;
    }
};

class GoogleAdapter final : public ProviderAdapter {
public:
    std::string_view name() const override { return "google"; }
    const char* credential_env() const override { return "GEMINI_API_KEY"; }

    void check_support(const ActorConfig& actor) const override {
        switch (actor.thinking) {
            case ThinkingMode::disabled:
            case ThinkingMode::minimal:
            case ThinkingMode::dynamic:
                return;
            default: unsupported_thinking(actor, name());
        }
    }

    HttpRequest build_request(const ActorConfig& actor,
                              const std::string& prompt_text,
                              const std::string& credential) const override {
        json generation{{"temperature", actor.temperature}};
        switch (actor.thinking) {
            case ThinkingMode::disabled:
                generation["thinkingConfig"] = {{"thinkingBudget", 0}};
                break;
            case ThinkingMode::minimal:
                generation["thinkingConfig"] = {{"thinkingBudget", 128}};
                break;
            case ThinkingMode::dynamic:
                generation["thinkingConfig"] = {{"thinkingBudget", -1}};
                break;
            default: unsupported_thinking(actor, name());
        }
        json body{
            {"contents", json::array({json{
                             {"parts", json::array({json{{"text", prompt_text}}})}}})},
            {"generationConfig", generation},
        };
        HttpRequest request;
        request.url =
            base_url("GEMINI_BASE_URL", "https://generativelanguage.googleapis.com") +
            "/v1beta/models/" + actor.model_id + ":generateContent";
        request.headers = {{"x-goog-api-key", credential},
                           {"Content-Type", "application/json"}};
        request.body = body.dump();
        request.timeout = actor.request_timeout;
        return request;
    }

    ProviderReply parse_response(const std::string& body) const override {
        const json j = parse_body(body, name());
        ProviderReply reply;
        try {
            const auto& content = j.at("candidates").at(0).at("content");
            for (const auto& part : content.at("parts"))
                if (part.contains("text"))
                    reply.answer_text += part.at("text").get<std::string>();
            const auto& usage = j.at("usageMetadata");
            reply.input_tokens = usage.at("promptTokenCount").get<std::int64_t>();
            reply.output_tokens =
                usage.value("candidatesTokenCount", std::int64_t{0});
        } catch (const json::exception& e) {
            fail(ErrorKind::provider,
                 std::string("unexpected google response shape: ") + e.what());
        }
        return reply;
    }
};

}  // namespace

const ProviderAdapter& adapter_for(const std::string& provider) {
    static const OpenAiAdapter openai;
    static const AnthropicAdapter anthropic;
    static const GoogleAdapter google;
    if (provider == "openai") return openai;
    if (provider == "anthropic") return anthropic;
    if (provider == "google" || provider == "gemini") return google;
    fail(ErrorKind::config, "unknown provider \"" + provider +
                                "\" (expected openai, anthropic or google)");
}

}  // namespace qaeval::actors
