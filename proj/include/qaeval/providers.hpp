#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "qaeval/actors.hpp"

namespace qaeval::actors {

struct ProviderReply {
    std::string answer_text;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
};

// One request/response mapping per provider family. Adding a provider means
// adding an adapter; the invoker and runner stay untouched.
class ProviderAdapter {
public:
    virtual ~ProviderAdapter() = default;

    virtual std::string_view name() const = 0;
    virtual const char* credential_env() const = 0;

    // Rejects thinking modes the family cannot express.
    virtual void check_support(const ActorConfig& actor) const = 0;

    virtual HttpRequest build_request(const ActorConfig& actor,
                                      const std::string& prompt_text,
                                      const std::string& credential) const = 0;
    virtual ProviderReply parse_response(const std::string& body) const = 0;
};

const ProviderAdapter& adapter_for(const std::string& provider);

}  // namespace qaeval::actors
