#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qaeval {

// Failure categories drive CLI exit codes: io/credentials map to 2
// (environment), everything else to 1 (domain).
enum class ErrorKind {
    io,
    credentials,
    config,
    validation,
    provider,
    parse,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string message) {
    throw Error(kind, std::move(message));
}

}  // namespace qaeval
