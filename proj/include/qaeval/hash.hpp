#pragma once

#include <string>
#include <string_view>

namespace qaeval {

// SHA-256 of `data`, lowercase hex. Used for prompt hashes, actor
// fingerprints, cache keys and run ids; all of those must be stable
// across processes and platforms.
std::string sha256_hex(std::string_view data);

}  // namespace qaeval
