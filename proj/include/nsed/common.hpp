#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nsed {

// Bad user input: malformed files, violated preconditions on CLI arguments,
// out-of-alphabet labels. Maps to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken internal contract: invalid mappings, shape mismatches, corrupted
// state. Maps to exit code 2.
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

inline void contract(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

// FNV-1a, used for artifact hashes in run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace nsed
