#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace balrec {

// All randomness in a run flows from one master seed. Component streams are
// derived as  stream(master, name) = splitmix64(master ^ fnv1a64(name)),
// so adding a stream never perturbs existing ones and runs are reproducible
// from the master seed alone.

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    return splitmix64(master ^ fnv1a64(stream));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream) {
    return std::mt19937_64(derive_seed(master, stream));
}

}  // namespace balrec
