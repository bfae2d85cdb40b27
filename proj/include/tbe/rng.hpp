#pragma once
// Deterministic RNG stream derivation. Each logical stream (sample index,
// channel, ...) gets its own engine seeded via splitmix64 so parallel and
// serial execution see identical draws.

#include <cstdint>
#include <random>

namespace tbe {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_stream(uint64_t seed, uint64_t stream_id) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x51ed2701)));
}

}  // namespace tbe
