#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bellscope {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Stream key from a seed and any number of counters.
inline std::uint64_t stream_key(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    std::uint64_t k = splitmix64(seed);
    for (auto c : counters) k = splitmix64(k ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return k;
}

inline std::mt19937_64 keyed_engine(std::uint64_t seed, std::initializer_list<std::uint64_t> counters) {
    return std::mt19937_64(stream_key(seed, counters));
}

}  // namespace bellscope
