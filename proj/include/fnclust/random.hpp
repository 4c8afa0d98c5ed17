#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fnclust {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a list of counters.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t s = mix64(base);
    for (auto c : counters) s = mix64(s ^ mix64(c + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> counters = {}) {
    return Rng(derive_seed(base, counters));
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double normal(Rng& rng, double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace fnclust
