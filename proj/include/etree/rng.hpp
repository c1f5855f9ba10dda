#pragma once
#include <cstdint>
#include <random>
#include <vector>

namespace etree {

// SplitMix64 finalizer. Used to derive statistically independent RNG
// substreams from integer keys.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hierarchical stream key. child(tag) derives a substream that depends only
// on the key path, never on execution order or thread count, so any unit of
// work keyed this way is reproducible under arbitrary scheduling.
struct StreamKey {
    std::uint64_t state = 0;

    StreamKey child(std::uint64_t tag) const {
        return StreamKey{mix64(state ^ mix64(tag + 0x632be59bd9b4e019ULL))};
    }
    std::mt19937_64 engine() const { return std::mt19937_64{state}; }
};

// Unbiased draw from {0, ..., n-1} via rejection (no modulo bias).
inline std::uint64_t uniform_below(std::mt19937_64& g, std::uint64_t n) {
    const std::uint64_t threshold = (0ULL - n) % n;
    for (;;) {
        const std::uint64_t r = g();
        if (r >= threshold) return r % n;
    }
}

// Uniform random permutation of {0, ..., m-1} (Fisher-Yates). Hand-rolled so
// results do not depend on the standard library's shuffle implementation.
inline std::vector<int> random_permutation(int m, std::mt19937_64& g) {
    std::vector<int> p(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = m - 1; i > 0; --i) {
        const int j = static_cast<int>(uniform_below(g, static_cast<std::uint64_t>(i) + 1));
        std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
}

}  // namespace etree
