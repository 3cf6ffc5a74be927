#pragma once

#include <cstdint>
#include <random>

namespace gsareg {

/// Finalizing mixer from the splitmix64 generator; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a master seed and up to two stream ids.
/// Used throughout so that replications, draws, and sub-streams are reproducible
/// regardless of evaluation order or thread count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ splitmix64(stream));
    h = splitmix64(h ^ splitmix64(index ^ 0xbb67ae8584caa73bULL));
    return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

}  // namespace gsareg
