#pragma once
#include <cstdint>
#include <random>

namespace bip {

// splitmix64 step: the documented seed-splitting rule. All randomness in the
// artifact flows from one root seed; independent streams are derived as
// split_seed(root, stream_index) and never shared.
inline std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t s = root;
    (void)splitmix64(s);          // decorrelate trivially related roots
    s ^= 0xD1342543DE82EF95ull * (stream + 1);
    return splitmix64(s);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace bip
