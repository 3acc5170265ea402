#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace liftlab::keyed {

// SplitMix64 finaliser.
inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash of a key tuple; every draw of a counter-based stream is a pure
// function of its key, so results do not depend on evaluation order.
inline std::uint64_t hash(std::initializer_list<std::uint64_t> key) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (std::uint64_t k : key) h = mix(h ^ mix(k));
    return h;
}

// Uniform on [0, 1).
inline double uniform(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Standard normal from two independent hashes (Box-Muller).
inline double normal(std::uint64_t h1, std::uint64_t h2) {
    const double u1 = 1.0 - uniform(h1);  // (0, 1]
    const double u2 = uniform(h2);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace liftlab::keyed
