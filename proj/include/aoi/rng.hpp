#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aoi {

// SplitMix64 mixer; used to derive independent stream seeds from a master
// seed so that runs, delay streams and policy initialisation never share
// engine state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master + 0x9E3779B97F4A7C15ull * (stream + 1));
}

/// Seeded random source. All transforms are implemented on top of the raw
/// 64-bit engine output so a given seed produces the same stream on every
/// platform (std::*_distribution would not guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random mantissa bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller (cosine branch, no cached spare).
    double gaussian() {
        const double two_pi = 6.283185307179586476925286766559;
        double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace aoi
