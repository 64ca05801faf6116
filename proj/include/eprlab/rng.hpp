// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "eprlab/angle.hpp"

namespace eprlab {

/// SplitMix64 finalizer: the one mixing function used to derive every
/// random value in a run.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Substream identifiers. Every draw in a run is addressed by
/// (master seed, stream, item index, draw counter); any partition of items
/// across workers therefore reproduces identical values.
enum class Stream : std::uint64_t {
    source = 0,     ///< pair emission: lambda and inter-emission gap
    station_1 = 1,  ///< station-1 outcome (also the single joint-regime draw)
    station_2 = 2,  ///< station-2 outcome
    switching = 3,  ///< per-pair setting selection, both stations
    jitter_1 = 4,   ///< station-1 timing smear
    jitter_2 = 5,   ///< station-2 timing smear
};

/// Counter-based generator for one item of one substream. Stateless apart
/// from the draw counter: draw k of item i is mix64(h(seed, stream, i) ^ k).
class CounterRng {
public:
    CounterRng(std::uint64_t seed, Stream stream, std::uint64_t index)
        : base_(mix64(mix64(mix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index)) {}

    std::uint64_t next_u64() { return mix64(base_ ^ draw_++); }

    /// Uniform on [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe under log().
    double next_positive_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double next_exponential(double mean) { return -mean * std::log(next_positive_unit()); }

    /// Gaussian by Box-Muller; consumes exactly two draws.
    double next_gaussian(double sigma) {
        const double u1 = next_positive_unit();
        const double u2 = next_unit();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    /// Uniform index in [0, n).
    std::size_t next_index(std::size_t n) {
        const auto k = static_cast<std::size_t>(next_unit() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

private:
    std::uint64_t base_;
    std::uint64_t draw_ = 0;
};

}  // namespace eprlab
