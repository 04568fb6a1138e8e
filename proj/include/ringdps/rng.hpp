#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ringdps {

// Stable 64-bit seed mixer (splitmix64 finalizer chained over the inputs).
// Used to derive independent sub-stream seeds from (seed, tag, index...)
// tuples so that frames, calibration passes and per-click engines never
// share a stream by accident.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(a ^ mix_seed(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b) ^ mix_seed(c));
}

// Named sub-stream tags; plain constants so seeds stay platform independent.
namespace stream_tag {
inline constexpr std::uint64_t frame = 0xF7A3E001;
inline constexpr std::uint64_t calibration = 0xCA11B001;
inline constexpr std::uint64_t afterpulse = 0xAF7E9001;
inline constexpr std::uint64_t extinction = 0xE7C7D001;
inline constexpr std::uint64_t sweep_point = 0x53EEB001;
}  // namespace stream_tag

// All randomness flows through mt19937_64 with hand-rolled transforms, so
// sequences are identical across standard libraries (std::distributions are
// not portable).
class rng {
public:
    explicit rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Exponential with unit mean; log1p keeps precision near u = 0.
    double exponential() {
        return -std::log1p(-uniform());
    }

    // Fair bit (used for differential key bits).
    int bit() {
        return static_cast<int>(engine_() >> 63);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ringdps
