#pragma once

#include <cstdint>

namespace rtsim {

// Portable deterministic PRNG (SplitMix64). The state transition is fixed by
// this implementation, not by the standard library, so draw sequences are
// identical across platforms and compilers for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, n). Plain modulo; the bias is ~n/2^64 and
    // irrelevant at simulation scale, while staying branch-free and portable.
    std::uint32_t uniform_int(std::uint32_t n) {
        return n == 0 ? 0 : static_cast<std::uint32_t>(next() % n);
    }

    std::uint64_t state() const { return state_; }

    // SplitMix64 finalizer as a standalone mixer, used for stream derivation.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    // Independent substream keyed by (seed, id): adding streams never
    // perturbs the draws of existing ones.
    static Rng stream(std::uint64_t seed, std::uint64_t id) {
        return Rng(mix(seed ^ mix(id * 0xD6E8FEB86659FD93ULL + 0xA5A5A5A5A5A5A5A5ULL)));
    }

private:
    std::uint64_t state_;
};

} // namespace rtsim
