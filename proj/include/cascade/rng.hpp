#pragma once

#include <cstdint>

namespace cascade {

// Counter-based generator: value(i) = splitmix64(seed_mix + i * GAMMA).
// Stateless apart from the counter, so parallel workers can draw from
// disjoint, reproducible streams (stream = new seed derived from (seed, tag)).
// Constants are the reference SplitMix64 ones; any port that reproduces
// splitmix64 reproduces every artifact byte-for-byte.
class CounterRng {
   public:
    static constexpr std::uint64_t GAMMA = 0x9e3779b97f4a7c15ull;

    explicit CounterRng(std::uint64_t seed) : base_(mix(seed + GAMMA)) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() { return mix(base_ + (++counter_) * GAMMA); }

    // Uniform in [0,1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Derive an independent stream for a tagged sub-task.
    CounterRng stream(std::uint64_t tag) const {
        CounterRng r(0);
        r.base_ = mix(base_ ^ (tag * 0xd1342543de82ef95ull + GAMMA));
        return r;
    }

    std::uint64_t counter() const { return counter_; }

   private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// Deterministic hash-noise in [-1,1]: used for the bounded frequency
// corrections. Pure function of (seed, tag, a, b).
inline double hash_noise(std::uint64_t seed, std::uint64_t tag, std::int64_t a, std::int64_t b) {
    std::uint64_t z = CounterRng::mix(seed + 0x6a09e667f3bcc909ull);
    z = CounterRng::mix(z ^ (tag * CounterRng::GAMMA));
    z = CounterRng::mix(z ^ static_cast<std::uint64_t>(a) * 0xbf58476d1ce4e5b9ull);
    z = CounterRng::mix(z ^ static_cast<std::uint64_t>(b) * 0x94d049bb133111ebull);
    return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace cascade
