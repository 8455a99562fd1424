#pragma once

#include <cstdint>

namespace refref {

/// Counter-based random stream: every draw is a pure function of
/// (seed, stream, counter), so parallel callers that own disjoint
/// streams produce identical sequences regardless of scheduling.
class Rng {
public:
    Rng() = default;
    Rng(uint64_t seed, uint64_t stream) {
        state_ = mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull));
        if (state_ == 0) state_ = 0x853c49e6748fea9bull;
    }

    uint64_t next_u64() {
        state_ = mix(state_ + 0x9e3779b97f4a7c15ull);
        return state_;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    /// Uniform in [0, 1).
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

private:
    static uint64_t mix(uint64_t z) {
        // splitmix64 finalizer
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint64_t state_ = 0x853c49e6748fea9bull;
};

}  // namespace refref
