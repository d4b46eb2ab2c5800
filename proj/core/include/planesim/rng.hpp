#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace planesim {

// Deterministic RNG. mt19937_64 output is pinned by the standard, but the
// std distributions are not, so sampling is done by hand here. Every
// simulation component derives its own stream from (scenario seed, salt) so
// event ordering never perturbs random sequences.
class Rng {
  public:
    Rng() : engine_(0x9e3779b97f4a7c15ull) {}
    explicit Rng(uint64_t seed) : engine_(mix(seed)) {}
    Rng(uint64_t seed, uint64_t salt) : engine_(mix(seed ^ mix(salt))) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, n). Rejection-sampled to avoid modulo bias.
    uint64_t next_below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    uint32_t next_u32() { return static_cast<uint32_t>(engine_() >> 32); }

    double next_double() { // [0,1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool chance(double p) { return next_double() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    static uint64_t mix(uint64_t x) { // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

  private:
    std::mt19937_64 engine_;
};

// Stable 64-bit hash for ECMP-style path selection; never use std::hash for
// anything that must reproduce across builds.
inline uint64_t stable_hash64(uint64_t a, uint64_t b = 0, uint64_t c = 0, uint64_t d = 0) {
    uint64_t h = 0x2545f4914f6cdd1dull;
    h = Rng::mix(h ^ a);
    h = Rng::mix(h ^ b);
    h = Rng::mix(h ^ c);
    h = Rng::mix(h ^ d);
    return h;
}

} // namespace planesim
