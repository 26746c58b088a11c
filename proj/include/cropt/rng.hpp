#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace cropt {

// Deterministic seed derivation. Experiment cells, BO instances, and
// per-iteration inner optimizers all hash their coordinates off one master
// seed so that runs replay bit-exactly regardless of execution order.
inline std::uint64_t seed_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t seed, std::uint64_t salt) {
    return seed_mix(seed ^ seed_mix(salt));
}

inline std::uint64_t seed_combine(std::uint64_t seed, std::string_view salt) {
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char c : salt) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return seed_combine(seed, h);
}

// mt19937_64 with hand-rolled real/integer draws. The standard distributions
// are implementation-defined, which would break byte-identical replays across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed_mix(seed)) {}

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
    std::uint64_t integer(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace cropt
