#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mentorcore {

// Deterministic random stream with named splitting. Each component of a run
// (adversary, query decisions, action sampling, per-trial streams) owns an
// independent stream derived from the root seed, so swapping one component
// never perturbs the draws seen by another.
//
// std::mt19937_64 output is fully specified by the standard; the uniform
// doubles below avoid std distributions, whose sequences are
// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    // Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Unbiased via rejection.
    int uniform_int(int n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<int>(x % bound);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

    // Derive an independent stream identified by a label and index.
    Rng split(std::string_view label, std::uint64_t index = 0) {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (char c : label) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001b3ULL;
        }
        h ^= mix(index);
        return Rng(engine_() ^ h);
    }

    // Pure seed derivation, usable without an Rng instance. Parallel trial
    // loops use this so that stream assignment is independent of thread
    // scheduling.
    static std::uint64_t derive(std::uint64_t seed, std::string_view label,
                                std::uint64_t index = 0) {
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (char c : label) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001b3ULL;
        }
        return mix(mix(seed) ^ h ^ mix(index + 0x51ed2701ULL));
    }

private:
    // splitmix64 finalizer; decorrelates nearby seeds.
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace mentorcore
