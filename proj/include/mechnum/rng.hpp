#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mechnum {

/// Seeded random source. All experiment randomness flows through one of
/// these so that a run is a pure function of its seed. Draws are produced
/// by inverse-CDF transforms of raw 53-bit uniforms, which keeps the
/// stream independent of standard-library distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Exponential with the given mean (inverse CDF: -mean*log(1-u)).
    double exponential(double mean = 1.0) {
        return -mean * std::log1p(-uniform());
    }

    /// Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n) {
        auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    /// Independent stream for a sub-task, derived from this seed and a tag.
    Rng fork(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

    /// splitmix64 finalizer; used to derive substream seeds.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

} // namespace mechnum
