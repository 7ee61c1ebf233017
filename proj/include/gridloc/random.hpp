#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gridloc {

/// Seeded random stream. The engine is std::mt19937_64, whose output sequence
/// is fixed by the standard; the conversions below are written out so that
/// results do not depend on the standard library's distribution classes.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Seed of the independent stream for one Monte-Carlo trial.
    static std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
        // splitmix64 finalizer decorrelates neighbouring (seed, trial) pairs
        std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (trial + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static RandomStream for_trial(std::uint64_t master_seed, std::uint64_t trial) {
        return RandomStream(trial_seed(master_seed, trial));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n) by rejection, n > 0.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal draw via the Box-Muller transform (no cached pair).
    double standard_normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

private:
    std::mt19937_64 engine_;
};

} // namespace gridloc
