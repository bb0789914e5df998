#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace archface {

// Seeded generator with platform-independent derived distributions.
//
// std::mt19937_64 output is fully specified by the standard, but the
// std::*_distribution adaptors are not, so anything that must be
// reproducible byte-for-byte (fold assignment, synthetic corpora) draws
// through these helpers instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, bound), unbiased via rejection.
    std::uint64_t below(std::uint64_t bound);

    // Box-Muller; the spare deviate is cached.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace archface
