#pragma once

#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <random>
#include <utility>

namespace coffee {

// Portable random source. The standard distributions are implementation
// defined, so everything above the raw engine is implemented here to keep
// seeded runs byte-identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

    template <class It>
    void shuffle(It first, It last) {
        auto n = static_cast<std::uint64_t>(std::distance(first, last));
        for (std::uint64_t i = n; i > 1; --i) {
            auto j = uniform_index(i);
            using std::swap;
            swap(*(first + static_cast<std::ptrdiff_t>(i - 1)),
                 *(first + static_cast<std::ptrdiff_t>(j)));
        }
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

// Derives an independent stream seed from a master seed and a key path,
// e.g. derive_seed(seed, {tree_index}) or derive_seed(seed, {m_index, rep}).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

}  // namespace coffee
