#include "coffee/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace coffee {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    // Rejection sampling over the largest multiple of n.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t draw = next();
    while (draw >= limit) draw = next();
    return draw % n;
}

double Rng::normal() {
    if (spare_) {
        double value = *spare_;
        spare_.reset();
        return value;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t state = splitmix64(seed);
    for (auto key : path) state = splitmix64(state ^ splitmix64(key + 0x632be59bd9b4e019ULL));
    return state;
}

}  // namespace coffee
