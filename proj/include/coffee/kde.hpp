#pragma once

#include "coffee/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace coffee {

inline constexpr double kBandwidthFloor = 1e-3;

/// Gaussian product-kernel density estimate with a diagonal bandwidth.
struct KdeModel {
    Matrix data;       // n x d training rows
    Vector bandwidth;  // per attribute, > 0
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Scott's rule per attribute: n^(-1/(d+4)) * sample standard deviation,
// floored at kBandwidthFloor.
KdeModel fit_kde(const Matrix& data, std::uint64_t seed);

double kde_density(const KdeModel& kde, std::span<const double> point);

// Mixture sampling: a uniformly drawn training row plus N(0, h^2) noise per
// attribute, clamped into (0, 10]. Determined by the model seed and n.
Matrix sample_users(const KdeModel& kde, std::size_t n = 100);

}  // namespace coffee
