#pragma once

#include "coffee/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace coffee {

struct DatasetPartition {
    std::vector<std::size_t> reviewed_ids;  // ascending
    std::vector<std::size_t> hidden_ids;    // ascending
    double m = 0.0;
    std::uint64_t seed = 0;
};

// Number of hidden records for fraction m of n: round(m * n), with exact
// halves resolved so that m and 1 - m always split n completely.
std::size_t hidden_count(std::size_t n, double m);

/// Uniform split without replacement. One seeded permutation is shared by
/// every m: fractions up to one half hide a prefix of it, larger fractions a
/// suffix, so partitions for m and 1 - m under one seed are complementary.
DatasetPartition partition(std::span<const CoffeeRecord> records, double m, std::uint64_t seed);

}  // namespace coffee
