#include "coffee/partition.hpp"

#include "coffee/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coffee {

std::size_t hidden_count(std::size_t n, double m) {
    if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("partition: m must lie in [0, 1]");
    const double total = static_cast<double>(n);
    if (m <= 0.5) return static_cast<std::size_t>(std::llround(m * total));
    return n - static_cast<std::size_t>(std::llround((1.0 - m) * total));
}

DatasetPartition partition(std::span<const CoffeeRecord> records, double m, std::uint64_t seed) {
    const std::size_t n = records.size();
    const std::size_t hidden = hidden_count(n, m);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = records[i].id;
    std::sort(order.begin(), order.end());
    Rng rng(derive_seed(seed, {0x7061727469ULL}));
    rng.shuffle(order.begin(), order.end());

    DatasetPartition p;
    p.m = m;
    p.seed = seed;
    const auto split = m <= 0.5 ? order.begin() + static_cast<std::ptrdiff_t>(hidden)
                                : order.end() - static_cast<std::ptrdiff_t>(hidden);
    if (m <= 0.5) {
        p.hidden_ids.assign(order.begin(), split);
        p.reviewed_ids.assign(split, order.end());
    } else {
        p.reviewed_ids.assign(order.begin(), split);
        p.hidden_ids.assign(split, order.end());
    }
    std::sort(p.hidden_ids.begin(), p.hidden_ids.end());
    std::sort(p.reviewed_ids.begin(), p.reviewed_ids.end());
    return p;
}

}  // namespace coffee
