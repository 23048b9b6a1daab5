#include "coffee/kde.hpp"

#include "coffee/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace coffee {

KdeModel fit_kde(const Matrix& data, std::uint64_t seed) {
    if (data.rows() < 2) throw std::invalid_argument("fit_kde: at least two rows are required");
    if (data.cols() < 1) throw std::invalid_argument("fit_kde: data has no columns");
    if (data.hasNaN()) throw std::invalid_argument("fit_kde: NaN in data");

    KdeModel kde;
    kde.data = data;
    kde.seed = seed;
    const auto n = static_cast<double>(data.rows());
    const auto d = static_cast<double>(data.cols());
    const double factor = std::pow(n, -1.0 / (d + 4.0));
    kde.bandwidth.resize(data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double mean = data.col(c).mean();
        const double sd = std::sqrt((data.col(c).array() - mean).square().sum() / (n - 1.0));
        double h = factor * sd;
        if (!(h >= kBandwidthFloor)) {
            kde.warnings.push_back("attribute " + std::to_string(c) + " has (near) zero variance; bandwidth floored");
            h = kBandwidthFloor;
        }
        kde.bandwidth[c] = h;
    }
    return kde;
}

double kde_density(const KdeModel& kde, std::span<const double> point) {
    const auto d = kde.data.cols();
    if (static_cast<Eigen::Index>(point.size()) != d) throw std::invalid_argument("kde_density: dimension mismatch");
    double log_norm = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) log_norm -= std::log(kde.bandwidth[c] * std::sqrt(2.0 * std::numbers::pi));
    double sum = 0.0;
    for (Eigen::Index r = 0; r < kde.data.rows(); ++r) {
        double q = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) {
            const double z = (point[static_cast<std::size_t>(c)] - kde.data(r, c)) / kde.bandwidth[c];
            q += z * z;
        }
        sum += std::exp(log_norm - 0.5 * q);
    }
    return sum / static_cast<double>(kde.data.rows());
}

Matrix sample_users(const KdeModel& kde, std::size_t n) {
    Rng rng(derive_seed(kde.seed, {0x7573657273ULL, n}));
    Matrix out(static_cast<Eigen::Index>(n), kde.data.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const auto row = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(kde.data.rows())));
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            out(i, c) = clamp_score(kde.data(row, c) + kde.bandwidth[c] * rng.normal());
    }
    return out;
}

}  // namespace coffee
