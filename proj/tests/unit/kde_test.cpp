#include "coffee/kde.hpp"
#include "coffee/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace coffee;

namespace {

Matrix scores(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std::clamp(7.5 + 0.4 * rng.normal(), 0.0, 10.0);
    return m;
}

}  // namespace

TEST(Kde, OneDimensionalDensityIntegratesToOne) {
    const auto kde = fit_kde(scores(60, 1, 1), 0);
    const double h = kde.bandwidth[0];
    const double lo = kde.data.minCoeff() - 6 * h, hi = kde.data.maxCoeff() + 6 * h;
    const int steps = 20000;
    const double dx = (hi - lo) / steps;
    double total = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double x = lo + dx * i;
        total += kde_density(kde, std::span<const double>(&x, 1)) * ((i == 0 || i == steps) ? 0.5 : 1.0);
    }
    EXPECT_NEAR(total * dx, 1.0, 1e-3);
}

TEST(Kde, ScottBandwidthWithFloor) {
    const Matrix data = scores(50, 8, 2);
    auto kde = fit_kde(data, 0);
    const double factor = std::pow(50.0, -1.0 / 12.0);
    for (Eigen::Index c = 0; c < 8; ++c) {
        const double mean = data.col(c).mean();
        const double sd = std::sqrt((data.col(c).array() - mean).square().sum() / 49.0);
        EXPECT_NEAR(kde.bandwidth[c], factor * sd, 1e-12);
    }
    Matrix flat = data;
    flat.col(3).setConstant(10.0);
    kde = fit_kde(flat, 0);
    EXPECT_EQ(kde.bandwidth[3], kBandwidthFloor);
    EXPECT_FALSE(kde.warnings.empty());
    EXPECT_THROW(fit_kde(data.topRows(1), 0), std::invalid_argument);
}

TEST(Kde, DensityFallsAwayFromTheData) {
    Matrix one(2, 1);
    one << 5.0, 5.0;
    const auto kde = fit_kde(one, 0);
    double previous = 1e300;
    for (double x = 5.0; x < 5.005; x += 0.0005) {
        const double d = kde_density(kde, std::span<const double>(&x, 1));
        EXPECT_LT(d, previous);
        previous = d;
    }
}

TEST(Kde, TinyBandwidthSamplesReproduceTrainingRows) {
    auto kde = fit_kde(scores(30, 8, 3), 9);
    kde.bandwidth.setConstant(1e-9);
    const Matrix users = sample_users(kde, 40);
    for (Eigen::Index u = 0; u < users.rows(); ++u) {
        double best = 1e300;
        for (Eigen::Index r = 0; r < kde.data.rows(); ++r) best = std::min(best, (users.row(u) - kde.data.row(r)).norm());
        EXPECT_LT(best, 1e-7);
    }
}

TEST(Kde, SamplesAreInRangeAndSeeded) {
    const Matrix data = scores(200, 8, 4);
    const Matrix a = sample_users(fit_kde(data, 1), 100);
    ASSERT_EQ(a.rows(), 100);
    ASSERT_EQ(a.cols(), 8);
    EXPECT_GT(a.minCoeff(), 0.0);
    EXPECT_LE(a.maxCoeff(), 10.0);
    EXPECT_TRUE(a == sample_users(fit_kde(data, 1), 100));
    EXPECT_FALSE(a == sample_users(fit_kde(data, 2), 100));
}

TEST(Kde, ClampsNearTheCeiling) {
    Matrix top(5, 2);
    top.setConstant(10.0);
    top(0, 0) = 9.0;
    const Matrix u = sample_users(fit_kde(top, 0), 500);
    EXPECT_LE(u.maxCoeff(), 10.0);
}
