#include "coffee/feature_selection.hpp"
#include "coffee/rng.hpp"
#include "test_data.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

using namespace coffee;

TEST(Univariate, AffineCopyOfTargetScoresHighest) {
    Rng rng(1);
    Matrix x(80, 4), y(80, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.uniform(6, 9);
    x.col(2) = 3.0 * y.col(0).array() - 1.0;
    const auto s = univariate_scores(x, y);
    for (Eigen::Index c = 0; c < 4; ++c)
        if (c != 2) EXPECT_GT(s.per_target(2, 0), s.per_target(c, 0));
}

TEST(Univariate, ConstantColumnScoresZero) {
    const auto records = coffee::test::small_dataset(100);
    const auto m = encode(records);
    Matrix x(m.rows(), m.cols() + 1);
    x << m.values, Vector::Constant(m.rows(), 2.0);
    const auto s = univariate_scores(x, subjective_matrix(records));
    EXPECT_TRUE(s.zero_variance.back());
    EXPECT_EQ(s.mean[x.cols() - 1], 0.0);
    EXPECT_TRUE(s.mean.allFinite() || s.mean.maxCoeff() == std::numeric_limits<double>::infinity());
}

TEST(Pearson, SymmetricUnitDiagonalPositiveSemidefinite) {
    const auto p = pearson_matrix(coffee::test::small_dataset(300));
    ASSERT_EQ(p.attributes.size(), 17u);
    ASSERT_EQ(p.values.rows(), 17);
    EXPECT_TRUE(p.values == p.values.transpose());
    for (Eigen::Index i = 0; i < 17; ++i) EXPECT_EQ(p.values(i, i), 1.0);
    EXPECT_LE(p.values.cwiseAbs().maxCoeff(), 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(p.values);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
    std::ostringstream out;
    write_pearson_tsv(out, p);
    const auto text = out.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 18);
}

TEST(Selection, CandidatesAddThreeAltitudeColumns) {
    const std::string csv = coffee::test::review_csv({{}, {}, {}, {}});
    std::string with_altitude;
    std::istringstream lines(csv);
    std::string line;
    bool header = true;
    int row = 0;
    while (std::getline(lines, line)) {
        if (header) {
            with_altitude += line + ",altitude_low_meters,altitude_high_meters,altitude_mean_meters\n";
            header = false;
        } else {
            with_altitude += line + (row == 1 ? ",,," : "," + std::to_string(1000 + row * 100) + ",1500,1400") + "\n";
            ++row;
        }
    }
    std::istringstream in(with_altitude);
    auto cols = required_review_columns();
    const auto raw = parse_reviews(in, cols);
    auto records = clean(raw);
    const auto m = selection_candidates(raw, records);
    EXPECT_EQ(m.cols(), encode(records).cols() + 3);
    EXPECT_TRUE(m.values.allFinite());
}
