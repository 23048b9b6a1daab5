#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <string_view>

namespace coffee {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kSubjectiveCount = 8;

// Canonical attribute order for every matrix, distance and wire format.
inline constexpr std::array<std::string_view, kSubjectiveCount> kSubjectiveNames = {
    "aroma", "flavour", "body", "sweetness", "acidity", "balance", "uniformity", "aftertaste"};

using SubjectiveVector = std::array<double, kSubjectiveCount>;

// Scores live in (0, 10]; the floor is the smallest score we ever emit.
inline constexpr double kScoreFloor = 0.01;
inline constexpr double kScoreCeiling = 10.0;

inline double clamp_score(double value) {
    if (!(value > 0.0)) return kScoreFloor;  // also catches NaN
    return value > kScoreCeiling ? kScoreCeiling : value;
}

inline bool valid_score(double value) { return value > 0.0 && value <= kScoreCeiling; }

}  // namespace coffee
