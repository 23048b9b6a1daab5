#pragma once

#include "coffee/dataset.hpp"
#include "coffee/encoder.hpp"
#include "coffee/forest.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace coffee {

// Diagnostics only: the model inputs stay fixed to the nine objective
// properties whatever these rank.

struct UnivariateScores {
    Matrix per_target;               // columns x targets, regression F statistic
    Vector mean;                     // per column, mean over targets
    std::vector<bool> zero_variance; // flagged columns score 0
};

// F = r^2 / (1 - r^2) * (n - 2) for each (column, target) pair; a perfect
// linear fit scores +inf.
UnivariateScores univariate_scores(const Matrix& x, const Matrix& y);

struct TreeImportance {
    Vector importance;     // sums to 1 unless degenerate
    bool degenerate = false;
};

TreeImportance tree_importance(const Matrix& x, const Matrix& y, const ForestConfig& config = {});

struct PearsonMatrix {
    std::vector<std::string> attributes;  // 9 objective then 8 subjective
    Matrix values;
    std::vector<bool> zero_variance;      // rows/columns forced to 0 off the diagonal
};

// Categorical attributes enter as the index of their label in the sorted
// vocabulary of the given records.
PearsonMatrix pearson_matrix(std::span<const CoffeeRecord> records);
void write_pearson_tsv(std::ostream& out, const PearsonMatrix& m);

// Encoded objective columns plus the three altitude columns of the source
// file (absent cells imputed with the column mean, then standardized).
EncodedMatrix selection_candidates(std::span<const RawReview> raw, std::span<const CoffeeRecord> records);

}  // namespace coffee
