#pragma once

#include "coffee/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace coffee {

struct ForestConfig {
    std::size_t n_trees = 20;
    std::optional<std::size_t> max_depth;           // unbounded when empty
    std::size_t min_samples_leaf = 1;
    std::optional<std::size_t> features_per_split;  // all columns when empty
    bool bootstrap = true;
    std::uint64_t seed = 0;

    bool operator==(const ForestConfig&) const = default;
};

void to_json(nlohmann::json& j, const ForestConfig& c);
void from_json(const nlohmann::json& j, ForestConfig& c);

/// Multi-output CART regression tree. Splits maximise the variance reduction
/// summed over all targets; leaves predict the mean target row.
class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int leaf = -1;  // row into leaf_values_
    };

    // rows may contain duplicates (bootstrap draws).
    static RegressionTree fit(const Matrix& x, const Matrix& y, std::vector<std::size_t> rows,
                              const ForestConfig& config, std::uint64_t seed, Vector& importance);

    // Folds this tree into a running mean; count is this tree's 1-based position.
    void predict_into(const Matrix& x, Matrix& mean, double count) const;
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t depth() const;

    nlohmann::json to_json() const;
    static RegressionTree from_json(const nlohmann::json& j, Eigen::Index targets);

private:
    friend class TreeBuilder;
    std::vector<Node> nodes_;
    Matrix leaf_values_;  // leaves x targets
};

class RandomForest {
public:
    static RandomForest fit(const Matrix& x, const Matrix& y, const ForestConfig& config);

    Matrix predict(const Matrix& x) const;

    /// Mean over trees of each tree's normalised impurity decrease, scaled to
    /// sum to one. All zeros when no tree made a variance-reducing split.
    const Vector& feature_importance() const { return importance_; }
    bool importance_degenerate() const { return importance_.sum() == 0.0; }

    const std::vector<RegressionTree>& trees() const { return trees_; }
    Eigen::Index input_width() const { return inputs_; }

    nlohmann::json to_json() const;
    static RandomForest from_json(const nlohmann::json& j);

private:
    std::vector<RegressionTree> trees_;
    Vector importance_;
    Eigen::Index inputs_ = 0;
    Eigen::Index targets_ = 0;
};

}  // namespace coffee
