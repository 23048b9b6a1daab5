#include "coffee/forest.hpp"

#include "coffee/parallel.hpp"
#include "coffee/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace coffee {

void to_json(nlohmann::json& j, const ForestConfig& c) {
    j = {{"n_trees", c.n_trees},
         {"min_samples_leaf", c.min_samples_leaf},
         {"bootstrap", c.bootstrap},
         {"seed", c.seed}};
    j["max_depth"] = c.max_depth ? nlohmann::json(*c.max_depth) : nlohmann::json(nullptr);
    j["features_per_split"] =
        c.features_per_split ? nlohmann::json(*c.features_per_split) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ForestConfig& c) {
    c = ForestConfig{};
    c.n_trees = j.value("n_trees", c.n_trees);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.seed = j.value("seed", c.seed);
    if (j.contains("max_depth") && !j["max_depth"].is_null()) c.max_depth = j["max_depth"].get<std::size_t>();
    if (j.contains("features_per_split") && !j["features_per_split"].is_null())
        c.features_per_split = j["features_per_split"].get<std::size_t>();
}

namespace {

// Training-set view shared by every tree of a forest: columns holding only
// 0/1 are split by a sparse pass over each row's set bits, everything else
// by sorting the node's rows.
struct SplitIndex {
    std::vector<bool> binary;
    std::vector<int> dense_columns;
    std::vector<std::vector<int>> set_bits;  // per row: binary columns equal to 1

    explicit SplitIndex(const Matrix& x) : binary(static_cast<std::size_t>(x.cols()), true) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
                const double v = x(r, c);
                if (v != 0.0 && v != 1.0) {
                    binary[static_cast<std::size_t>(c)] = false;
                    break;
                }
            }
            if (!binary[static_cast<std::size_t>(c)]) dense_columns.push_back(static_cast<int>(c));
        }
        set_bits.resize(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                if (binary[static_cast<std::size_t>(c)] && x(r, c) == 1.0)
                    set_bits[static_cast<std::size_t>(r)].push_back(static_cast<int>(c));
    }
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
};

}  // namespace

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Matrix& y, const SplitIndex& index, const ForestConfig& config,
                std::uint64_t seed, Vector& importance)
        : x_(x),
          y_(y),
          index_(index),
          config_(config),
          rng_(seed),
          importance_(importance),
          targets_(y.cols()),
          bit_count_(static_cast<std::size_t>(x.cols()), 0),
          bit_sum_(static_cast<std::size_t>(x.cols() * y.cols()), 0.0),
          candidate_(static_cast<std::size_t>(x.cols()), true) {}

    RegressionTree build(std::vector<std::size_t> rows) {
        rows_ = std::move(rows);
        leaves_.clear();
        build_node(0, rows_.size(), 0);
        tree_.leaf_values_.resize(static_cast<Eigen::Index>(leaves_.size() / static_cast<std::size_t>(targets_)),
                                  targets_);
        for (Eigen::Index l = 0; l < tree_.leaf_values_.rows(); ++l)
            for (Eigen::Index t = 0; t < targets_; ++t)
                tree_.leaf_values_(l, t) = leaves_[static_cast<std::size_t>(l * targets_ + t)];
        return std::move(tree_);
    }

private:
    int build_node(std::size_t begin, std::size_t end, std::size_t depth) {
        const std::size_t n = end - begin;
        const int id = static_cast<int>(tree_.nodes_.size());
        tree_.nodes_.emplace_back();

        std::vector<double> sum(static_cast<std::size_t>(targets_), 0.0);
        for (std::size_t i = begin; i < end; ++i)
            for (Eigen::Index t = 0; t < targets_; ++t)
                sum[static_cast<std::size_t>(t)] += y_(static_cast<Eigen::Index>(rows_[i]), t);

        const bool depth_exhausted = config_.max_depth && depth >= *config_.max_depth;
        Split best;
        if (!depth_exhausted && n >= 2 * config_.min_samples_leaf && !pure(begin, end))
            best = find_split(begin, end, sum);

        if (best.feature < 0) {
            make_leaf(id, begin, end);
            return id;
        }

        importance_[best.feature] += std::max(0.0, best.gain);
        const auto feature = static_cast<Eigen::Index>(best.feature);
        auto mid = std::stable_partition(
            rows_.begin() + static_cast<std::ptrdiff_t>(begin), rows_.begin() + static_cast<std::ptrdiff_t>(end),
            [&](std::size_t r) { return x_(static_cast<Eigen::Index>(r), feature) <= best.threshold; });
        const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

        const int left = build_node(begin, split_at, depth + 1);
        const int right = build_node(split_at, end, depth + 1);
        auto& node = tree_.nodes_[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = left;
        node.right = right;
        return id;
    }

    bool pure(std::size_t begin, std::size_t end) const {
        const auto first = static_cast<Eigen::Index>(rows_[begin]);
        for (std::size_t i = begin + 1; i < end; ++i)
            for (Eigen::Index t = 0; t < targets_; ++t)
                if (y_(static_cast<Eigen::Index>(rows_[i]), t) != y_(first, t)) return false;
        return true;
    }

    // Running mean: reproduces a constant target bit for bit.
    void make_leaf(int id, std::size_t begin, std::size_t end) {
        auto& node = tree_.nodes_[static_cast<std::size_t>(id)];
        node.leaf = static_cast<int>(leaves_.size() / static_cast<std::size_t>(targets_));
        for (Eigen::Index t = 0; t < targets_; ++t) {
            double mean = 0.0;
            for (std::size_t i = begin; i < end; ++i)
                mean += (y_(static_cast<Eigen::Index>(rows_[i]), t) - mean) / static_cast<double>(i - begin + 1);
            leaves_.push_back(mean);
        }
    }

    // Variance reduction summed over targets, from left sums and count. The
    // sum of squares cancels, leaving S_L^2/n_L + S_R^2/n_R - S^2/n.
    double gain(const double* left_sum, std::size_t n_left, const std::vector<double>& sum, std::size_t n) const {
        const double nl = static_cast<double>(n_left);
        const double nr = static_cast<double>(n - n_left);
        double g = 0.0;
        for (Eigen::Index t = 0; t < targets_; ++t) {
            const double sl = left_sum[t];
            const double sr = sum[static_cast<std::size_t>(t)] - sl;
            const double s = sum[static_cast<std::size_t>(t)];
            g += sl * sl / nl + sr * sr / nr - s * s / static_cast<double>(n);
        }
        return g;
    }

    void consider(Split& best, int feature, double threshold, double g) const {
        // Ties keep the candidate evaluated first.
        if (g > best.gain) best = {feature, threshold, g};
    }

    void choose_candidates() {
        const auto p = static_cast<std::size_t>(x_.cols());
        if (!config_.features_per_split || *config_.features_per_split >= p) {
            std::fill(candidate_.begin(), candidate_.end(), true);
            return;
        }
        std::fill(candidate_.begin(), candidate_.end(), false);
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), 0);
        const std::size_t k = std::max<std::size_t>(1, *config_.features_per_split);
        for (std::size_t i = 0; i < k; ++i) {
            auto j = i + static_cast<std::size_t>(rng_.uniform_index(p - i));
            std::swap(order[i], order[j]);
            candidate_[order[i]] = true;
        }
    }

    Split find_split(std::size_t begin, std::size_t end, const std::vector<double>& sum) {
        const std::size_t n = end - begin;
        const std::size_t leaf_min = config_.min_samples_leaf;
        choose_candidates();
        Split best;

        // Binary columns: x == 1 goes right, so the left side is the complement.
        std::vector<int> touched;
        for (std::size_t i = begin; i < end; ++i) {
            const auto r = rows_[i];
            for (int c : index_.set_bits[r]) {
                if (!candidate_[static_cast<std::size_t>(c)]) continue;
                auto& count = bit_count_[static_cast<std::size_t>(c)];
                if (count == 0) touched.push_back(c);
                ++count;
                double* s = &bit_sum_[static_cast<std::size_t>(c) * static_cast<std::size_t>(targets_)];
                for (Eigen::Index t = 0; t < targets_; ++t) s[t] += y_(static_cast<Eigen::Index>(r), t);
            }
        }
        std::sort(touched.begin(), touched.end());
        std::vector<double> left(static_cast<std::size_t>(targets_));
        for (int c : touched) {
            const std::size_t ones = bit_count_[static_cast<std::size_t>(c)];
            double* s = &bit_sum_[static_cast<std::size_t>(c) * static_cast<std::size_t>(targets_)];
            const std::size_t zeros = n - ones;
            if (ones >= leaf_min && zeros >= leaf_min) {
                for (Eigen::Index t = 0; t < targets_; ++t)
                    left[static_cast<std::size_t>(t)] = sum[static_cast<std::size_t>(t)] - s[t];
                consider(best, c, 0.5, gain(left.data(), zeros, sum, n));
            }
            bit_count_[static_cast<std::size_t>(c)] = 0;
            std::fill(s, s + targets_, 0.0);
        }

        // Other columns: sorted sweep over the node's rows.
        std::vector<std::size_t> sorted;
        for (int c : index_.dense_columns) {
            if (!candidate_[static_cast<std::size_t>(c)]) continue;
            const auto col = static_cast<Eigen::Index>(c);
            sorted.assign(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                          rows_.begin() + static_cast<std::ptrdiff_t>(end));
            std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return x_(static_cast<Eigen::Index>(a), col) < x_(static_cast<Eigen::Index>(b), col);
            });
            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const auto r = static_cast<Eigen::Index>(sorted[i]);
                for (Eigen::Index t = 0; t < targets_; ++t) left[static_cast<std::size_t>(t)] += y_(r, t);
                const double lo = x_(r, col);
                const double hi = x_(static_cast<Eigen::Index>(sorted[i + 1]), col);
                if (!(lo < hi)) continue;
                const std::size_t n_left = i + 1;
                if (n_left < leaf_min || n - n_left < leaf_min) continue;
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold < hi)) threshold = lo;
                consider(best, c, threshold, gain(left.data(), n_left, sum, n));
            }
        }
        // Candidate subsets can miss every splittable column; fall back to all.
        if (best.feature < 0 && config_.features_per_split &&
            *config_.features_per_split < static_cast<std::size_t>(x_.cols())) {
            auto saved = config_.features_per_split;
            config_.features_per_split.reset();
            best = find_split(begin, end, sum);
            config_.features_per_split = saved;
        }
        return best;
    }

    const Matrix& x_;
    const Matrix& y_;
    const SplitIndex& index_;
    ForestConfig config_;
    Rng rng_;
    Vector& importance_;
    Eigen::Index targets_;

    std::vector<std::size_t> rows_;
    std::vector<std::size_t> bit_count_;
    std::vector<double> bit_sum_;
    std::vector<bool> candidate_;
    std::vector<double> leaves_;
    RegressionTree tree_;
};

RegressionTree RegressionTree::fit(const Matrix& x, const Matrix& y, std::vector<std::size_t> rows,
                                   const ForestConfig& config, std::uint64_t seed, Vector& importance) {
    SplitIndex index(x);
    importance = Vector::Zero(x.cols());
    TreeBuilder builder(x, y, index, config, seed, importance);
    return builder.build(std::move(rows));
}

void RegressionTree::predict_into(const Matrix& x, Matrix& mean, double count) const {
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const Node* node = &nodes_.front();
        while (node->feature >= 0) {
            node = &nodes_[static_cast<std::size_t>(x(r, node->feature) <= node->threshold ? node->left
                                                                                           : node->right)];
        }
        mean.row(r) += (leaf_values_.row(node->leaf) - mean.row(r)) / count;
    }
}

std::size_t RegressionTree::depth() const {
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        const auto& node = nodes_[static_cast<std::size_t>(id)];
        if (node.feature >= 0) {
            stack.emplace_back(node.left, d + 1);
            stack.emplace_back(node.right, d + 1);
        }
    }
    return deepest;
}

nlohmann::json RegressionTree::to_json() const {
    nlohmann::json features = nlohmann::json::array(), thresholds = nlohmann::json::array(),
                   lefts = nlohmann::json::array(), rights = nlohmann::json::array(),
                   leaves = nlohmann::json::array();
    for (const auto& n : nodes_) {
        features.push_back(n.feature);
        thresholds.push_back(n.threshold);
        lefts.push_back(n.left);
        rights.push_back(n.right);
        leaves.push_back(n.leaf);
    }
    std::vector<double> values(leaf_values_.data(), leaf_values_.data() + leaf_values_.size());
    return {{"feature", features}, {"threshold", thresholds}, {"left", lefts},    {"right", rights},
            {"leaf", leaves},      {"leaf_rows", leaf_values_.rows()},            {"leaf_values", values}};
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j, Eigen::Index targets) {
    RegressionTree tree;
    const auto& features = j.at("feature");
    tree.nodes_.resize(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        auto& n = tree.nodes_[i];
        n.feature = features[i].get<int>();
        n.threshold = j.at("threshold")[i].get<double>();
        n.left = j.at("left")[i].get<int>();
        n.right = j.at("right")[i].get<int>();
        n.leaf = j.at("leaf")[i].get<int>();
    }
    const auto values = j.at("leaf_values").get<std::vector<double>>();
    tree.leaf_values_ = Eigen::Map<const Matrix>(values.data(), j.at("leaf_rows").get<Eigen::Index>(), targets);
    return tree;
}

RandomForest RandomForest::fit(const Matrix& x, const Matrix& y, const ForestConfig& config) {
    if (config.n_trees < 1) throw std::invalid_argument("forest: n_trees must be at least 1");
    if (config.min_samples_leaf < 1) throw std::invalid_argument("forest: min_samples_leaf must be at least 1");
    if (x.rows() < 2) throw std::invalid_argument("forest: at least two training rows are required");
    if (x.rows() != y.rows()) throw std::invalid_argument("forest: X and Y row counts differ");
    if (y.cols() < 1) throw std::invalid_argument("forest: Y has no targets");
    if (x.hasNaN() || y.hasNaN()) throw std::invalid_argument("forest: NaN in training data");

    RandomForest forest;
    forest.inputs_ = x.cols();
    forest.targets_ = y.cols();
    forest.trees_.resize(config.n_trees);

    const SplitIndex index(x);
    std::vector<Vector> importances(config.n_trees);
    const auto n = static_cast<std::size_t>(x.rows());

    parallel_for(config.n_trees, [&](std::size_t t) {
        const auto seed = derive_seed(config.seed, {t});
        Rng sampler(derive_seed(seed, {0x626f6f74ULL}));
        std::vector<std::size_t> rows(n);
        if (config.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(sampler.uniform_index(n));
            std::sort(rows.begin(), rows.end());
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        importances[t] = Vector::Zero(x.cols());
        TreeBuilder builder(x, y, index, config, seed, importances[t]);
        forest.trees_[t] = builder.build(std::move(rows));
    });

    forest.importance_ = Vector::Zero(x.cols());
    for (const auto& imp : importances) {
        const double total = imp.sum();
        if (total > 0.0) forest.importance_ += imp / total;
    }
    const double total = forest.importance_.sum();
    if (total > 0.0) forest.importance_ /= total;
    return forest;
}

Matrix RandomForest::predict(const Matrix& x) const {
    if (x.cols() != inputs_) throw std::invalid_argument("forest: input width mismatch");
    Matrix mean = Matrix::Zero(x.rows(), targets_);
    double count = 0.0;
    for (const auto& tree : trees_) tree.predict_into(x, mean, ++count);
    return mean;
}

nlohmann::json RandomForest::to_json() const {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    std::vector<double> importance(importance_.data(), importance_.data() + importance_.size());
    return {{"inputs", inputs_}, {"targets", targets_}, {"importance", importance}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
    RandomForest forest;
    forest.inputs_ = j.at("inputs").get<Eigen::Index>();
    forest.targets_ = j.at("targets").get<Eigen::Index>();
    const auto importance = j.at("importance").get<std::vector<double>>();
    forest.importance_ = Eigen::Map<const Vector>(importance.data(), static_cast<Eigen::Index>(importance.size()));
    for (const auto& t : j.at("trees")) forest.trees_.push_back(RegressionTree::from_json(t, forest.targets_));
    return forest;
}

}  // namespace coffee
