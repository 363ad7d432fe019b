#pragma once

#include "eoli/feature_matrix.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace eoli {

struct TreeConfig {
    std::optional<int> max_depth; ///< nullopt = grow until leaves are pure or too small
    int min_samples_split = 2;
    int min_samples_leaf = 1;
};

struct ForestConfig {
    int n_trees = 100;
    TreeConfig tree;
    bool bootstrap = true;
    std::optional<int> mtry; ///< features tried per split; default max(1, p / 3)
    std::uint64_t seed = 0;
};

struct BoostConfig {
    int n_rounds = 100;
    double learning_rate = 0.02;
    TreeConfig tree{5, 2, 1};
    std::uint64_t seed = 0;
};

/// Flat array node; leaves have feature == -1. Rows with x[feature] <= threshold
/// descend left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t n_samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_{std::move(nodes)} {}

    const std::vector<TreeNode> &nodes() const noexcept { return nodes_; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

    template <typename Row>
    double predict_row(const Row &row) const {
        std::size_t node = 0;
        while (!nodes_[node].is_leaf()) {
            const auto &n = nodes_[node];
            node = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
        }
        return nodes_[node].value;
    }

private:
    std::vector<TreeNode> nodes_;
};

enum class ModelKind { Tree, Forest, Boost };

/// Fitted regression model with a uniform predict contract:
///   Tree   -> single tree
///   Forest -> arithmetic mean over trees
///   Boost  -> base_prediction + learning_rate * sum over trees
class RegressionModel {
public:
    RegressionModel(ModelKind kind, std::size_t n_features, std::vector<DecisionTree> trees,
                    double base_prediction = 0.0, double learning_rate = 1.0);

    ModelKind kind() const noexcept { return kind_; }
    std::size_t n_features() const noexcept { return n_features_; }
    const std::vector<DecisionTree> &trees() const noexcept { return trees_; }
    double base_prediction() const noexcept { return base_prediction_; }
    double learning_rate() const noexcept { return learning_rate_; }

    /// One prediction per row of X; X must have n_features() columns.
    Vector predict(const Matrix &x) const;
    /// n x n_trees matrix of raw per-tree outputs (before averaging/shrinkage).
    Matrix predict_per_tree(const Matrix &x) const;

    /// Nested-object JSON dump for debugging; not a stable interchange format.
    std::string to_json() const;

private:
    void check_input(const Matrix &x) const;

    ModelKind kind_;
    std::size_t n_features_;
    std::vector<DecisionTree> trees_;
    double base_prediction_;
    double learning_rate_;
};

RegressionModel fit_tree(const Matrix &x, const Vector &y, const TreeConfig &config = {});
RegressionModel fit_forest(const Matrix &x, const Vector &y, const ForestConfig &config = {});
RegressionModel fit_boost(const Matrix &x, const Vector &y, const BoostConfig &config = {});

Vector predict(const RegressionModel &model, const Matrix &x);

/// Effective mtry for a forest over p features.
int resolve_mtry(const ForestConfig &config, std::size_t n_features);

} // namespace eoli
