#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace modperf {

struct ForestParams {
    int n_trees = 100;
    int max_depth = 12;
    int min_samples_leaf = 1;
    /// Fraction of features examined at each split, in (0, 1].
    double feature_subsample = 1.0;
    std::uint64_t bootstrap_seed = 0;

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

/// CART regression tree; rows with x[feature] <= threshold go left.
class RegressionTree {
public:
    explicit RegressionTree(std::vector<TreeNode> nodes = {}) : nodes_(std::move(nodes)) {}

    template <class Row>
    double predict(const Row& row) const {
        int i = 0;
        while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = row(n.feature) <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    int depth() const;

    nlohmann::json to_json() const;
    static RegressionTree from_json(const nlohmann::json& j);

private:
    std::vector<TreeNode> nodes_;
};

/// Bagged ensemble of regression trees; prediction is the tree mean.
class FittedForest {
public:
    FittedForest() = default;
    FittedForest(std::vector<RegressionTree> trees, int n_features, ForestParams params)
        : trees_(std::move(trees)), n_features_(n_features), params_(params) {}

    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    const std::vector<RegressionTree>& trees() const { return trees_; }
    int n_features() const { return n_features_; }
    const ForestParams& params() const { return params_; }

    nlohmann::json to_json() const;
    static FittedForest from_json(const nlohmann::json& j);

private:
    std::vector<RegressionTree> trees_;
    int n_features_ = 0;
    ForestParams params_;
};

/// Fits `n_trees` variance-reduction CART trees on bootstrap resamples with
/// per-split feature subsampling. Throws InputError on empty or mismatched data.
FittedForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestParams& params);

}  // namespace modperf
