#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modperf/validation.hpp"

namespace modperf {

/// Nonnegative weights per feature summing to 1. `raw` keeps the values
/// before flooring and normalization.
struct ImportanceVector {
    std::vector<std::string> names;
    std::vector<double> weights;
    std::vector<double> raw;
    /// Every floored value was zero; weights are uniform.
    bool degenerate = false;

    double weight(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Floors negatives at 0 and normalizes; an all-zero vector becomes uniform
/// with the degeneracy flag set. Names default to "x0", "x1", ...
ImportanceVector normalize_importance(std::vector<double> raw, std::vector<std::string> names = {});

/// Mean loss increase over `repeats` seeded shuffles of each column.
ImportanceVector permutation_importance(const Predictor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const LossFn& loss, int repeats, std::uint64_t seed,
                                        std::vector<std::string> names = {});

enum class ShapleyMode { Auto, Exact, Sampled };

/// Shapley attribution of loss reduction. A coalition's value is the loss
/// with all features outside it replaced by their column mean, subtracted
/// from the loss with every feature replaced. Exact mode enumerates all
/// coalitions (at most 20 features); sampled mode averages marginal
/// contributions over `samples` seeded feature orderings. Auto picks exact
/// up to 10 features.
ImportanceVector shapley_importance(const Predictor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const LossFn& loss, int samples, std::uint64_t seed,
                                    ShapleyMode mode = ShapleyMode::Auto, std::vector<std::string> names = {});

}  // namespace modperf
