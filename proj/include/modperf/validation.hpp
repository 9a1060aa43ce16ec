#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "modperf/errors.hpp"
#include "modperf/forest.hpp"
#include "modperf/seed.hpp"

namespace modperf {

struct CVSpec {
    int folds = 5;
    std::uint64_t shuffle_seed = 0;
};

struct SearchBudget {
    int evaluations = 8;
    std::uint64_t seed = 0;
};

using Predictor = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;
using FitFn = std::function<Predictor(const Eigen::MatrixXd&, const Eigen::VectorXd&)>;
using LossFn = std::function<double(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual)>;

double mean_squared_error(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual);

/// Fold id of every sample: a seeded shuffle, then round-robin.
std::vector<int> fold_assignment(int n, const CVSpec& spec);

/// Mean held-out loss over folds. Throws InputError when folds < 2 or
/// folds exceed the sample count.
double cross_validate(const FitFn& fit, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CVSpec& spec,
                      const LossFn& loss);

template <class Candidate>
struct SearchResult {
    Candidate best{};
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<std::pair<Candidate, double>> history;
};

/// Evaluates the whole space when it holds at most `budget.evaluations`
/// candidates, otherwise exactly that many distinct candidates drawn with
/// `budget.seed`. Ties keep the first candidate evaluated.
///
/// `Space` provides `size()` and `at(index)`.
template <class Space, class Objective>
auto search_hyperparams(const Space& space, const SearchBudget& budget, Objective&& objective)
    -> SearchResult<decltype(space.at(std::size_t{0}))> {
    using Candidate = decltype(space.at(std::size_t{0}));
    if (budget.evaluations < 1) throw RangeError("search budget must allow at least one evaluation");
    const std::size_t size = space.size();
    if (size == 0) throw InputError("empty search space");

    std::vector<std::size_t> picks;
    if (static_cast<std::size_t>(budget.evaluations) >= size) {
        for (std::size_t i = 0; i < size; ++i) picks.push_back(i);
    } else {
        Rng rng(budget.seed);
        std::set<std::size_t> seen;
        while (picks.size() < static_cast<std::size_t>(budget.evaluations)) {
            const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(size) - 1));
            if (seen.insert(i).second) picks.push_back(i);
        }
    }

    SearchResult<Candidate> result;
    for (std::size_t i : picks) {
        Candidate c = space.at(i);
        const double loss = objective(c);
        result.history.emplace_back(c, loss);
        if (result.history.size() == 1 || loss < result.best_loss) {
            result.best = c;
            result.best_loss = loss;
        }
    }
    return result;
}

/// Explicit candidate list as a search space.
template <class T>
struct GridSpace {
    std::vector<T> values;
    std::size_t size() const { return values.size(); }
    T at(std::size_t i) const { return values.at(i); }
};

enum class FeatureFraction { Third, Sqrt, All };

struct ForestCandidate {
    int n_trees = 100;
    int max_depth = 12;
    int min_samples_leaf = 1;
    FeatureFraction feature_fraction = FeatureFraction::All;

    /// Concrete parameters for `n_features` inputs.
    ForestParams params(int n_features, std::uint64_t bootstrap_seed) const;
};

/// Cartesian product of ranges and option lists, indexed mixed-radix.
struct ForestSearchSpace {
    int n_trees_lo = 50;
    int n_trees_hi = 300;
    int max_depth_lo = 4;
    int max_depth_hi = 24;
    std::vector<int> min_samples_leaf{1, 2, 5};
    std::vector<FeatureFraction> feature_fractions{FeatureFraction::Third, FeatureFraction::Sqrt,
                                                   FeatureFraction::All};

    std::size_t size() const;
    ForestCandidate at(std::size_t index) const;
};

/// Search result plus the forest refit on all rows with the winning candidate.
struct TunedForest {
    FittedForest forest;
    ForestCandidate candidate;
    double cv_loss = 0.0;
    int evaluations = 0;
};

/// Forest tuned by `search_hyperparams` on CV mean squared error. When the
/// sample count is below `cv.folds` the fold count is reduced to the sample
/// count; with a single row, search is skipped and the first candidate used.
TunedForest tune_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestSearchSpace& space,
                        const SearchBudget& budget, const CVSpec& cv, std::uint64_t fit_seed);

}  // namespace modperf
