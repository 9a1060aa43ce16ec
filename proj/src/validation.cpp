#include "modperf/validation.hpp"

#include <algorithm>
#include <cmath>

namespace modperf {

double mean_squared_error(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
    if (predicted.size() != actual.size() || actual.size() == 0) throw InputError("mse: length mismatch");
    return (predicted - actual).squaredNorm() / static_cast<double>(actual.size());
}

std::vector<int> fold_assignment(int n, const CVSpec& spec) {
    if (spec.folds < 2) throw InputError("cross-validation needs at least 2 folds");
    if (spec.folds > n) throw InputError("more folds than samples");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(spec.shuffle_seed);
    shuffle(order, rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(p)])] = p % spec.folds;
    return fold;
}

double cross_validate(const FitFn& fit, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CVSpec& spec,
                      const LossFn& loss) {
    if (X.rows() != y.size()) throw InputError("cross_validate: X and y differ in length");
    const auto n = static_cast<int>(y.size());
    const auto fold = fold_assignment(n, spec);
    double total = 0.0;
    for (int f = 0; f < spec.folds; ++f) {
        std::vector<Eigen::Index> train_rows;
        std::vector<Eigen::Index> test_rows;
        for (int i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows).push_back(i);
        const Eigen::MatrixXd Xtr = X(train_rows, Eigen::all);
        const Eigen::VectorXd ytr = y(train_rows);
        const Eigen::MatrixXd Xte = X(test_rows, Eigen::all);
        const Eigen::VectorXd yte = y(test_rows);
        const Predictor predict = fit(Xtr, ytr);
        total += loss(predict(Xte), yte);
    }
    return total / spec.folds;
}

ForestParams ForestCandidate::params(int n_features, std::uint64_t bootstrap_seed) const {
    ForestParams p;
    p.n_trees = n_trees;
    p.max_depth = max_depth;
    p.min_samples_leaf = min_samples_leaf;
    const double d = std::max(1, n_features);
    switch (feature_fraction) {
        case FeatureFraction::Third: p.feature_subsample = 1.0 / 3.0; break;
        case FeatureFraction::Sqrt: p.feature_subsample = std::sqrt(d) / d; break;
        case FeatureFraction::All: p.feature_subsample = 1.0; break;
    }
    p.bootstrap_seed = bootstrap_seed;
    return p;
}

std::size_t ForestSearchSpace::size() const {
    if (n_trees_hi < n_trees_lo || max_depth_hi < max_depth_lo) return 0;
    return static_cast<std::size_t>(n_trees_hi - n_trees_lo + 1) *
           static_cast<std::size_t>(max_depth_hi - max_depth_lo + 1) * min_samples_leaf.size() *
           feature_fractions.size();
}

ForestCandidate ForestSearchSpace::at(std::size_t index) const {
    if (index >= size()) throw RangeError("forest search index out of range");
    ForestCandidate c;
    const auto trees = static_cast<std::size_t>(n_trees_hi - n_trees_lo + 1);
    const auto depths = static_cast<std::size_t>(max_depth_hi - max_depth_lo + 1);
    c.n_trees = n_trees_lo + static_cast<int>(index % trees);
    index /= trees;
    c.max_depth = max_depth_lo + static_cast<int>(index % depths);
    index /= depths;
    c.min_samples_leaf = min_samples_leaf[index % min_samples_leaf.size()];
    index /= min_samples_leaf.size();
    c.feature_fraction = feature_fractions[index % feature_fractions.size()];
    return c;
}

TunedForest tune_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestSearchSpace& space,
                        const SearchBudget& budget, const CVSpec& cv, std::uint64_t fit_seed) {
    const auto n = static_cast<int>(y.size());
    if (n < 1) throw InputError("cannot tune a forest on zero rows");
    const auto d = static_cast<int>(X.cols());
    TunedForest out;
    if (n < 2) {
        out.candidate = space.at(0);
    } else {
        CVSpec spec = cv;
        spec.folds = std::min(cv.folds, n);
        auto objective = [&](const ForestCandidate& c) {
            FitFn fit = [&](const Eigen::MatrixXd& Xtr, const Eigen::VectorXd& ytr) -> Predictor {
                auto forest = std::make_shared<FittedForest>(fit_forest(Xtr, ytr, c.params(d, derive_seed(fit_seed, "cv"))));
                return [forest](const Eigen::MatrixXd& Xte) { return forest->predict(Xte); };
            };
            return cross_validate(fit, X, y, spec, mean_squared_error);
        };
        auto result = search_hyperparams(space, budget, objective);
        out.candidate = result.best;
        out.cv_loss = result.best_loss;
        out.evaluations = static_cast<int>(result.history.size());
    }
    out.forest = fit_forest(X, y, out.candidate.params(d, derive_seed(fit_seed, "final")));
    return out;
}

}  // namespace modperf
