#include "modperf/importance.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "modperf/errors.hpp"
#include "modperf/seed.hpp"

namespace modperf {

double ImportanceVector::weight(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return weights[i];
    throw InputError("no importance entry named " + name);
}

nlohmann::json ImportanceVector::to_json() const {
    nlohmann::json w = nlohmann::json::object();
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        w[names[i]] = weights[i];
        r[names[i]] = raw[i];
    }
    return {{"weights", w}, {"raw", r}, {"degenerate", degenerate}};
}

ImportanceVector normalize_importance(std::vector<double> raw, std::vector<std::string> names) {
    if (raw.empty()) throw InputError("importance of zero features");
    if (names.empty())
        for (std::size_t i = 0; i < raw.size(); ++i) names.push_back("x" + std::to_string(i));
    if (names.size() != raw.size()) throw InputError("importance names and values differ in length");

    ImportanceVector out;
    out.names = std::move(names);
    out.raw = raw;
    out.weights.resize(raw.size());
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out.weights[i] = std::isfinite(raw[i]) ? std::max(raw[i], 0.0) : 0.0;
        total += out.weights[i];
    }
    if (!(total > 0.0)) {
        out.degenerate = true;
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(raw.size()));
    } else {
        for (double& w : out.weights) w /= total;
    }
    return out;
}

ImportanceVector permutation_importance(const Predictor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const LossFn& loss, int repeats, std::uint64_t seed,
                                        std::vector<std::string> names) {
    if (repeats < 1) throw RangeError("permutation importance needs at least one repeat");
    if (X.rows() != y.size()) throw InputError("X and y differ in row count");
    const double base = loss(model(X), y);
    std::vector<double> raw(static_cast<std::size_t>(X.cols()), 0.0);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        Rng rng(derive_seed(seed, "permute", static_cast<std::uint64_t>(j)));
        Eigen::MatrixXd shuffled = X;
        double sum = 0.0;
        for (int r = 0; r < repeats; ++r) {
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            shuffle(order, rng);
            for (Eigen::Index i = 0; i < X.rows(); ++i) shuffled(i, j) = X(order[static_cast<std::size_t>(i)], j);
            sum += loss(model(shuffled), y) - base;
        }
        raw[static_cast<std::size_t>(j)] = sum / repeats;
    }
    return normalize_importance(std::move(raw), std::move(names));
}

namespace {

class CoalitionLoss {
public:
    CoalitionLoss(const Predictor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const LossFn& loss)
        : model_(model), X_(X), y_(y), loss_(loss), means_(X.colwise().mean()) {}

    double operator()(const std::vector<bool>& included) const {
        Eigen::MatrixXd masked = X_;
        for (Eigen::Index j = 0; j < X_.cols(); ++j)
            if (!included[static_cast<std::size_t>(j)]) masked.col(j).setConstant(means_(j));
        return loss_(model_(masked), y_);
    }

private:
    const Predictor& model_;
    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    const LossFn& loss_;
    Eigen::RowVectorXd means_;
};

std::vector<double> exact_shapley(const CoalitionLoss& value, int d) {
    std::vector<double> coalition_loss(std::size_t{1} << d);
    std::vector<bool> included(static_cast<std::size_t>(d));
    for (std::size_t mask = 0; mask < coalition_loss.size(); ++mask) {
        for (int j = 0; j < d; ++j) included[static_cast<std::size_t>(j)] = (mask >> j) & 1u;
        coalition_loss[mask] = value(included);
    }
    // weight(|S|) = |S|! (d - |S| - 1)! / d!
    std::vector<double> weight(static_cast<std::size_t>(d));
    for (int s = 0; s < d; ++s) {
        double w = 1.0 / d;
        for (int k = 1; k <= s; ++k) w *= static_cast<double>(k) / static_cast<double>(d - k);
        weight[static_cast<std::size_t>(s)] = w;
    }
    std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
    for (std::size_t mask = 0; mask < coalition_loss.size(); ++mask) {
        const int size = std::popcount(mask);
        for (int j = 0; j < d; ++j) {
            if ((mask >> j) & 1u) continue;
            // Loss reduction from adding j.
            const double gain = coalition_loss[mask] - coalition_loss[mask | (std::size_t{1} << j)];
            phi[static_cast<std::size_t>(j)] += weight[static_cast<std::size_t>(size)] * gain;
        }
    }
    return phi;
}

std::vector<double> sampled_shapley(const CoalitionLoss& value, int d, int samples, std::uint64_t seed) {
    if (samples < 1) throw RangeError("sampled shapley needs at least one ordering");
    Rng rng(derive_seed(seed, "shapley"));
    std::vector<double> phi(static_cast<std::size_t>(d), 0.0);
    std::vector<int> order(static_cast<std::size_t>(d));
    const double empty_loss = value(std::vector<bool>(static_cast<std::size_t>(d), false));
    for (int s = 0; s < samples; ++s) {
        std::iota(order.begin(), order.end(), 0);
        shuffle(order, rng);
        std::vector<bool> included(static_cast<std::size_t>(d), false);
        double previous = empty_loss;
        for (int j : order) {
            included[static_cast<std::size_t>(j)] = true;
            const double current = value(included);
            phi[static_cast<std::size_t>(j)] += previous - current;
            previous = current;
        }
    }
    for (double& p : phi) p /= samples;
    return phi;
}

}  // namespace

ImportanceVector shapley_importance(const Predictor& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const LossFn& loss, int samples, std::uint64_t seed, ShapleyMode mode,
                                    std::vector<std::string> names) {
    if (X.rows() != y.size()) throw InputError("X and y differ in row count");
    const int d = static_cast<int>(X.cols());
    if (d == 0) throw InputError("shapley importance of zero features");
    if (mode == ShapleyMode::Auto) mode = d <= 10 ? ShapleyMode::Exact : ShapleyMode::Sampled;
    if (mode == ShapleyMode::Exact && d > 20) throw CapacityError("exact shapley supports at most 20 features");
    const CoalitionLoss value(model, X, y, loss);
    auto raw = mode == ShapleyMode::Exact ? exact_shapley(value, d) : sampled_shapley(value, d, samples, seed);
    return normalize_importance(std::move(raw), std::move(names));
}

}  // namespace modperf
