#include "modperf/l1.hpp"

#include <algorithm>
#include <cmath>

#include "modperf/errors.hpp"

namespace modperf {

PolynomialExpansion::PolynomialExpansion(int n_inputs, int degree, bool binary_inputs)
    : n_inputs_(n_inputs), degree_(degree), binary_(binary_inputs) {
    if (n_inputs < 1) throw InputError("polynomial expansion needs at least one input");
    if (degree < 1 || degree > 4) throw RangeError("polynomial degree must be in [1,4]");
    std::vector<int> term;
    auto extend = [&](auto&& self, int start) -> void {
        if (!term.empty()) terms_.push_back(term);
        if (static_cast<int>(term.size()) == degree_) return;
        for (int i = start; i < n_inputs_; ++i) {
            term.push_back(i);
            self(self, binary_ ? i + 1 : i);
            term.pop_back();
        }
    };
    extend(extend, 0);
    std::stable_sort(terms_.begin(), terms_.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
}

Eigen::MatrixXd PolynomialExpansion::transform(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_inputs_) throw InputError("expansion expects " + std::to_string(n_inputs_) + " columns");
    Eigen::MatrixXd F(X.rows(), static_cast<Eigen::Index>(terms_.size()));
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        auto col = F.col(static_cast<Eigen::Index>(t));
        col.setOnes();
        for (int i : terms_[t]) col.array() *= X.col(i).array();
    }
    return F;
}

void L1Params::validate() const {
    if (!(alpha >= 0.0)) throw RangeError("alpha must be >= 0");
    if (degree < 1 || degree > 4) throw RangeError("degree must be in [1,4]");
    if (max_iter < 1) throw RangeError("max_iter must be >= 1");
    if (!(tol > 0.0)) throw RangeError("tol must be > 0");
}

double soft_threshold(double value, double threshold) {
    if (value > threshold) return value - threshold;
    if (value < -threshold) return value + threshold;
    return 0.0;
}

double lasso_objective(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, const Eigen::VectorXd& coef,
                       double intercept, double alpha) {
    const Eigen::VectorXd r = y - F * coef - Eigen::VectorXd::Constant(y.size(), intercept);
    return r.squaredNorm() / (2.0 * static_cast<double>(y.size())) + alpha * coef.lpNorm<1>();
}

LassoSolution lasso_coordinate_descent(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, double alpha,
                                       int max_iter, double tol, const Eigen::VectorXd* warm_start,
                                       bool record_objective) {
    if (F.rows() != y.size() || y.size() == 0) throw InputError("lasso: F and y differ in length or are empty");
    if (!F.allFinite() || !y.allFinite()) throw InputError("lasso: inputs must be finite");
    const double n = static_cast<double>(y.size());
    const Eigen::Index p = F.cols();

    const Eigen::RowVectorXd means = F.colwise().mean();
    const Eigen::MatrixXd Fc = F.rowwise() - means;
    const double y_mean = y.mean();
    const Eigen::VectorXd yc = y.array() - y_mean;
    const Eigen::VectorXd scale = Fc.colwise().squaredNorm().transpose() / n;

    LassoSolution s;
    s.coef = (warm_start && warm_start->size() == p) ? *warm_start : Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j)
        if (scale[j] <= 0.0) s.coef[j] = 0.0;
    Eigen::VectorXd r = yc - Fc * s.coef;

    auto objective = [&] { return r.squaredNorm() / (2.0 * n) + alpha * s.coef.lpNorm<1>(); };
    for (s.iterations = 0; s.iterations < max_iter;) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (scale[j] <= 0.0) continue;
            const double old = s.coef[j];
            const double rho = Fc.col(j).dot(r) / n + scale[j] * old;
            const double updated = soft_threshold(rho, alpha) / scale[j];
            const double delta = updated - old;
            if (delta != 0.0) {
                r.noalias() -= delta * Fc.col(j);
                s.coef[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        ++s.iterations;
        if (record_objective) s.objective_trace.push_back(objective());
        if (max_change < tol) {
            s.converged = true;
            break;
        }
    }
    s.intercept = y_mean - means.dot(s.coef);
    return s;
}

FittedL1::FittedL1(PolynomialExpansion expansion, LassoSolution solution, double alpha)
    : expansion_(std::move(expansion)), solution_(std::move(solution)), alpha_(alpha) {}

Eigen::VectorXd FittedL1::predict(const Eigen::MatrixXd& X) const {
    return (expansion_.transform(X) * solution_.coef).array() + solution_.intercept;
}

nlohmann::json FittedL1::to_json() const {
    nlohmann::json coefs = nlohmann::json::array();
    for (std::size_t t = 0; t < expansion_.terms().size(); ++t)
        coefs.push_back({{"term", expansion_.terms()[t]}, {"coef", solution_.coef[static_cast<Eigen::Index>(t)]}});
    return {{"degree", expansion_.degree()},
            {"n_inputs", expansion_.n_inputs()},
            {"binary_inputs", expansion_.binary_inputs()},
            {"alpha", alpha_},
            {"intercept", solution_.intercept},
            {"converged", solution_.converged},
            {"iterations", solution_.iterations},
            {"coefficients", coefs}};
}

FittedL1 fit_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const L1Params& params, bool record_objective) {
    params.validate();
    PolynomialExpansion expansion(static_cast<int>(X.cols()), params.degree, params.binary_inputs);
    auto solution = lasso_coordinate_descent(expansion.transform(X), y, params.alpha, params.max_iter, params.tol,
                                             nullptr, record_objective);
    return FittedL1(std::move(expansion), std::move(solution), params.alpha);
}

}  // namespace modperf
