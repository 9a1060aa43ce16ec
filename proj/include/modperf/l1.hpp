#pragma once

#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace modperf {

/// Monomials of total degree 1..degree over the input columns. Each term is
/// the sorted list of input indices it multiplies (repeats are powers).
/// With `binary_inputs`, repeated indices are skipped since x^2 = x.
class PolynomialExpansion {
public:
    PolynomialExpansion() = default;
    PolynomialExpansion(int n_inputs, int degree, bool binary_inputs);

    int n_inputs() const { return n_inputs_; }
    int degree() const { return degree_; }
    bool binary_inputs() const { return binary_; }
    const std::vector<std::vector<int>>& terms() const { return terms_; }

    Eigen::MatrixXd transform(const Eigen::MatrixXd& X) const;

private:
    int n_inputs_ = 0;
    int degree_ = 1;
    bool binary_ = false;
    std::vector<std::vector<int>> terms_;
};

struct L1Params {
    double alpha = 1.0;
    int degree = 1;
    int max_iter = 10000;
    double tol = 1e-8;
    bool binary_inputs = false;

    void validate() const;
};

/// Coordinate descent output for (1/2n)||y - b0 - F b||^2 + alpha ||b||_1.
struct LassoSolution {
    Eigen::VectorXd coef;
    double intercept = 0.0;
    bool converged = false;
    int iterations = 0;
    /// Objective after each full sweep, when requested.
    std::vector<double> objective_trace;
};

/// Cyclic coordinate descent with soft-thresholding on already-expanded
/// features; the intercept is unpenalized. Stops when the largest
/// coefficient change in a sweep falls below `tol`.
LassoSolution lasso_coordinate_descent(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, double alpha,
                                       int max_iter, double tol, const Eigen::VectorXd* warm_start = nullptr,
                                       bool record_objective = false);

double lasso_objective(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, const Eigen::VectorXd& coef,
                       double intercept, double alpha);

double soft_threshold(double value, double threshold);

class FittedL1 {
public:
    FittedL1() = default;
    FittedL1(PolynomialExpansion expansion, LassoSolution solution, double alpha);

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    const PolynomialExpansion& expansion() const { return expansion_; }
    const Eigen::VectorXd& coef() const { return solution_.coef; }
    double intercept() const { return solution_.intercept; }
    double alpha() const { return alpha_; }
    /// False when max_iter was hit before the tolerance; a warning, not an error.
    bool converged() const { return solution_.converged; }
    int iterations() const { return solution_.iterations; }
    const std::vector<double>& objective_trace() const { return solution_.objective_trace; }

    nlohmann::json to_json() const;

private:
    PolynomialExpansion expansion_;
    LassoSolution solution_;
    double alpha_ = 0.0;
};

/// Expands X to polynomial features of `params.degree`, then solves. Inputs
/// are used as given; scaling is the caller's job.
FittedL1 fit_l1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const L1Params& params,
                bool record_objective = false);

}  // namespace modperf
