#pragma once

#include <span>
#include <string>
#include <vector>

namespace modperf {

enum class Alternative { Less, Greater, TwoSided };

std::string to_string(Alternative alternative);

struct TestResult {
    double p_value = 1.0;
    /// U statistic of x (count of x > y pairs plus half the ties).
    double statistic = 0.0;
    Alternative alternative = Alternative::TwoSided;
    /// P(X > Y) + ½P(X = Y).
    double cles = 0.5;
    bool exact = false;
};

/// Mann-Whitney U test; Greater means x tends to exceed y. Exact
/// permutation distribution (ties kept) when |x| + |y| <= 12, otherwise the
/// tie-corrected normal approximation with a 0.5 continuity correction.
/// When every value is tied the p-value is 1.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alternative);

inline constexpr std::size_t kExactMannWhitneyLimit = 12;

/// (#{x_i > y_j} + ½#{x_i = y_j}) / (|x||y|).
double cles(std::span<const double> x, std::span<const double> y);

struct FisherZResult {
    double partial_correlation = 0.0;
    double z = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    int conditioning_size = 0;
    bool independent = true;
    /// Zero residual variance on either side; reported independent.
    bool degenerate = false;
};

/// Partial correlation of u and v given the conditioning columns (least
/// squares residuals, intercept included), z = atanh(r), statistic =
/// sqrt(n - |S| - 3)|z|, two-sided against the normal quantile at alpha.
/// Throws InputError on length mismatch or n <= |S| + 3.
FisherZResult fisher_z_test(std::span<const double> u, std::span<const double> v,
                            const std::vector<std::vector<double>>& conditioning, double alpha);

struct CorrelationTest {
    double rho = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    Alternative alternative = Alternative::TwoSided;
};

/// Spearman correlation with a Student-t (n - 2 dof) p-value. Greater tests
/// rho > 0. Needs n >= 3.
CorrelationTest spearman_test(std::span<const double> x, std::span<const double> y, Alternative alternative);

}  // namespace modperf
