#include "modperf/statistics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "modperf/errors.hpp"
#include "modperf/metrics.hpp"

namespace modperf {

std::string to_string(Alternative alternative) {
    switch (alternative) {
        case Alternative::Less: return "less";
        case Alternative::Greater: return "greater";
        case Alternative::TwoSided: return "two-sided";
    }
    return {};
}

double cles(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw InputError("cles needs non-empty groups");
    double wins = 0.0;
    for (double a : x) {
        for (double b : y) {
            if (a > b) wins += 1.0;
            else if (a == b) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

namespace {

double u_statistic(std::span<const double> x, std::span<const double> y) {
    return cles(x, y) * static_cast<double>(x.size()) * static_cast<double>(y.size());
}

// Every relabelling of the pooled sample into groups of the observed sizes.
double exact_p(std::span<const double> x, std::span<const double> y, double u_obs, Alternative alt) {
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const int n = static_cast<int>(pooled.size());
    const int nx = static_cast<int>(x.size());
    const double mean = 0.5 * static_cast<double>(x.size() * y.size());
    constexpr double kTol = 1e-9;

    std::vector<double> gx, gy;
    std::uint64_t hits = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != nx) continue;
        gx.clear();
        gy.clear();
        for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? gx : gy).push_back(pooled[i]);
        const double u = u_statistic(gx, gy);
        bool extreme = false;
        switch (alt) {
            case Alternative::Greater: extreme = u >= u_obs - kTol; break;
            case Alternative::Less: extreme = u <= u_obs + kTol; break;
            case Alternative::TwoSided: extreme = std::abs(u - mean) >= std::abs(u_obs - mean) - kTol; break;
        }
        hits += extreme ? 1 : 0;
        ++total;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double normal_p(std::span<const double> x, std::span<const double> y, double u_obs, Alternative alt) {
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());
    const double n = n1 + n2;
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) return 1.0;
    const double sd = std::sqrt(variance);
    const double mean = 0.5 * n1 * n2;
    const boost::math::normal_distribution<double> normal;
    switch (alt) {
        case Alternative::Greater: return boost::math::cdf(boost::math::complement(normal, (u_obs - mean - 0.5) / sd));
        case Alternative::Less: return boost::math::cdf(normal, (u_obs - mean + 0.5) / sd);
        case Alternative::TwoSided: {
            const double z = (std::abs(u_obs - mean) - 0.5) / sd;
            return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, z)));
        }
    }
    return 1.0;
}

double centered_sum_sq(std::span<const double> values) {
    double mean = 0.0;
    for (double a : values) mean += a;
    mean /= static_cast<double>(values.size());
    double q = 0.0;
    for (double a : values) q += (a - mean) * (a - mean);
    return q;
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alternative) {
    if (x.empty() || y.empty()) throw InputError("mann-whitney needs non-empty groups");
    for (double v : x) if (!std::isfinite(v)) throw InputError("mann-whitney values must be finite");
    for (double v : y) if (!std::isfinite(v)) throw InputError("mann-whitney values must be finite");
    TestResult r;
    r.alternative = alternative;
    r.cles = cles(x, y);
    r.statistic = r.cles * static_cast<double>(x.size()) * static_cast<double>(y.size());

    const bool all_tied = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) &&
                          std::all_of(y.begin(), y.end(), [&](double v) { return v == x[0]; });
    if (all_tied) {
        r.p_value = 1.0;
        r.exact = x.size() + y.size() <= kExactMannWhitneyLimit;
        return r;
    }
    if (x.size() + y.size() <= kExactMannWhitneyLimit) {
        r.exact = true;
        r.p_value = exact_p(x, y, r.statistic, alternative);
    } else {
        r.p_value = normal_p(x, y, r.statistic, alternative);
    }
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
    return r;
}

FisherZResult fisher_z_test(std::span<const double> u, std::span<const double> v,
                            const std::vector<std::vector<double>>& conditioning, double alpha) {
    const std::size_t n = u.size();
    if (v.size() != n) throw InputError("fisher-z vectors differ in length");
    for (const auto& c : conditioning)
        if (c.size() != n) throw InputError("fisher-z conditioning column differs in length");
    if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("alpha must lie in (0, 1)");
    const int s = static_cast<int>(conditioning.size());
    if (static_cast<int>(n) <= s + 3) throw InputError("fisher-z needs n > |S| + 3");

    FisherZResult out;
    out.conditioning_size = s;

    double r = 0.0;
    if (s == 0) {
        if (!(centered_sum_sq(u) > 0.0) || !(centered_sum_sq(v) > 0.0)) {
            out.degenerate = true;
            return out;
        }
        r = pearson(u, v);
    } else {
        Eigen::MatrixXd Z(n, s + 1);
        Z.col(0).setOnes();
        for (int j = 0; j < s; ++j)
            for (std::size_t i = 0; i < n; ++i) Z(static_cast<Eigen::Index>(i), j + 1) = conditioning[j][i];
        const Eigen::Map<const Eigen::VectorXd> uu(u.data(), static_cast<Eigen::Index>(n));
        const Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(n));
        const auto qr = Z.colPivHouseholderQr();
        const Eigen::VectorXd ru = uu - Z * qr.solve(uu);
        const Eigen::VectorXd rv = vv - Z * qr.solve(vv);
        const double nu = ru.squaredNorm();
        const double nv = rv.squaredNorm();
        const double scale = std::max(uu.squaredNorm(), vv.squaredNorm());
        if (nu <= 1e-24 * std::max(1.0, scale) || nv <= 1e-24 * std::max(1.0, scale)) {
            out.degenerate = true;
            return out;
        }
        r = ru.dot(rv) / std::sqrt(nu * nv);
    }

    constexpr double kMaxAbsR = 1.0 - 1e-15;
    r = std::clamp(r, -kMaxAbsR, kMaxAbsR);
    out.partial_correlation = r;
    out.z = std::atanh(r);
    out.statistic = std::sqrt(static_cast<double>(n) - s - 3.0) * std::abs(out.z);
    const boost::math::normal_distribution<double> normal;
    out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, out.statistic)));
    const double critical = boost::math::quantile(normal, 1.0 - alpha / 2.0);
    out.independent = !(out.statistic > critical);
    return out;
}

CorrelationTest spearman_test(std::span<const double> x, std::span<const double> y, Alternative alternative) {
    if (x.size() != y.size()) throw InputError("spearman test vectors differ in length");
    if (x.size() < 3) throw InputError("spearman test needs at least 3 pairs");
    CorrelationTest out;
    out.alternative = alternative;
    out.rho = spearman(x, y);
    const double dof = static_cast<double>(x.size()) - 2.0;
    const double rho = std::clamp(out.rho, -1.0 + 1e-15, 1.0 - 1e-15);
    out.statistic = rho * std::sqrt(dof / (1.0 - rho * rho));
    const boost::math::students_t_distribution<double> t(dof);
    switch (alternative) {
        case Alternative::Greater: out.p_value = boost::math::cdf(boost::math::complement(t, out.statistic)); break;
        case Alternative::Less: out.p_value = boost::math::cdf(t, out.statistic); break;
        case Alternative::TwoSided:
            out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(t, std::abs(out.statistic))));
            break;
    }
    return out;
}

}  // namespace modperf
