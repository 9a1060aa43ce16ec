#include "modperf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "modperf/errors.hpp"

namespace modperf {

std::string to_string(MetricKind kind) {
    return kind == MetricKind::Acc ? "acc" : "scc";
}

MetricKind metric_from_string(const std::string& text) {
    if (text == "acc" || text == "Acc" || text == "ACC") return MetricKind::Acc;
    if (text == "scc" || text == "SCC" || text == "spearman" || text == "Spearman") return MetricKind::Spearman;
    throw InputError("unknown metric: " + text);
}

double maape(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size() || actual.empty()) throw InputError("maape: lengths must match and be >= 1");
    constexpr double kZeroGuard = 1e-12;
    double total = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double err = std::abs(actual[i] - predicted[i]);
        const double denom = actual[i] == 0.0 ? kZeroGuard : std::abs(actual[i]);
        total += std::atan(err / denom);
    }
    return total / static_cast<double>(actual.size());
}

double acc(std::span<const double> predicted, std::span<const double> actual) {
    return 1.0 - 2.0 / std::numbers::pi * maape(predicted, actual);
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw InputError("pearson: lengths must match");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double spearman(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) throw InputError("spearman: lengths must match");
    if (actual.size() < 2) throw InputError("spearman: need at least two points");
    const auto rp = average_ranks(predicted);
    const auto ra = average_ranks(actual);
    return pearson(rp, ra);
}

double efficacy(MetricKind kind, std::span<const double> predicted, std::span<const double> actual) {
    return kind == MetricKind::Acc ? acc(predicted, actual) : spearman(predicted, actual);
}

}  // namespace modperf
