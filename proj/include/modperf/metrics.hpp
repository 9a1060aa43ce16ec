#pragma once

#include <span>
#include <string>
#include <vector>

namespace modperf {

enum class MetricKind { Acc, Spearman };

std::string to_string(MetricKind kind);
/// Accepts "acc" / "Acc" and "scc" / "spearman" / "Spearman".
MetricKind metric_from_string(const std::string& text);

/// Mean arctangent absolute percentage error, in [0, pi/2]. An actual value
/// of exactly zero uses |y - yhat| / 1e-12 as its ratio.
double maape(std::span<const double> predicted, std::span<const double> actual);

/// 1 - (2/pi) * MAAPE, in [0, 1].
double acc(std::span<const double> predicted, std::span<const double> actual);

/// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation; 0 when either side has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average ranks; 0 when either ranking is constant.
double spearman(std::span<const double> predicted, std::span<const double> actual);

double efficacy(MetricKind kind, std::span<const double> predicted, std::span<const double> actual);

}  // namespace modperf
