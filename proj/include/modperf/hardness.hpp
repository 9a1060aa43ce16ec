#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modperf/metrics.hpp"

namespace modperf {

enum class KnowledgeLevel { Null, Partial, Practical, Complete, Ideal };

std::string to_string(KnowledgeLevel level);
KnowledgeLevel knowledge_level_from_string(const std::string& text);

struct CurvePoint {
    int n = 0;
    /// Empty when fitting or evaluation failed at this size.
    std::optional<double> p;
    std::string error;
};

/// Efficacy p_i at each training size n_i for one metric.
struct EfficacyCurve {
    MetricKind metric = MetricKind::Spearman;
    std::vector<CurvePoint> points;

    std::vector<int> sizes() const;
    bool complete() const;
    /// Throws InputError if sizes are not strictly increasing or points failed.
    void check() const;
};

/// 1 / sum(1/n_i). Throws InputError on an empty list, RangeError on n_i <= 0.
double scaling_constant(std::span<const int> sizes);

struct HardnessScore {
    double value = 0.0;
    MetricKind metric = MetricKind::Spearman;
    double scaling_constant = 0.0;
};

/// C * sum(l_i / n_i) with l_i = 1 - p_i clamped to [0, 1].
HardnessScore hardness(const EfficacyCurve& curve);

struct OpportunityTerm {
    int n = 0;
    double gap = 0.0;
    double filling = 0.0;
};

struct OpportunityScore {
    double value = 0.0;
    KnowledgeLevel level = KnowledgeLevel::Partial;
    MetricKind metric = MetricKind::Spearman;
    std::vector<OpportunityTerm> per_size;
};

/// Gap G_i = p*_i - p⊥_i; filling f_i = clamp((p^K_i - p⊥_i) / G_i, 0, 1)
/// when G_i > 1e-9, else 0; value = C * sum(f_i G_i / n_i) with the same
/// C as hardness. Throws InputError when curves disagree on sizes or metric.
OpportunityScore opportunity(const EfficacyCurve& null_curve, const EfficacyCurve& ideal_curve,
                             const EfficacyCurve& level_curve, KnowledgeLevel level);

enum class HardnessLevel { Low, Medium, High };
enum class HardnessMode { FixedRange, EmpiricalQuartile };

std::string to_string(HardnessLevel level);
std::string to_string(HardnessMode mode);
HardnessMode hardness_mode_from_string(const std::string& text);

/// Linear-interpolation quantile (numpy default), q in [0, 1].
double quantile(std::vector<double> values, double q);

/// FixedRange: [0,.25) Low, [.25,.75) Medium, [.75,1] High. EmpiricalQuartile:
/// below Q1 Low, at or above Q3 High, Medium otherwise; needs >= 4 population
/// scores (InputError otherwise).
HardnessLevel classify_hardness(double score, HardnessMode mode,
                                std::span<const double> population = {});

/// Row order of the matrix.
inline constexpr std::array<KnowledgeLevel, 3> kMatrixLevels{KnowledgeLevel::Partial, KnowledgeLevel::Practical,
                                                             KnowledgeLevel::Complete};
inline constexpr std::array<HardnessLevel, 3> kHardnessLevels{HardnessLevel::Low, HardnessLevel::Medium,
                                                              HardnessLevel::High};

struct MatrixCell {
    std::vector<double> samples;
    std::vector<std::string> sample_ids;
    double mean = 0.0;
    int count = 0;
    bool empty() const { return count == 0; }
};

/// Knowledge (rows: Partial, Practical, Complete) by hardness (columns:
/// Low, Medium, High) grid of opportunity samples.
struct OpportunityMatrix {
    MetricKind metric = MetricKind::Spearman;
    std::array<std::array<MatrixCell, 3>, 3> cells;

    const MatrixCell& cell(KnowledgeLevel level, HardnessLevel hardness) const;
    MatrixCell& cell(KnowledgeLevel level, HardnessLevel hardness);

    nlohmann::json to_json() const;
};

struct OpportunityObservation {
    KnowledgeLevel level = KnowledgeLevel::Partial;
    HardnessLevel hardness = HardnessLevel::Low;
    double value = 0.0;
    std::string id;
};

/// Throws InputError for levels outside Partial/Practical/Complete.
OpportunityMatrix build_matrix(MetricKind metric, std::span<const OpportunityObservation> observations);

}  // namespace modperf
