#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modperf/hardness.hpp"
#include "modperf/importance.hpp"
#include "modperf/influence_graph.hpp"
#include "modperf/l1.hpp"
#include "modperf/statistics.hpp"
#include "modperf/validation.hpp"

namespace modperf {

/// Names of the reported aspects; the cross-module probability is
/// summarized by its two distribution parameters as regressors.
inline const std::array<std::string, 4> kAspectNames{"Option#", "IEWithin_p", "IEAcross_p", "Module#"};
inline const std::array<std::string, 5> kRegressorNames{"Option#", "IEWithin_p", "IEAcross_mu", "IEAcross_sigma",
                                                        "Module#"};
/// Aspect (index into kAspectNames) of each regressor.
inline constexpr std::array<int, 5> kRegressorAspect{0, 1, 2, 2, 3};

/// Regressors min-max scaled by `ranges`: [Option#, p_w, mu_a, sigma_a, Module#].
std::array<double, 5> scale_aspects(const StructuralAspects& aspects, const AspectRanges& ranges = kTableRanges);

struct AspectRecord {
    std::string system_id;
    StructuralAspects aspects;
    double hardness = 0.0;
};

struct AspectGrid {
    int degree_lo = 1;
    int degree_hi = 4;
    int n_alphas = 500;
    double alpha_lo = 1e-4;
    double alpha_hi = 10.0;
    CVSpec cv{5, 0};
    int max_iter = 2000;
    double tol = 1e-6;

    /// Log-spaced, largest first.
    std::vector<double> alphas() const;
};

struct AspectCandidate {
    int degree = 1;
    double alpha = 1.0;
};

struct AspectRegression {
    FittedL1 model;
    AspectCandidate chosen;
    double cv_mse = 0.0;
    /// Over kAspectNames.
    ImportanceVector importance;
    /// Over kRegressorNames.
    ImportanceVector regressor_importance;

    double predict(const StructuralAspects& aspects) const;
    nlohmann::json to_json() const;
};

/// Lasso over polynomial features of the scaled regressors, degree and alpha
/// chosen by k-fold CV MSE over the full grid (ties keep the lower degree and
/// larger alpha). Importance per aspect is the sum of |coef| over terms
/// containing it, mixed terms split equally among their distinct aspects.
/// Throws InputError with fewer than 10 records.
AspectRegression aspect_regression(const std::vector<AspectRecord>& records, const AspectGrid& grid = {});

struct OpportunityRecord {
    std::string system_id;
    KnowledgeLevel level = KnowledgeLevel::Partial;
    double value = 0.0;
};

struct HypothesisRow {
    std::string family;  // "hardness", "knowledge" or "cross"
    std::string id;
    std::string group1;
    std::string group2;
    Alternative alternative = Alternative::Less;
    int n1 = 0;
    int n2 = 0;
    double p_value = 1.0;
    double statistic = 0.0;
    /// P(G1 > G2) + ½ ties, and its complement.
    double cles1 = 0.5;
    double cles2 = 0.5;
    bool significant = false;
    bool skipped = false;
    std::string note;
};

/// The 27-test battery over a populated matrix. Row-wise tests compare
/// hardness levels within a knowledge level and column-wise tests compare
/// knowledge levels within a hardness level, both one-sided (first group
/// lower); cross tests are two-sided between (higher knowledge, lower
/// hardness) and (lower knowledge, higher hardness). Empty cells skip a row.
std::vector<HypothesisRow> hypothesis_tests(const OpportunityMatrix& matrix, double alpha = 0.05);

struct TwoStageOptions {
    HardnessMode mode = HardnessMode::FixedRange;
    /// Classify measured instead of predicted hardness.
    bool use_measured_hardness = false;
    double alpha = 0.05;
    AspectGrid grid;
};

struct TwoStageResult {
    MetricKind metric = MetricKind::Spearman;
    std::optional<AspectRegression> stage1;
    std::map<std::string, double> measured_hardness;
    std::map<std::string, double> used_hardness;
    std::map<std::string, HardnessLevel> hardness_level;
    OpportunityMatrix matrix;
    std::vector<HypothesisRow> tests;
    /// Why stage 1 or the chosen classification mode was bypassed, if it was.
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

/// Stage 1 regresses hardness on aspects (clamped to [0, 1] when used);
/// stage 2 classifies each system and routes its opportunities into the
/// matrix, then runs the battery. With fewer than 10 systems stage 1 is
/// skipped and measured hardness used; empirical mode with fewer than four
/// systems falls back to fixed ranges. Both are noted.
TwoStageResult two_stage_pipeline(const std::vector<AspectRecord>& aspect_records,
                                  const std::vector<OpportunityRecord>& opportunity_records, MetricKind metric,
                                  const TwoStageOptions& options = {});

std::string matrix_csv(const OpportunityMatrix& matrix);
std::string tests_csv(const std::vector<HypothesisRow>& rows);
nlohmann::json tests_json(const std::vector<HypothesisRow>& rows);
/// Standalone SVG: knowledge rows by hardness columns, light to dark by mean.
std::string heatmap_svg(const OpportunityMatrix& matrix);

}  // namespace modperf
