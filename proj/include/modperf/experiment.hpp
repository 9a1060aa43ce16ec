#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modperf/hardness.hpp"
#include "modperf/influence_graph.hpp"
#include "modperf/knowledge_models.hpp"
#include "modperf/metrics.hpp"
#include "modperf/semantics.hpp"
#include "modperf/two_stage.hpp"

namespace modperf {

struct ExperimentConfig {
    std::uint64_t global_seed = 1;
    int n_systems = 20;
    int trials = 3;
    std::vector<int> train_sizes{20, 50, 100, 200, 500, 1000};
    int n_train = 1000;
    int n_test = 1000;
    std::vector<MetricKind> metrics{MetricKind::Acc, MetricKind::Spearman};
    std::vector<KnowledgeLevel> levels{KnowledgeLevel::Null, KnowledgeLevel::Partial, KnowledgeLevel::Practical,
                                       KnowledgeLevel::Complete, KnowledgeLevel::Ideal};

    /// Aspect sampling ranges; scaling for the regression always uses the
    /// full default ranges.
    AspectRanges ranges;
    /// When non-empty, system s takes Module# and Option# from the
    /// (module, option) product at index s modulo its size; other aspects
    /// are still sampled.
    std::vector<int> design_module_counts;
    std::vector<int> design_option_counts;
    double iv_to_iv_p = 0.15;
    double noise_fraction = 0.05;

    ForestSearchSpace forest_space{10, 30, 4, 12, {1, 2, 5}, {FeatureFraction::Third, FeatureFraction::Sqrt,
                                                              FeatureFraction::All}};
    int budget = 2;
    int folds = 3;
    double alpha_ci = 0.05;
    /// Significance level of the hypothesis battery.
    double alpha = 0.05;
    HardnessMode hardness_mode = HardnessMode::FixedRange;
    bool use_measured_hardness = false;
    AspectGrid aspect_grid;
    int importance_repeats = 10;
    int shapley_samples = 200;

    std::filesystem::path out = "out";
    int jobs = 1;
    bool resume = false;

    /// Throws InputError / RangeError on inconsistent values.
    void validate() const;
    /// Everything that influences results; excludes out, jobs and resume.
    nlohmann::json to_json() const;
    /// Overlays keys present in `j` onto the current values.
    void merge_json(const nlohmann::json& j);
    static ExperimentConfig from_file(const std::filesystem::path& path);
};

std::string system_id(int index);
std::string trial_id(int index);

/// Aspects of system `index`, honoring the design lists.
StructuralAspects system_aspects(const ExperimentConfig& config, int index);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions are
/// collected per index and returned as (index, message) pairs.
std::vector<std::pair<int, std::string>> parallel_for(int n, int jobs, const std::function<void(int)>& fn);

/// Writes via a temporary file and rename; JSON is indented with sorted keys.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

struct StageSummary {
    int units = 0;
    int skipped = 0;
    std::vector<std::pair<std::string, std::string>> failures;
};

StageSummary run_generate(const ExperimentConfig& config);
StageSummary run_model(const ExperimentConfig& config);
StageSummary run_analyze(const ExperimentConfig& config);
StageSummary run_report(const ExperimentConfig& config);
StageSummary run_all(const ExperimentConfig& config);

/// Curve averaged over the available trials of one system; a point is
/// missing only when every trial failed there.
EfficacyCurve load_mean_curve(const ExperimentConfig& config, int system, KnowledgeLevel level, MetricKind metric,
                              std::vector<std::string>* gaps = nullptr);

std::string render_report(const std::filesystem::path& out);

}  // namespace modperf
