#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modperf/dataset.hpp"
#include "modperf/hardness.hpp"
#include "modperf/influence_graph.hpp"
#include "modperf/validation.hpp"

namespace modperf {

/// Search settings shared by every regressor fitted for one (system, n) cell.
struct ModelingSetup {
    ForestSearchSpace space;
    SearchBudget budget;
    CVSpec cv;
    double alpha_ci = 0.05;
    std::uint64_t fit_seed = 0;
    /// Which performance variable is modeled.
    int perf_index = 0;

    nlohmann::json to_json() const;
};

struct IVModel {
    NodeId iv;
    std::vector<NodeId> candidates;
    /// Inputs of `forest`, options or upstream IVs.
    std::vector<NodeId> parents;
    /// Canonical IV index of `iv`, and per parent its option index or
    /// n_options + IV index.
    int column = 0;
    std::vector<int> parent_columns;
    std::optional<TunedForest> forest;
    /// Prediction when no parent survives.
    double training_mean = 0.0;

    bool fallback() const { return !forest.has_value(); }
};

class ModularPredictor {
public:
    KnowledgeLevel level = KnowledgeLevel::Null;
    int n_options = 0;
    int n_ivs = 0;
    /// Null only: options straight to performance.
    std::optional<TunedForest> direct_model;
    /// IV models in evaluation (topological) order.
    std::vector<IVModel> iv_models;
    /// IVs (canonical order) to performance, shared between levels.
    std::shared_ptr<const TunedForest> perf_model;

    /// Null uses options only; Ideal reads the records' measured IVs; the
    /// structured levels cascade predicted IVs into the performance model.
    Eigen::VectorXd predict(const std::vector<MeasurementRecord>& records) const;

    /// Search evaluations spent across all regressors.
    int evaluations() const;
    nlohmann::json summary() const;
};

/// Option bits as a (records x options) matrix.
Eigen::MatrixXd option_matrix(const std::vector<MeasurementRecord>& records);
Eigen::MatrixXd iv_matrix(const std::vector<MeasurementRecord>& records);
Eigen::VectorXd perf_vector(const std::vector<MeasurementRecord>& records, int perf_index = 0);

/// Forest from measured IVs to performance; the aggregator of every
/// structured level and the whole of Ideal.
std::shared_ptr<const TunedForest> fit_perf_model(const std::vector<MeasurementRecord>& train,
                                                  const ModelingSetup& setup);

/// Each throws InputError when the training set is smaller than the fold count.
ModularPredictor fit_null(const std::vector<MeasurementRecord>& train, const ModelingSetup& setup);
ModularPredictor fit_partial(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                             const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                             std::shared_ptr<const TunedForest> perf_model = nullptr);
/// Candidates are PIE in-edges, each kept only when a marginal Fisher-Z test
/// rejects independence at `setup.alpha_ci`.
ModularPredictor fit_practical(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                               const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                               std::shared_ptr<const TunedForest> perf_model = nullptr);
/// As Practical with the true edge set in place of PIE.
ModularPredictor fit_complete(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                              const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                              std::shared_ptr<const TunedForest> perf_model = nullptr);
ModularPredictor fit_ideal(const std::vector<MeasurementRecord>& train, const ModelingSetup& setup,
                           std::shared_ptr<const TunedForest> perf_model = nullptr);

ModularPredictor fit_level(KnowledgeLevel level, const std::vector<MeasurementRecord>& train,
                           const CausalInfluenceGraph& graph, const KnowledgeArtifacts& knowledge,
                           const ModelingSetup& setup, std::shared_ptr<const TunedForest> perf_model = nullptr);

double evaluate_efficacy(const ModularPredictor& predictor, const std::vector<MeasurementRecord>& test,
                         MetricKind metric, int perf_index = 0);

/// Fits a predictor on a training prefix of size n.
using PredictorFactory = std::function<ModularPredictor(const std::vector<MeasurementRecord>& train, int n)>;

/// One curve per metric from a single fit per size; a failed fit or
/// evaluation marks that point instead of aborting the curve.
std::map<MetricKind, EfficacyCurve> efficacy_curves(const PredictorFactory& factory, const SystemDataset& dataset,
                                                    const std::vector<MetricKind>& metrics,
                                                    const std::vector<int>& sizes, int perf_index = 0);

EfficacyCurve efficacy_curve(const PredictorFactory& factory, const SystemDataset& dataset, MetricKind metric,
                             const std::vector<int>& sizes, int perf_index = 0);

}  // namespace modperf
