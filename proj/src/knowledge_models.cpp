#include "modperf/knowledge_models.hpp"

#include <cmath>

#include "modperf/errors.hpp"
#include "modperf/metrics.hpp"
#include "modperf/statistics.hpp"

namespace modperf {

nlohmann::json ModelingSetup::to_json() const {
    nlohmann::json ff = nlohmann::json::array();
    for (auto f : space.feature_fractions)
        ff.push_back(f == FeatureFraction::Third ? "third" : f == FeatureFraction::Sqrt ? "sqrt" : "all");
    return {{"space",
             {{"n_trees", {space.n_trees_lo, space.n_trees_hi}},
              {"max_depth", {space.max_depth_lo, space.max_depth_hi}},
              {"min_samples_leaf", space.min_samples_leaf},
              {"feature_fraction", ff}}},
            {"budget", budget.evaluations},
            {"budget_seed", budget.seed},
            {"folds", cv.folds},
            {"cv_seed", cv.shuffle_seed},
            {"alpha_ci", alpha_ci},
            {"fit_seed", fit_seed},
            {"perf_index", perf_index}};
}

Eigen::MatrixXd option_matrix(const std::vector<MeasurementRecord>& records) {
    if (records.empty()) return {};
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(records[0].config.size()));
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = 0; j < records[i].config.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records[i].config[j];
    return X;
}

Eigen::MatrixXd iv_matrix(const std::vector<MeasurementRecord>& records) {
    if (records.empty()) return {};
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()),
                      static_cast<Eigen::Index>(records[0].iv_values.size()));
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = 0; j < records[i].iv_values.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records[i].iv_values[j];
    return X;
}

Eigen::VectorXd perf_vector(const std::vector<MeasurementRecord>& records, int perf_index) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (perf_index < 0 || perf_index >= static_cast<int>(records[i].perf_values.size()))
            throw RangeError("performance index out of range");
        y(static_cast<Eigen::Index>(i)) = records[i].perf_values[static_cast<std::size_t>(perf_index)];
    }
    return y;
}

namespace {

void require_rows(const std::vector<MeasurementRecord>& train, const ModelingSetup& setup) {
    if (static_cast<int>(train.size()) < std::max(setup.cv.folds, 2))
        throw InputError("training set of " + std::to_string(train.size()) + " rows is smaller than " +
                         std::to_string(setup.cv.folds) + " folds");
}

TunedForest tune(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelingSetup& setup,
                 const std::string& tag, std::uint64_t index) {
    SearchBudget budget = setup.budget;
    budget.seed = derive_seed(setup.budget.seed, tag, index);
    return tune_forest(X, y, setup.space, budget, setup.cv, derive_seed(setup.fit_seed, tag, index));
}

// Column of a parent node: option bits, or IV values from `ivs`.
double node_value(const CausalInfluenceGraph& graph, const NodeId& node, const MeasurementRecord& record,
                  const std::vector<double>& ivs) {
    if (node.kind == NodeKind::Option) return record.config[static_cast<std::size_t>(graph.option_index(node))];
    return ivs[static_cast<std::size_t>(graph.iv_index(node))];
}

std::vector<NodeId> iv_evaluation_order(const CausalInfluenceGraph& graph) {
    std::vector<NodeId> order;
    for (const auto& n : topological_order(graph))
        if (n.kind == NodeKind::Intermediate) order.push_back(n);
    return order;
}

Eigen::MatrixXd parent_matrix(const CausalInfluenceGraph& graph, const std::vector<NodeId>& parents,
                              const std::vector<MeasurementRecord>& records) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(parents.size()));
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = 0; j < parents.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                node_value(graph, parents[j], records[i], records[i].iv_values);
    return X;
}

// IV models fit on measured upstream values; `select` chooses each IV's inputs.
ModularPredictor fit_structured(KnowledgeLevel level, const std::vector<MeasurementRecord>& train,
                                const CausalInfluenceGraph& graph, const ModelingSetup& setup,
                                std::shared_ptr<const TunedForest> perf_model,
                                const std::function<std::vector<NodeId>(const NodeId&)>& candidates_of,
                                bool prune) {
    require_rows(train, setup);
    ModularPredictor p;
    p.level = level;
    p.n_options = graph.aspects().total_options();
    p.n_ivs = graph.aspects().total_ivs();
    p.perf_model = perf_model ? std::move(perf_model) : fit_perf_model(train, setup);

    for (const auto& iv : iv_evaluation_order(graph)) {
        const int idx = graph.iv_index(iv);
        IVModel m;
        m.iv = iv;
        m.candidates = candidates_of(iv);
        Eigen::VectorXd y(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i)
            y(static_cast<Eigen::Index>(i)) = train[i].iv_values[static_cast<std::size_t>(idx)];
        m.training_mean = y.mean();

        if (prune) {
            std::vector<double> target(y.data(), y.data() + y.size());
            std::vector<double> column(train.size());
            for (const auto& c : m.candidates) {
                for (std::size_t i = 0; i < train.size(); ++i)
                    column[i] = node_value(graph, c, train[i], train[i].iv_values);
                if (train.size() > 3 && !fisher_z_test(column, target, {}, setup.alpha_ci).independent)
                    m.parents.push_back(c);
            }
        } else {
            m.parents = m.candidates;
        }
        m.column = idx;
        for (const auto& parent : m.parents)
            m.parent_columns.push_back(parent.kind == NodeKind::Option ? graph.option_index(parent)
                                                                       : p.n_options + graph.iv_index(parent));
        if (!m.parents.empty()) m.forest = tune(parent_matrix(graph, m.parents, train), y, setup, "iv", idx);
        p.iv_models.push_back(std::move(m));
    }
    return p;
}

}  // namespace

std::shared_ptr<const TunedForest> fit_perf_model(const std::vector<MeasurementRecord>& train,
                                                  const ModelingSetup& setup) {
    require_rows(train, setup);
    return std::make_shared<const TunedForest>(
        tune(iv_matrix(train), perf_vector(train, setup.perf_index), setup, "perf", 0));
}

ModularPredictor fit_null(const std::vector<MeasurementRecord>& train, const ModelingSetup& setup) {
    require_rows(train, setup);
    ModularPredictor p;
    p.level = KnowledgeLevel::Null;
    p.n_options = static_cast<int>(train[0].config.size());
    p.n_ivs = static_cast<int>(train[0].iv_values.size());
    p.direct_model = tune(option_matrix(train), perf_vector(train, setup.perf_index), setup, "null", 0);
    return p;
}

ModularPredictor fit_partial(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                             const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                             std::shared_ptr<const TunedForest> perf_model) {
    auto same_module = [&](const NodeId& iv) {
        const auto it = knowledge.logical_boundaries.find(iv.module);
        if (it == knowledge.logical_boundaries.end()) throw StructuralError("IV outside every logical boundary");
        return it->second.options;
    };
    return fit_structured(KnowledgeLevel::Partial, train, graph, setup, std::move(perf_model), same_module, false);
}

ModularPredictor fit_practical(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                               const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                               std::shared_ptr<const TunedForest> perf_model) {
    auto pie = [&](const NodeId& iv) { return knowledge.candidate_parents(iv, false); };
    return fit_structured(KnowledgeLevel::Practical, train, graph, setup, std::move(perf_model), pie, true);
}

ModularPredictor fit_complete(const std::vector<MeasurementRecord>& train, const CausalInfluenceGraph& graph,
                              const KnowledgeArtifacts& knowledge, const ModelingSetup& setup,
                              std::shared_ptr<const TunedForest> perf_model) {
    auto ie = [&](const NodeId& iv) { return knowledge.candidate_parents(iv, true); };
    return fit_structured(KnowledgeLevel::Complete, train, graph, setup, std::move(perf_model), ie, true);
}

ModularPredictor fit_ideal(const std::vector<MeasurementRecord>& train, const ModelingSetup& setup,
                           std::shared_ptr<const TunedForest> perf_model) {
    require_rows(train, setup);
    ModularPredictor p;
    p.level = KnowledgeLevel::Ideal;
    p.n_options = static_cast<int>(train[0].config.size());
    p.n_ivs = static_cast<int>(train[0].iv_values.size());
    p.perf_model = perf_model ? std::move(perf_model) : fit_perf_model(train, setup);
    return p;
}

ModularPredictor fit_level(KnowledgeLevel level, const std::vector<MeasurementRecord>& train,
                           const CausalInfluenceGraph& graph, const KnowledgeArtifacts& knowledge,
                           const ModelingSetup& setup, std::shared_ptr<const TunedForest> perf_model) {
    switch (level) {
        case KnowledgeLevel::Null: return fit_null(train, setup);
        case KnowledgeLevel::Partial: return fit_partial(train, graph, knowledge, setup, std::move(perf_model));
        case KnowledgeLevel::Practical: return fit_practical(train, graph, knowledge, setup, std::move(perf_model));
        case KnowledgeLevel::Complete: return fit_complete(train, graph, knowledge, setup, std::move(perf_model));
        case KnowledgeLevel::Ideal: return fit_ideal(train, setup, std::move(perf_model));
    }
    throw InputError("unknown knowledge level");
}

Eigen::VectorXd ModularPredictor::predict(const std::vector<MeasurementRecord>& records) const {
    if (level == KnowledgeLevel::Null) {
        if (!direct_model) throw StructuralError("null predictor has no model");
        return direct_model->forest.predict(option_matrix(records));
    }
    if (!perf_model) throw StructuralError("predictor has no performance model");
    if (level == KnowledgeLevel::Ideal) return perf_model->forest.predict(iv_matrix(records));

    // Options first, then IVs filled in evaluation order from earlier predictions.
    const auto rows = static_cast<Eigen::Index>(records.size());
    Eigen::MatrixXd values(rows, n_options + n_ivs);
    values.leftCols(n_options) = option_matrix(records);
    values.rightCols(n_ivs).setZero();
    for (const auto& m : iv_models) {
        const Eigen::Index target = n_options + m.column;
        if (m.fallback()) {
            values.col(target).setConstant(m.training_mean);
            continue;
        }
        Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(m.parent_columns.size()));
        for (std::size_t j = 0; j < m.parent_columns.size(); ++j)
            X.col(static_cast<Eigen::Index>(j)) = values.col(m.parent_columns[j]);
        values.col(target) = m.forest->forest.predict(X);
    }
    return perf_model->forest.predict(values.rightCols(n_ivs));
}

int ModularPredictor::evaluations() const {
    int total = direct_model ? direct_model->evaluations : 0;
    if (perf_model) total += perf_model->evaluations;
    for (const auto& m : iv_models)
        if (m.forest) total += m.forest->evaluations;
    return total;
}

nlohmann::json ModularPredictor::summary() const {
    nlohmann::json ivs = nlohmann::json::array();
    int fallbacks = 0;
    for (const auto& m : iv_models) {
        nlohmann::json parents = nlohmann::json::array();
        for (const auto& p : m.parents) parents.push_back(p.str());
        ivs.push_back({{"iv", m.iv.str()},
                       {"candidates", m.candidates.size()},
                       {"parents", parents},
                       {"fallback_mean", m.fallback() ? nlohmann::json(m.training_mean) : nlohmann::json()}});
        fallbacks += m.fallback() ? 1 : 0;
    }
    return {{"level", to_string(level)}, {"evaluations", evaluations()}, {"fallbacks", fallbacks}, {"ivs", ivs}};
}

double evaluate_efficacy(const ModularPredictor& predictor, const std::vector<MeasurementRecord>& test,
                         MetricKind metric, int perf_index) {
    const Eigen::VectorXd predicted = predictor.predict(test);
    const Eigen::VectorXd actual = perf_vector(test, perf_index);
    return efficacy(metric, std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())),
                    std::span<const double>(actual.data(), static_cast<std::size_t>(actual.size())));
}

std::map<MetricKind, EfficacyCurve> efficacy_curves(const PredictorFactory& factory, const SystemDataset& dataset,
                                                    const std::vector<MetricKind>& metrics,
                                                    const std::vector<int>& sizes, int perf_index) {
    for (int n : sizes)
        if (n < 1 || static_cast<std::size_t>(n) > dataset.train.size())
            throw RangeError("training size " + std::to_string(n) + " outside the training set");
    std::map<MetricKind, EfficacyCurve> curves;
    for (auto metric : metrics) curves[metric].metric = metric;
    for (int n : sizes) {
        std::optional<ModularPredictor> predictor;
        std::string error;
        try {
            predictor = factory(training_prefix(dataset, n), n);
        } catch (const std::exception& e) {
            error = e.what();
        }
        for (auto metric : metrics) {
            CurvePoint point;
            point.n = n;
            if (predictor) {
                try {
                    const double p = evaluate_efficacy(*predictor, dataset.test, metric, perf_index);
                    if (std::isfinite(p)) point.p = p;
                    else point.error = "non-finite efficacy";
                } catch (const std::exception& e) {
                    point.error = e.what();
                }
            } else {
                point.error = error;
            }
            curves[metric].points.push_back(point);
        }
    }
    return curves;
}

EfficacyCurve efficacy_curve(const PredictorFactory& factory, const SystemDataset& dataset, MetricKind metric,
                             const std::vector<int>& sizes, int perf_index) {
    return efficacy_curves(factory, dataset, {metric}, sizes, perf_index).at(metric);
}

}  // namespace modperf
