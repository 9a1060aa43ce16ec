#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "modperf/dataset.hpp"
#include "modperf/errors.hpp"
#include "modperf/knowledge_models.hpp"

using namespace modperf;

namespace {

ModelingSetup quick_setup(std::uint64_t seed = 1) {
    ModelingSetup s;
    s.space = ForestSearchSpace{10, 20, 4, 10, {1, 2}, {FeatureFraction::All, FeatureFraction::Third}};
    s.budget = {2, seed};
    s.cv = {3, seed};
    s.fit_seed = seed;
    return s;
}

struct Fixture {
    std::shared_ptr<const CausalInfluenceGraph> graph;
    KnowledgeArtifacts knowledge;
    std::unique_ptr<SystemSemantics> semantics;
    SystemDataset data;
};

Fixture make_fixture(std::uint64_t seed, int n_train, int n_test, double noise = 0.05) {
    StructuralAspects a;
    a.option_count = 6;
    a.p_w = 0.6;
    a.mu_a = 0.05;
    a.sigma_a = 0.05;
    a.module_count = 5;
    Fixture f;
    f.graph = std::make_shared<const CausalInfluenceGraph>(generate_graph(a, seed));
    f.knowledge = derive_knowledge(*f.graph);
    f.semantics = std::make_unique<SystemSemantics>(synthesize_semantics(f.graph, seed + 1, noise));
    f.data = sample_dataset(*f.semantics, seed + 2, n_train, n_test);
    return f;
}

std::set<std::pair<NodeId, NodeId>> in_edges(const std::vector<Edge>& edges) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (const auto& e : edges) out.insert({e.src, e.dst});
    return out;
}

}  // namespace

TEST_CASE("parent sets respect each level's knowledge") {
    const auto f = make_fixture(3, 200, 50);
    const auto setup = quick_setup();
    const auto perf = fit_perf_model(f.data.train, setup);
    const auto ie = in_edges(f.knowledge.influence_edges);
    const auto pie = in_edges(f.knowledge.potential_influence_edges);

    const auto complete = fit_complete(f.data.train, *f.graph, f.knowledge, setup, perf);
    const auto practical = fit_practical(f.data.train, *f.graph, f.knowledge, setup, perf);
    const auto partial = fit_partial(f.data.train, *f.graph, f.knowledge, setup, perf);
    REQUIRE(complete.iv_models.size() == 15);
    for (const auto& m : complete.iv_models)
        for (const auto& p : m.parents) CHECK(ie.count({p, m.iv}) == 1);
    for (const auto& m : practical.iv_models)
        for (const auto& p : m.parents) CHECK(pie.count({p, m.iv}) == 1);
    for (const auto& m : partial.iv_models) {
        CHECK(m.parents.size() == 6);
        for (const auto& p : m.parents) {
            CHECK(p.kind == NodeKind::Option);
            CHECK(p.module == m.iv.module);
        }
    }
    CHECK(complete.perf_model == perf);
}

TEST_CASE("IV models follow topological order") {
    const auto f = make_fixture(4, 120, 30);
    const auto m = fit_complete(f.data.train, *f.graph, f.knowledge, quick_setup());
    std::set<NodeId> done;
    for (const auto& iv : m.iv_models) {
        for (const auto& p : iv.parents)
            if (p.kind == NodeKind::Intermediate) CHECK(done.count(p) == 1);
        done.insert(iv.iv);
    }
}

TEST_CASE("constant performance is predicted exactly") {
    auto f = make_fixture(5, 100, 40);
    std::vector<std::vector<double>> zero(1, std::vector<double>(15, 0.0));
    const SystemSemantics flat(f.graph, f.semantics->iv_formulas(), zero, 0.05);
    const auto data = sample_dataset(flat, 1, 100, 40);
    for (auto level : {KnowledgeLevel::Null, KnowledgeLevel::Partial, KnowledgeLevel::Ideal}) {
        const auto m = fit_level(level, data.train, *f.graph, f.knowledge, quick_setup());
        CHECK(m.predict(data.test).cwiseAbs().maxCoeff() == 0.0);
        CHECK(evaluate_efficacy(m, data.test, MetricKind::Spearman) == 0.0);
        CHECK(evaluate_efficacy(m, data.test, MetricKind::Acc) == 1.0);
    }
}

TEST_CASE("an IV with no surviving parent falls back to its mean") {
    const auto f = make_fixture(6, 150, 30);
    auto formulas = f.semantics->iv_formulas();
    for (auto& w : formulas[0].linear_weights) w = 0.0;
    for (auto& w : formulas[0].pair_weights) w = 0.0;
    const SystemSemantics sem(f.graph, formulas, f.semantics->perf_weights(), 0.05);
    const auto data = sample_dataset(sem, 2, 150, 30);
    const auto m = fit_complete(data.train, *f.graph, f.knowledge, quick_setup());
    bool found = false;
    for (const auto& iv : m.iv_models)
        if (iv.column == 0) {
            found = true;
            CHECK(iv.fallback());
            CHECK(iv.parents.empty());
            CHECK(iv.training_mean == 0.0);
        }
    CHECK(found);
    CHECK(m.summary().dump().find("fallback") != std::string::npos);
}

TEST_CASE("ideal recovers a noiseless performance function") {
    const auto f = make_fixture(7, 1000, 500, 0.0);
    const auto m = fit_ideal(f.data.train, quick_setup());
    CHECK(evaluate_efficacy(m, f.data.test, MetricKind::Acc) > 0.9);
    CHECK(evaluate_efficacy(m, f.data.test, MetricKind::Spearman) > 0.9);
}

TEST_CASE("structure helps: ideal and complete beat null on a small sample") {
    const auto f = make_fixture(8, 300, 300);
    const auto setup = quick_setup();
    const auto null_m = fit_null(f.data.train, setup);
    const auto ideal = fit_ideal(f.data.train, setup);
    const auto complete = fit_complete(f.data.train, *f.graph, f.knowledge, setup, ideal.perf_model);
    const double pn = evaluate_efficacy(null_m, f.data.test, MetricKind::Spearman);
    CHECK(evaluate_efficacy(ideal, f.data.test, MetricKind::Spearman) > pn);
    CHECK(evaluate_efficacy(complete, f.data.test, MetricKind::Spearman) > pn);
}

TEST_CASE("fitting is deterministic and budgets are shared") {
    const auto f = make_fixture(9, 80, 40);
    const auto setup = quick_setup(5);
    const auto a = fit_practical(f.data.train, *f.graph, f.knowledge, setup);
    const auto b = fit_practical(f.data.train, *f.graph, f.knowledge, setup);
    CHECK(a.predict(f.data.test) == b.predict(f.data.test));
    const auto null_m = fit_null(f.data.train, setup);
    CHECK(null_m.evaluations() == setup.budget.evaluations);
    int fitted = 0;
    for (const auto& iv : a.iv_models) fitted += iv.fallback() ? 0 : 1;
    CHECK(a.evaluations() == setup.budget.evaluations * (fitted + 1));
}

TEST_CASE("too few rows and bad prefixes are reported") {
    const auto f = make_fixture(10, 40, 20);
    std::vector<MeasurementRecord> two(f.data.train.begin(), f.data.train.begin() + 2);
    CHECK_THROWS_AS(fit_null(two, quick_setup()), InputError);
    PredictorFactory factory = [&](const std::vector<MeasurementRecord>& train, int n) {
        if (n == 10) throw InputError("boom");
        return fit_null(train, quick_setup());
    };
    const auto curves = efficacy_curves(factory, f.data, {MetricKind::Acc, MetricKind::Spearman}, {5, 10, 40});
    REQUIRE(curves.size() == 2);
    const auto& acc = curves.at(MetricKind::Acc);
    REQUIRE(acc.points.size() == 3);
    CHECK(acc.points[0].p.has_value());
    CHECK_FALSE(acc.points[1].p.has_value());
    CHECK(acc.points[1].error.find("boom") != std::string::npos);
    CHECK_FALSE(acc.complete());
    CHECK_THROWS_AS(efficacy_curve(factory, f.data, MetricKind::Acc, {5, 41}), RangeError);
}

TEST_CASE("perfect predictor curve") {
    const auto f = make_fixture(11, 60, 30, 0.0);
    // Ideal with a perf model trained on the test set itself ranks it perfectly.
    const auto perf = fit_perf_model(f.data.test, quick_setup());
    PredictorFactory factory = [&](const std::vector<MeasurementRecord>& train, int) {
        return fit_ideal(train, quick_setup(), perf);
    };
    const auto c = efficacy_curve(factory, f.data, MetricKind::Spearman, {20, 60});
    for (const auto& p : c.points) CHECK(*p.p > 0.95);
}
