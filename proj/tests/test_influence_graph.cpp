#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <set>

#include "modperf/errors.hpp"
#include "modperf/influence_graph.hpp"

using namespace modperf;

namespace {

StructuralAspects small_aspects(int options, double p_w, int modules) {
    StructuralAspects a;
    a.option_count = options;
    a.p_w = p_w;
    a.mu_a = 0.2;
    a.sigma_a = 0.1;
    a.module_count = modules;
    return a;
}

// Independent cycle check: three-colour DFS over an adjacency map.
bool has_cycle(const CausalInfluenceGraph& g) {
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& e : g.edges()) adj[e.src].push_back(e.dst);
    std::map<NodeId, int> colour;
    std::function<bool(const NodeId&)> visit = [&](const NodeId& n) {
        colour[n] = 1;
        for (const auto& m : adj[n]) {
            if (colour[m] == 1) return true;
            if (colour[m] == 0 && visit(m)) return true;
        }
        colour[n] = 2;
        return false;
    };
    for (const auto& n : g.all_nodes())
        if (colour[n] == 0 && visit(n)) return true;
    return false;
}

}  // namespace

TEST_CASE("sampled aspects stay inside the default ranges") {
    for (std::uint64_t s = 0; s < 500; ++s) {
        const auto a = sample_aspects(s);
        CHECK(a.within(kTableRanges));
        CHECK(a.option_count >= 6);
        CHECK(a.option_count <= 16);
        CHECK(a.module_count >= 5);
        CHECK(a.module_count <= 40);
        CHECK(a.p_w >= 0.5);
        CHECK(a.p_w <= 1.0);
        CHECK(a.iv_per_module == 3);
        CHECK(a.perf_count == 1);
    }
}

TEST_CASE("point ranges are honoured and invalid ranges rejected") {
    AspectRanges r;
    r.option_count_lo = r.option_count_hi = 6;
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(sample_aspects(s, r).option_count == 6);
    r.module_count_lo = 10;
    r.module_count_hi = 9;
    CHECK_THROWS_AS(sample_aspects(1, r), RangeError);
}

TEST_CASE("module count draws have the uniform mean") {
    const int draws = 10000;
    double sum = 0.0;
    for (int s = 0; s < draws; ++s) sum += sample_aspects(static_cast<std::uint64_t>(s) * 7919 + 3).module_count;
    // Discrete uniform on [5, 40]: variance (36^2 - 1) / 12.
    const double se = std::sqrt((36.0 * 36.0 - 1.0) / 12.0 / draws);
    CHECK(std::abs(sum / draws - 22.5) < 3.0 * se);
}

TEST_CASE("sampling is deterministic in the seed") {
    CHECK(sample_aspects(42) == sample_aspects(42));
    CHECK_FALSE(sample_aspects(42) == sample_aspects(43));
}

TEST_CASE("p_w = 1 connects every within-module pair") {
    const auto a = small_aspects(7, 1.0, 4);
    const auto g = generate_graph(a, 5);
    std::map<int, int> within;
    for (const auto& e : g.edges())
        if (e.kind == EdgeKind::WithinOI) ++within[e.src.module];
    for (int m = 0; m < 4; ++m) CHECK(within[m] == 7 * 3);
}

TEST_CASE("within-edge count matches its binomial mean") {
    const auto a = small_aspects(10, 0.4, 6);
    const int seeds = 2000;
    double sum = 0.0;
    for (int s = 0; s < seeds; ++s) {
        const auto g = generate_graph(a, static_cast<std::uint64_t>(s));
        for (const auto& e : g.edges()) sum += e.kind == EdgeKind::WithinOI ? 1.0 : 0.0;
    }
    // 6 modules x Binomial(30, 0.4): mean 72, variance 6 * 30 * 0.4 * 0.6.
    const double se = std::sqrt(6 * 30 * 0.4 * 0.6 / seeds);
    CHECK(std::abs(sum / seeds - 72.0) < 4.0 * se);
}

TEST_CASE("generated graphs satisfy the structural invariants") {
    for (std::uint64_t s = 0; s < 300; ++s) {
        const auto a = sample_aspects(s + 1000);
        StructuralAspects small = a;
        small.module_count = 5 + static_cast<int>(s % 4);
        const auto g = generate_graph(small, s, 0.3);
        CHECK_NOTHROW(g.check_edges());
        CHECK_FALSE(has_cycle(g));
        const auto& pa = g.cross_probabilities();
        const auto m = static_cast<std::size_t>(small.module_count);
        REQUIRE(pa.size() == m * m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (i == j) continue;
                CHECK(pa[i * m + j] >= kCrossProbabilityLo);
                CHECK(pa[i * m + j] <= kCrossProbabilityHi);
            }
        std::set<NodeId> has_in;
        for (const auto& e : g.edges()) {
            CHECK(e.src.kind != NodeKind::Performance);
            CHECK(e.dst.kind != NodeKind::Option);
            has_in.insert(e.dst);
        }
    }
}

TEST_CASE("low cross probabilities and no IV chains stay acyclic") {
    auto a = small_aspects(8, 0.7, 6);
    a.mu_a = a.sigma_a = 0.01;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto g = generate_graph(a, s, 0.0);
        CHECK_FALSE(has_cycle(g));
        for (double p : g.cross_probabilities()) CHECK(p < 0.1);
    }
}

TEST_CASE("topological order respects every edge") {
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto g = generate_graph(small_aspects(6, 0.6, 5), s, 0.4);
        const auto order = topological_order(g);
        REQUIRE(order.size() == g.all_nodes().size());
        std::map<NodeId, std::size_t> pos;
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (const auto& e : g.edges()) CHECK(pos.at(e.src) < pos.at(e.dst));
        CHECK(order.front().kind == NodeKind::Option);
        CHECK(order.back().kind == NodeKind::Performance);
    }
}

TEST_CASE("an IV chain orders the upstream IV first") {
    StructuralAspects a = small_aspects(2, 1.0, 1);
    a.iv_per_module = 2;
    std::vector<Edge> edges{{NodeId::option(0, 0), NodeId::iv(0, 0), EdgeKind::WithinOI},
                            {NodeId::iv(0, 0), NodeId::iv(0, 1), EdgeKind::IVToIV},
                            {NodeId::iv(0, 0), NodeId::perf(0), EdgeKind::IVToPerf},
                            {NodeId::iv(0, 1), NodeId::perf(0), EdgeKind::IVToPerf}};
    const CausalInfluenceGraph g(a, 0, edges);
    const auto order = topological_order(g);
    std::vector<NodeId> ivs;
    for (const auto& n : order)
        if (n.kind == NodeKind::Intermediate) ivs.push_back(n);
    CHECK(ivs == std::vector<NodeId>{NodeId::iv(0, 0), NodeId::iv(0, 1)});

    edges.push_back({NodeId::iv(0, 1), NodeId::iv(0, 0), EdgeKind::IVToIV});
    const CausalInfluenceGraph cyclic(a, 0, edges);
    CHECK_THROWS_AS(topological_order(cyclic), StructuralError);
    CHECK_THROWS_AS(cyclic.check_edges(), StructuralError);
}

TEST_CASE("generation is a pure function of its inputs") {
    const auto a = small_aspects(9, 0.8, 7);
    CHECK(generate_graph(a, 11).edges() == generate_graph(a, 11).edges());
    CHECK(generate_graph(a, 11).edges() != generate_graph(a, 12).edges());
}

TEST_CASE("graph JSON round-trips byte for byte") {
    const auto g = generate_graph(small_aspects(6, 0.5, 5), 3, 0.2);
    const auto text = g.to_json().dump();
    const auto back = CausalInfluenceGraph::from_json(nlohmann::json::parse(text));
    CHECK(back.edges() == g.edges());
    CHECK(back.aspects() == g.aspects());
    CHECK(back.to_json().dump() == text);
    CHECK_THROWS_AS(CausalInfluenceGraph::from_json(nlohmann::json::parse(R"({"edges": 3})")), IoError);
}

TEST_CASE("node ids render and parse") {
    CHECK(NodeId::option(2, 5).str() == "O:2:5");
    CHECK(NodeId::iv(1, 0).str() == "IV:1:0");
    CHECK(NodeId::perf(0).str() == "P:0");
    for (const auto& n : {NodeId::option(3, 4), NodeId::iv(0, 2), NodeId::perf(1)}) CHECK(NodeId::parse(n.str()) == n);
}

TEST_CASE("knowledge artifacts: IE within PIE and the adjacency rule") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto a = small_aspects(6, 0.6, 5);
        a.mu_a = 0.05;
        a.sigma_a = 0.05;
        const auto g = generate_graph(a, s, 0.2);
        const auto k = derive_knowledge(g, s);
        const std::set<Edge> pie(k.potential_influence_edges.begin(), k.potential_influence_edges.end());
        for (const auto& e : k.influence_edges) CHECK(pie.count(e) == 1);
        for (const auto& e : k.influence_edges) CHECK(e.kind != EdgeKind::IVToPerf);

        std::set<std::pair<int, int>> linked;
        for (const auto& e : g.edges())
            if (e.kind == EdgeKind::AcrossOI) linked.insert({e.src.module, e.dst.module});
        for (const auto& e : k.potential_influence_edges)
            if (e.kind == EdgeKind::AcrossOI) CHECK(linked.count({e.src.module, e.dst.module}) == 1);

        // Boundaries partition options and IVs.
        std::size_t options = 0, ivs = 0;
        for (const auto& [m, b] : k.logical_boundaries) {
            options += b.options.size();
            ivs += b.intermediates.size();
            for (const auto& o : b.options) CHECK(o.module == m);
        }
        CHECK(options == static_cast<std::size_t>(a.total_options()));
        CHECK(ivs == static_cast<std::size_t>(a.total_ivs()));
    }
}

TEST_CASE("with p_w = 1 the within part of PIE equals IE") {
    const auto g = generate_graph(small_aspects(6, 1.0, 5), 9);
    const auto k = derive_knowledge(g);
    std::set<Edge> within_ie, within_pie;
    for (const auto& e : k.influence_edges)
        if (e.kind == EdgeKind::WithinOI) within_ie.insert(e);
    for (const auto& e : k.potential_influence_edges)
        if (e.kind == EdgeKind::WithinOI) within_pie.insert(e);
    CHECK(within_ie == within_pie);
    CHECK(derive_knowledge(g, 1).to_json() == derive_knowledge(g, 2).to_json());
}
