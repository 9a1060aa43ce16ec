#include "modperf/influence_graph.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <sstream>

#include "modperf/errors.hpp"
#include "modperf/seed.hpp"

namespace modperf {

void AspectRanges::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw RangeError(std::string("invalid aspect range: ") + what);
    };
    require(option_count_lo >= 1 && option_count_lo <= option_count_hi, "option_count");
    require(p_w_lo >= 0.0 && p_w_lo <= p_w_hi && p_w_hi <= 1.0, "p_w");
    require(mu_a_lo <= mu_a_hi, "mu_a");
    require(sigma_a_lo >= 0.0 && sigma_a_lo <= sigma_a_hi, "sigma_a");
    require(module_count_lo >= 1 && module_count_lo <= module_count_hi, "module_count");
    require(iv_per_module >= 1, "iv_per_module");
    require(perf_count >= 1, "perf_count");
}

void StructuralAspects::check_structural() const {
    if (option_count < 1 || module_count < 1 || iv_per_module < 1 || perf_count < 1)
        throw RangeError("structural aspects: counts must be positive");
    if (!(p_w >= 0.0 && p_w <= 1.0)) throw RangeError("structural aspects: p_w outside [0,1]");
    if (!(sigma_a >= 0.0)) throw RangeError("structural aspects: sigma_a negative");
}

bool StructuralAspects::within(const AspectRanges& r) const {
    return option_count >= r.option_count_lo && option_count <= r.option_count_hi &&
           p_w >= r.p_w_lo && p_w <= r.p_w_hi && mu_a >= r.mu_a_lo && mu_a <= r.mu_a_hi &&
           sigma_a >= r.sigma_a_lo && sigma_a <= r.sigma_a_hi &&
           module_count >= r.module_count_lo && module_count <= r.module_count_hi &&
           iv_per_module >= 1 && perf_count >= 1;
}

StructuralAspects sample_aspects(std::uint64_t seed, const AspectRanges& ranges) {
    ranges.validate();
    Rng rng(seed);
    StructuralAspects a;
    a.option_count = static_cast<int>(uniform_int(rng, ranges.option_count_lo, ranges.option_count_hi));
    a.p_w = uniform_real(rng, ranges.p_w_lo, ranges.p_w_hi);
    a.mu_a = uniform_real(rng, ranges.mu_a_lo, ranges.mu_a_hi);
    a.sigma_a = uniform_real(rng, ranges.sigma_a_lo, ranges.sigma_a_hi);
    a.module_count = static_cast<int>(uniform_int(rng, ranges.module_count_lo, ranges.module_count_hi));
    a.iv_per_module = ranges.iv_per_module;
    a.perf_count = ranges.perf_count;
    return a;
}

std::string NodeId::str() const {
    switch (kind) {
        case NodeKind::Option:
            return "O:" + std::to_string(module) + ":" + std::to_string(local);
        case NodeKind::Intermediate:
            return "IV:" + std::to_string(module) + ":" + std::to_string(local);
        case NodeKind::Performance:
            return "P:" + std::to_string(local);
    }
    return {};
}

NodeId NodeId::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    try {
        if (parts.size() == 3 && parts[0] == "O") return option(std::stoi(parts[1]), std::stoi(parts[2]));
        if (parts.size() == 3 && parts[0] == "IV") return iv(std::stoi(parts[1]), std::stoi(parts[2]));
        if (parts.size() == 2 && parts[0] == "P") return perf(std::stoi(parts[1]));
    } catch (const std::logic_error&) {
    }
    throw InputError("malformed node id: " + text);
}

std::string to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::WithinOI: return "WithinOI";
        case EdgeKind::AcrossOI: return "AcrossOI";
        case EdgeKind::IVToIV: return "IVToIV";
        case EdgeKind::IVToPerf: return "IVToPerf";
    }
    return {};
}

EdgeKind edge_kind_from_string(const std::string& text) {
    if (text == "WithinOI") return EdgeKind::WithinOI;
    if (text == "AcrossOI") return EdgeKind::AcrossOI;
    if (text == "IVToIV") return EdgeKind::IVToIV;
    if (text == "IVToPerf") return EdgeKind::IVToPerf;
    throw InputError("unknown edge kind: " + text);
}

CausalInfluenceGraph::CausalInfluenceGraph(StructuralAspects aspects, std::uint64_t seed,
                                           std::vector<Edge> edges,
                                           std::vector<double> cross_probabilities)
    : aspects_(aspects),
      seed_(seed),
      edges_(std::move(edges)),
      cross_probabilities_(std::move(cross_probabilities)) {
    aspects_.check_structural();
    index_edges();
}

void CausalInfluenceGraph::index_edges() {
    iv_in_edges_.assign(static_cast<std::size_t>(aspects_.total_ivs()), {});
    for (const auto& e : edges_) {
        if (e.dst.kind == NodeKind::Intermediate) iv_in_edges_.at(static_cast<std::size_t>(iv_index(e.dst))).push_back(e);
    }
}

int CausalInfluenceGraph::option_index(const NodeId& n) const {
    if (n.kind != NodeKind::Option || n.module < 0 || n.module >= aspects_.module_count || n.local < 0 ||
        n.local >= aspects_.option_count)
        throw RangeError("option node out of bounds: " + n.str());
    return n.module * aspects_.option_count + n.local;
}

int CausalInfluenceGraph::iv_index(const NodeId& n) const {
    if (n.kind != NodeKind::Intermediate || n.module < 0 || n.module >= aspects_.module_count ||
        n.local < 0 || n.local >= aspects_.iv_per_module)
        throw RangeError("intermediate node out of bounds: " + n.str());
    return n.module * aspects_.iv_per_module + n.local;
}

NodeId CausalInfluenceGraph::option_node(int index) const {
    return NodeId::option(index / aspects_.option_count, index % aspects_.option_count);
}

NodeId CausalInfluenceGraph::iv_node(int index) const {
    return NodeId::iv(index / aspects_.iv_per_module, index % aspects_.iv_per_module);
}

std::vector<NodeId> CausalInfluenceGraph::all_nodes() const {
    std::vector<NodeId> nodes;
    for (int i = 0; i < aspects_.total_options(); ++i) nodes.push_back(option_node(i));
    for (int i = 0; i < aspects_.total_ivs(); ++i) nodes.push_back(iv_node(i));
    for (int q = 0; q < aspects_.perf_count; ++q) nodes.push_back(NodeId::perf(q));
    return nodes;
}

void CausalInfluenceGraph::check_edges() const {
    std::set<std::pair<int, int>> ivperf;
    for (const auto& e : edges_) {
        auto fail = [&](const char* why) {
            throw StructuralError(std::string(why) + ": " + e.src.str() + " -> " + e.dst.str());
        };
        switch (e.kind) {
            case EdgeKind::WithinOI:
            case EdgeKind::AcrossOI:
                option_index(e.src);
                iv_index(e.dst);
                if ((e.kind == EdgeKind::WithinOI) != (e.src.module == e.dst.module))
                    fail("option edge kind does not match module membership");
                break;
            case EdgeKind::IVToIV:
                if (iv_index(e.src) >= iv_index(e.dst)) fail("IVToIV edge violates IV order");
                break;
            case EdgeKind::IVToPerf:
                if (e.dst.kind != NodeKind::Performance || e.dst.local < 0 || e.dst.local >= aspects_.perf_count)
                    fail("IVToPerf edge must end at a performance node");
                ivperf.insert({iv_index(e.src), e.dst.local});
                break;
        }
    }
    if (static_cast<int>(ivperf.size()) != aspects_.total_ivs() * aspects_.perf_count)
        throw StructuralError("every intermediate must reach every performance node");
}

nlohmann::json CausalInfluenceGraph::to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : edges_)
        edges.push_back({{"src", e.src.str()}, {"dst", e.dst.str()}, {"kind", to_string(e.kind)}});
    return {
        {"aspects",
         {{"option_count", aspects_.option_count},
          {"p_w", aspects_.p_w},
          {"mu_a", aspects_.mu_a},
          {"sigma_a", aspects_.sigma_a},
          {"module_count", aspects_.module_count},
          {"iv_per_module", aspects_.iv_per_module},
          {"perf_count", aspects_.perf_count}}},
        {"seed", seed_},
        {"cross_probabilities", cross_probabilities_},
        {"edges", edges},
    };
}

CausalInfluenceGraph CausalInfluenceGraph::from_json(const nlohmann::json& j) {
    try {
        const auto& a = j.at("aspects");
        StructuralAspects aspects;
        aspects.option_count = a.at("option_count").get<int>();
        aspects.p_w = a.at("p_w").get<double>();
        aspects.mu_a = a.at("mu_a").get<double>();
        aspects.sigma_a = a.at("sigma_a").get<double>();
        aspects.module_count = a.at("module_count").get<int>();
        aspects.iv_per_module = a.at("iv_per_module").get<int>();
        aspects.perf_count = a.at("perf_count").get<int>();
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges"))
            edges.push_back({NodeId::parse(e.at("src").get<std::string>()),
                             NodeId::parse(e.at("dst").get<std::string>()),
                             edge_kind_from_string(e.at("kind").get<std::string>())});
        std::vector<double> cross;
        if (j.contains("cross_probabilities")) cross = j.at("cross_probabilities").get<std::vector<double>>();
        return CausalInfluenceGraph(aspects, j.at("seed").get<std::uint64_t>(), std::move(edges), std::move(cross));
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("graph json: ") + ex.what());
    }
}

CausalInfluenceGraph generate_graph(const StructuralAspects& aspects, std::uint64_t seed, double iv_to_iv_p) {
    aspects.check_structural();
    if (!(iv_to_iv_p >= 0.0 && iv_to_iv_p <= 1.0)) throw RangeError("iv_to_iv_p outside [0,1]");

    const int M = aspects.module_count;
    const int O = aspects.option_count;
    const int K = aspects.iv_per_module;
    std::vector<Edge> edges;

    Rng within_rng(derive_seed(seed, "within"));
    for (int m = 0; m < M; ++m)
        for (int j = 0; j < O; ++j)
            for (int k = 0; k < K; ++k)
                if (bernoulli(within_rng, aspects.p_w))
                    edges.push_back({NodeId::option(m, j), NodeId::iv(m, k), EdgeKind::WithinOI});

    Rng across_rng(derive_seed(seed, "across"));
    std::vector<double> cross(static_cast<std::size_t>(M) * static_cast<std::size_t>(M), 0.0);
    for (int src = 0; src < M; ++src) {
        for (int dst = 0; dst < M; ++dst) {
            if (src == dst) continue;
            const double p_a = truncated_normal(across_rng, aspects.mu_a, aspects.sigma_a,
                                                kCrossProbabilityLo, kCrossProbabilityHi);
            cross[static_cast<std::size_t>(src * M + dst)] = p_a;
            for (int j = 0; j < O; ++j)
                for (int k = 0; k < K; ++k)
                    if (bernoulli(across_rng, p_a))
                        edges.push_back({NodeId::option(src, j), NodeId::iv(dst, k), EdgeKind::AcrossOI});
        }
    }

    Rng iv_rng(derive_seed(seed, "iv_to_iv"));
    const int total_ivs = aspects.total_ivs();
    if (iv_to_iv_p > 0.0) {
        for (int a = 0; a < total_ivs; ++a)
            for (int b = a + 1; b < total_ivs; ++b)
                if (bernoulli(iv_rng, iv_to_iv_p))
                    edges.push_back({NodeId::iv(a / K, a % K), NodeId::iv(b / K, b % K), EdgeKind::IVToIV});
    }

    for (int i = 0; i < total_ivs; ++i)
        for (int q = 0; q < aspects.perf_count; ++q)
            edges.push_back({NodeId::iv(i / K, i % K), NodeId::perf(q), EdgeKind::IVToPerf});

    return CausalInfluenceGraph(aspects, seed, std::move(edges), std::move(cross));
}

std::vector<NodeId> topological_order(const CausalInfluenceGraph& graph) {
    const auto nodes = graph.all_nodes();
    std::map<NodeId, int> position;
    for (std::size_t i = 0; i < nodes.size(); ++i) position[nodes[i]] = static_cast<int>(i);

    std::vector<std::vector<int>> out(nodes.size());
    std::vector<int> indegree(nodes.size(), 0);
    for (const auto& e : graph.edges()) {
        auto s = position.find(e.src);
        auto d = position.find(e.dst);
        if (s == position.end() || d == position.end())
            throw StructuralError("edge references unknown node: " + e.src.str() + " -> " + e.dst.str());
        out[static_cast<std::size_t>(s->second)].push_back(d->second);
        ++indegree[static_cast<std::size_t>(d->second)];
    }

    // Min-heap on canonical position: options < IVs < performance.
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (indegree[i] == 0) ready.push(static_cast<int>(i));

    std::vector<NodeId> order;
    order.reserve(nodes.size());
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        order.push_back(nodes[static_cast<std::size_t>(v)]);
        for (int w : out[static_cast<std::size_t>(v)])
            if (--indegree[static_cast<std::size_t>(w)] == 0) ready.push(w);
    }
    if (order.size() != nodes.size()) throw StructuralError("influence graph contains a cycle");
    return order;
}

std::vector<NodeId> KnowledgeArtifacts::candidate_parents(const NodeId& iv, bool exact) const {
    std::vector<NodeId> parents;
    for (const auto& e : exact ? influence_edges : potential_influence_edges)
        if (e.dst == iv) parents.push_back(e.src);
    return parents;
}

nlohmann::json KnowledgeArtifacts::to_json() const {
    auto edge_list = [](const std::vector<Edge>& edges) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : edges)
            arr.push_back({{"src", e.src.str()}, {"dst", e.dst.str()}, {"kind", to_string(e.kind)}});
        return arr;
    };
    nlohmann::json lb = nlohmann::json::object();
    for (const auto& [m, b] : logical_boundaries) {
        nlohmann::json opts = nlohmann::json::array();
        nlohmann::json ivs = nlohmann::json::array();
        for (const auto& n : b.options) opts.push_back(n.str());
        for (const auto& n : b.intermediates) ivs.push_back(n.str());
        lb[std::to_string(m)] = {{"options", opts}, {"intermediates", ivs}};
    }
    return {{"logical_boundaries", lb},
            {"influence_edges", edge_list(influence_edges)},
            {"potential_influence_edges", edge_list(potential_influence_edges)}};
}

KnowledgeArtifacts derive_knowledge(const CausalInfluenceGraph& graph, std::uint64_t /*decoy_seed*/) {
    const auto& a = graph.aspects();
    KnowledgeArtifacts k;
    for (int m = 0; m < a.module_count; ++m) {
        auto& b = k.logical_boundaries[m];
        for (int j = 0; j < a.option_count; ++j) b.options.push_back(NodeId::option(m, j));
        for (int i = 0; i < a.iv_per_module; ++i) b.intermediates.push_back(NodeId::iv(m, i));
    }

    std::set<std::pair<int, int>> adjacent_modules;
    for (const auto& e : graph.edges()) {
        if (e.kind == EdgeKind::IVToPerf) continue;
        k.influence_edges.push_back(e);
        if (e.kind == EdgeKind::AcrossOI) adjacent_modules.insert({e.src.module, e.dst.module});
    }

    auto& pie = k.potential_influence_edges;
    for (int m = 0; m < a.module_count; ++m)
        for (int j = 0; j < a.option_count; ++j)
            for (int i = 0; i < a.iv_per_module; ++i)
                pie.push_back({NodeId::option(m, j), NodeId::iv(m, i), EdgeKind::WithinOI});
    for (const auto& [src, dst] : adjacent_modules)
        for (int j = 0; j < a.option_count; ++j)
            for (int i = 0; i < a.iv_per_module; ++i)
                pie.push_back({NodeId::option(src, j), NodeId::iv(dst, i), EdgeKind::AcrossOI});
    for (const auto& e : k.influence_edges)
        if (e.kind == EdgeKind::IVToIV) pie.push_back(e);
    return k;
}

}  // namespace modperf
