#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace modperf {

/// Inclusive bounds from which structural aspects are drawn.
struct AspectRanges {
    int option_count_lo = 6;
    int option_count_hi = 16;
    double p_w_lo = 0.5;
    double p_w_hi = 1.0;
    double mu_a_lo = 0.01;
    double mu_a_hi = 0.4;
    double sigma_a_lo = 0.01;
    double sigma_a_hi = 0.4;
    int module_count_lo = 5;
    int module_count_hi = 40;
    int iv_per_module = 3;
    int perf_count = 1;

    /// Throws RangeError when any lo > hi or a bound is non-positive where it must not be.
    void validate() const;
};

/// Lower and upper ends of the value space used to scale aspects to [0, 1].
inline constexpr AspectRanges kTableRanges{};

/// Truncation interval of the cross-module connection probability.
inline constexpr double kCrossProbabilityLo = 0.01;
inline constexpr double kCrossProbabilityHi = 0.4;

/// One system draw: ⟨Option#, IEWithin_p, IEAcross_p (mu_a, sigma_a), Module#⟩.
struct StructuralAspects {
    int option_count = 6;
    double p_w = 0.5;
    double mu_a = 0.01;
    double sigma_a = 0.01;
    int module_count = 5;
    int iv_per_module = 3;
    int perf_count = 1;

    /// Counts positive, probabilities in [0, 1]. Enough to build a graph.
    void check_structural() const;
    /// True when every field lies inside `ranges`.
    bool within(const AspectRanges& ranges) const;

    int total_options() const { return option_count * module_count; }
    int total_ivs() const { return iv_per_module * module_count; }

    friend bool operator==(const StructuralAspects&, const StructuralAspects&) = default;
};

StructuralAspects sample_aspects(std::uint64_t seed, const AspectRanges& ranges = {});

enum class NodeKind { Option, Intermediate, Performance };

struct NodeId {
    NodeKind kind = NodeKind::Option;
    int module = 0;  // unused for Performance
    int local = 0;

    static NodeId option(int m, int j) { return {NodeKind::Option, m, j}; }
    static NodeId iv(int m, int k) { return {NodeKind::Intermediate, m, k}; }
    static NodeId perf(int q) { return {NodeKind::Performance, 0, q}; }

    /// "O:m:j", "IV:m:k" or "P:q".
    std::string str() const;
    static NodeId parse(const std::string& text);

    auto operator<=>(const NodeId&) const = default;
};

enum class EdgeKind { WithinOI, AcrossOI, IVToIV, IVToPerf };

std::string to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(const std::string& text);

struct Edge {
    NodeId src;
    NodeId dst;
    EdgeKind kind = EdgeKind::WithinOI;

    auto operator<=>(const Edge&) const = default;
};

/// Typed DAG over option, intermediate and performance nodes.
///
/// Options are indexed canonically as `module * option_count + j` and
/// intermediates as `module * iv_per_module + k`; that IV index is also the
/// total order IV->IV edges must respect.
class CausalInfluenceGraph {
public:
    CausalInfluenceGraph() = default;
    CausalInfluenceGraph(StructuralAspects aspects, std::uint64_t seed, std::vector<Edge> edges,
                         std::vector<double> cross_probabilities = {});

    const StructuralAspects& aspects() const { return aspects_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<Edge>& edges() const { return edges_; }
    /// p_a per ordered module pair (row = source module), empty if not recorded.
    const std::vector<double>& cross_probabilities() const { return cross_probabilities_; }

    int option_index(const NodeId& n) const;
    int iv_index(const NodeId& n) const;
    NodeId option_node(int index) const;
    NodeId iv_node(int index) const;

    /// Incoming edges of an intermediate node, in edge-list order.
    const std::vector<Edge>& in_edges_of_iv(int iv_index) const { return iv_in_edges_[iv_index]; }

    std::vector<NodeId> all_nodes() const;

    /// Throws StructuralError on any violated invariant except acyclicity,
    /// which `topological_order` checks.
    void check_edges() const;

    nlohmann::json to_json() const;
    static CausalInfluenceGraph from_json(const nlohmann::json& j);

private:
    void index_edges();

    StructuralAspects aspects_;
    std::uint64_t seed_ = 0;
    std::vector<Edge> edges_;
    std::vector<double> cross_probabilities_;
    std::vector<std::vector<Edge>> iv_in_edges_;
};

/// Draws the graph: WithinOI edges with p_w, one truncated-normal p_a per
/// ordered module pair for AcrossOI edges, IVToIV edges from lower to higher
/// IV index with `iv_to_iv_p`, and every IV wired to every performance node.
CausalInfluenceGraph generate_graph(const StructuralAspects& aspects, std::uint64_t seed,
                                    double iv_to_iv_p = 0.15);

/// Kahn ordering; ties broken options, then IVs by index, then performance.
/// Throws StructuralError on a cycle.
std::vector<NodeId> topological_order(const CausalInfluenceGraph& graph);

struct ModuleBoundary {
    std::vector<NodeId> options;
    std::vector<NodeId> intermediates;
};

/// LB, IE and PIE read off a graph.
struct KnowledgeArtifacts {
    std::map<int, ModuleBoundary> logical_boundaries;
    std::vector<Edge> influence_edges;
    std::vector<Edge> potential_influence_edges;

    /// PIE (or IE when `exact`) in-edges of the given IV, as parent nodes.
    std::vector<NodeId> candidate_parents(const NodeId& iv, bool exact) const;

    nlohmann::json to_json() const;
};

/// PIE = all within-module (option, IV) pairs, all cross-module pairs of
/// module pairs with at least one true AcrossOI edge, and all true IVToIV
/// edges. The construction is deterministic; `decoy_seed` is accepted so
/// callers can pass a stage seed uniformly but does not change the result.
KnowledgeArtifacts derive_knowledge(const CausalInfluenceGraph& graph, std::uint64_t decoy_seed = 0);

}  // namespace modperf
