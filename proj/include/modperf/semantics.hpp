#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "modperf/influence_graph.hpp"

namespace modperf {

/// Polynomial of degree two over a node's graph parents.
///
/// `pair_weights` is laid out in lexicographic (a < b) order over
/// `parents`, so parent count p gives p*(p-1)/2 pair terms.
struct PolynomialFunction {
    std::vector<NodeId> parents;
    std::vector<double> linear_weights;
    std::vector<double> pair_weights;

    double pair_weight(std::size_t a, std::size_t b) const;
};

enum class NoiseTargets { PerformanceOnly, All };

/// Noiseless and measured node values for one configuration.
struct Evaluation {
    std::vector<double> iv_values;
    std::vector<double> perf_values;
};

/// Random formulas attached to an influence graph.
///
/// IV parents enter a child's polynomial as their value divided by their
/// all-options-on value (the maximum, since every weight is nonnegative), so
/// every polynomial input lies in [0, 1] and deep IV chains stay bounded.
class SystemSemantics {
public:
    SystemSemantics(std::shared_ptr<const CausalInfluenceGraph> graph, std::vector<PolynomialFunction> iv_formulas,
                    std::vector<std::vector<double>> perf_weights, double noise_fraction,
                    NoiseTargets noise_targets = NoiseTargets::PerformanceOnly);

    const CausalInfluenceGraph& graph() const { return *graph_; }
    std::shared_ptr<const CausalInfluenceGraph> graph_ptr() const { return graph_; }
    const std::vector<PolynomialFunction>& iv_formulas() const { return iv_formulas_; }
    /// Row q holds the weights of performance node q over all IVs.
    const std::vector<std::vector<double>>& perf_weights() const { return perf_weights_; }
    double noise_fraction() const { return noise_fraction_; }
    NoiseTargets noise_targets() const { return noise_targets_; }
    /// Divisor applied to IV i when it feeds another IV.
    const std::vector<double>& iv_scale() const { return iv_scale_; }

    /// `config[i]` is the bit of option i in canonical order. Noise is drawn
    /// from `noise_seed` when present. Throws InputError on a wrong-length or
    /// non-binary configuration.
    Evaluation evaluate(const std::vector<std::uint8_t>& config,
                        std::optional<std::uint64_t> noise_seed = std::nullopt) const;

    nlohmann::json to_json(const std::string& graph_ref) const;
    static SystemSemantics from_json(const nlohmann::json& j, std::shared_ptr<const CausalInfluenceGraph> graph);

private:
    struct CompiledTerm {
        bool from_iv;
        int index;
    };

    void compile();
    /// With `calibrated_scale`, reads and fills that vector instead of iv_scale_.
    void noiseless(const std::vector<std::uint8_t>& config, std::vector<double>& ivs,
                   std::vector<double>* calibrated_scale = nullptr) const;

    std::shared_ptr<const CausalInfluenceGraph> graph_;
    std::vector<PolynomialFunction> iv_formulas_;
    std::vector<std::vector<double>> perf_weights_;
    double noise_fraction_;
    NoiseTargets noise_targets_;

    std::vector<int> iv_order_;
    std::vector<std::vector<CompiledTerm>> compiled_;
    std::vector<double> iv_scale_;
};

/// Uniform[0,1] weights for every linear and pairwise parent term of every
/// IV, and for every IV in each performance formula.
SystemSemantics synthesize_semantics(std::shared_ptr<const CausalInfluenceGraph> graph, std::uint64_t seed,
                                     double noise_fraction = 0.05,
                                     NoiseTargets noise_targets = NoiseTargets::PerformanceOnly);

}  // namespace modperf
