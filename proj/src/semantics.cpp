#include "modperf/semantics.hpp"

#include <cmath>

#include "modperf/errors.hpp"
#include "modperf/seed.hpp"

namespace modperf {

double PolynomialFunction::pair_weight(std::size_t a, std::size_t b) const {
    if (a == b || a >= parents.size() || b >= parents.size()) throw RangeError("pair index");
    if (a > b) std::swap(a, b);
    const std::size_t p = parents.size();
    // Offset of row a in the strict upper triangle.
    const std::size_t offset = a * (2 * p - a - 1) / 2;
    return pair_weights[offset + (b - a - 1)];
}

SystemSemantics::SystemSemantics(std::shared_ptr<const CausalInfluenceGraph> graph,
                                 std::vector<PolynomialFunction> iv_formulas,
                                 std::vector<std::vector<double>> perf_weights, double noise_fraction,
                                 NoiseTargets noise_targets)
    : graph_(std::move(graph)),
      iv_formulas_(std::move(iv_formulas)),
      perf_weights_(std::move(perf_weights)),
      noise_fraction_(noise_fraction),
      noise_targets_(noise_targets) {
    if (!graph_) throw InputError("semantics requires a graph");
    if (!(noise_fraction_ >= 0.0 && noise_fraction_ < 1.0)) throw RangeError("noise_fraction outside [0,1)");
    const auto& a = graph_->aspects();
    if (static_cast<int>(iv_formulas_.size()) != a.total_ivs())
        throw InputError("one formula per intermediate node required");
    if (static_cast<int>(perf_weights_.size()) != a.perf_count) throw InputError("one formula per performance node required");
    for (const auto& row : perf_weights_)
        if (static_cast<int>(row.size()) != a.total_ivs()) throw InputError("performance formula must weight every IV");
    for (const auto& f : iv_formulas_) {
        const std::size_t p = f.parents.size();
        if (f.linear_weights.size() != p || f.pair_weights.size() != p * (p - (p > 0 ? 1 : 0)) / 2)
            throw InputError("polynomial term count does not match parent count");
    }
    compile();
}

void SystemSemantics::compile() {
    const auto& g = *graph_;
    iv_order_.clear();
    for (const auto& n : topological_order(g))
        if (n.kind == NodeKind::Intermediate) iv_order_.push_back(g.iv_index(n));

    compiled_.assign(iv_formulas_.size(), {});
    for (std::size_t i = 0; i < iv_formulas_.size(); ++i) {
        for (const auto& p : iv_formulas_[i].parents) {
            if (p.kind == NodeKind::Option)
                compiled_[i].push_back({false, g.option_index(p)});
            else if (p.kind == NodeKind::Intermediate)
                compiled_[i].push_back({true, g.iv_index(p)});
            else
                throw StructuralError("performance node cannot parent an intermediate");
        }
    }

    // Scales come from the all-on configuration. Topological order means
    // every parent's scale is final before a child reads it.
    std::vector<double> scale(iv_formulas_.size(), 1.0);
    const std::vector<std::uint8_t> ones(static_cast<std::size_t>(g.aspects().total_options()), 1);
    std::vector<double> ivs;
    noiseless(ones, ivs, &scale);
    iv_scale_ = std::move(scale);
}

void SystemSemantics::noiseless(const std::vector<std::uint8_t>& config, std::vector<double>& ivs,
                                std::vector<double>* calibrated_scale) const {
    const std::vector<double>& scale = calibrated_scale ? *calibrated_scale : iv_scale_;
    ivs.assign(iv_formulas_.size(), 0.0);
    std::vector<double> inputs;
    std::vector<std::size_t> active;
    for (int iv : iv_order_) {
        const auto idx = static_cast<std::size_t>(iv);
        const auto& f = iv_formulas_[idx];
        const auto& terms = compiled_[idx];
        inputs.resize(terms.size());
        active.clear();
        double value = 0.0;
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const auto src = static_cast<std::size_t>(terms[t].index);
            const double x = terms[t].from_iv ? ivs[src] / scale[src] : static_cast<double>(config[src]);
            inputs[t] = x;
            if (x != 0.0) {
                active.push_back(t);
                value += f.linear_weights[t] * x;
            }
        }
        const std::size_t p = terms.size();
        for (std::size_t u = 0; u < active.size(); ++u) {
            const std::size_t a = active[u];
            const std::size_t offset = a * (2 * p - a - 1) / 2;
            for (std::size_t v = u + 1; v < active.size(); ++v) {
                const std::size_t b = active[v];
                value += f.pair_weights[offset + (b - a - 1)] * inputs[a] * inputs[b];
            }
        }
        ivs[idx] = value;
        if (calibrated_scale && value > 0.0) (*calibrated_scale)[idx] = value;
    }
}

Evaluation SystemSemantics::evaluate(const std::vector<std::uint8_t>& config, std::optional<std::uint64_t> noise_seed) const {
    const auto& a = graph_->aspects();
    if (static_cast<int>(config.size()) != a.total_options())
        throw InputError("configuration must assign every option");
    for (auto b : config)
        if (b > 1) throw InputError("configuration bits must be 0 or 1");

    Evaluation out;
    noiseless(config, out.iv_values);
    out.perf_values.assign(perf_weights_.size(), 0.0);
    for (std::size_t q = 0; q < perf_weights_.size(); ++q) {
        double v = 0.0;
        for (std::size_t i = 0; i < out.iv_values.size(); ++i) v += perf_weights_[q][i] * out.iv_values[i];
        out.perf_values[q] = v;
    }

    if (noise_seed && noise_fraction_ > 0.0) {
        Rng rng(*noise_seed);
        auto perturb = [&](double v) {
            const double bound = noise_fraction_ * std::abs(v);
            return v + uniform_real(rng, -bound, bound);
        };
        for (auto& v : out.perf_values) v = perturb(v);
        if (noise_targets_ == NoiseTargets::All)
            for (auto& v : out.iv_values) v = perturb(v);
    }
    return out;
}

nlohmann::json SystemSemantics::to_json(const std::string& graph_ref) const {
    nlohmann::json ivs = nlohmann::json::array();
    for (std::size_t i = 0; i < iv_formulas_.size(); ++i) {
        const auto& f = iv_formulas_[i];
        nlohmann::json parents = nlohmann::json::array();
        for (const auto& p : f.parents) parents.push_back(p.str());
        ivs.push_back({{"node", graph_->iv_node(static_cast<int>(i)).str()},
                       {"parents", parents},
                       {"linear", f.linear_weights},
                       {"pairs", f.pair_weights}});
    }
    nlohmann::json perfs = nlohmann::json::array();
    for (std::size_t q = 0; q < perf_weights_.size(); ++q)
        perfs.push_back({{"node", NodeId::perf(static_cast<int>(q)).str()}, {"weights", perf_weights_[q]}});
    return {{"graph_ref", graph_ref},
            {"iv_formulas", ivs},
            {"perf_formulas", perfs},
            {"noise_fraction", noise_fraction_},
            {"noise_targets", noise_targets_ == NoiseTargets::All ? "All" : "PerformanceOnly"}};
}

SystemSemantics SystemSemantics::from_json(const nlohmann::json& j, std::shared_ptr<const CausalInfluenceGraph> graph) {
    try {
        std::vector<PolynomialFunction> formulas;
        for (const auto& f : j.at("iv_formulas")) {
            PolynomialFunction pf;
            for (const auto& p : f.at("parents")) pf.parents.push_back(NodeId::parse(p.get<std::string>()));
            pf.linear_weights = f.at("linear").get<std::vector<double>>();
            pf.pair_weights = f.at("pairs").get<std::vector<double>>();
            formulas.push_back(std::move(pf));
        }
        std::vector<std::vector<double>> perf;
        for (const auto& p : j.at("perf_formulas")) perf.push_back(p.at("weights").get<std::vector<double>>());
        const auto targets = j.value("noise_targets", std::string("PerformanceOnly")) == "All"
                                 ? NoiseTargets::All
                                 : NoiseTargets::PerformanceOnly;
        return SystemSemantics(std::move(graph), std::move(formulas), std::move(perf),
                               j.at("noise_fraction").get<double>(), targets);
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("semantics json: ") + ex.what());
    }
}

SystemSemantics synthesize_semantics(std::shared_ptr<const CausalInfluenceGraph> graph, std::uint64_t seed,
                                     double noise_fraction, NoiseTargets noise_targets) {
    if (!graph) throw InputError("semantics requires a graph");
    const auto& g = *graph;
    Rng rng(seed);
    std::vector<PolynomialFunction> formulas(static_cast<std::size_t>(g.aspects().total_ivs()));
    for (std::size_t i = 0; i < formulas.size(); ++i) {
        auto& f = formulas[i];
        for (const auto& e : g.in_edges_of_iv(static_cast<int>(i))) f.parents.push_back(e.src);
        const std::size_t p = f.parents.size();
        for (std::size_t t = 0; t < p; ++t) f.linear_weights.push_back(uniform01(rng));
        for (std::size_t t = 0; t < p * (p > 0 ? p - 1 : 0) / 2; ++t) f.pair_weights.push_back(uniform01(rng));
    }
    std::vector<std::vector<double>> perf(static_cast<std::size_t>(g.aspects().perf_count));
    for (auto& row : perf)
        for (int i = 0; i < g.aspects().total_ivs(); ++i) row.push_back(uniform01(rng));
    return SystemSemantics(std::move(graph), std::move(formulas), std::move(perf), noise_fraction, noise_targets);
}

}  // namespace modperf
