#include "modperf/hardness.hpp"

#include <algorithm>
#include <cmath>

#include "modperf/errors.hpp"

namespace modperf {

std::string to_string(KnowledgeLevel level) {
    switch (level) {
        case KnowledgeLevel::Null: return "Null";
        case KnowledgeLevel::Partial: return "Partial";
        case KnowledgeLevel::Practical: return "Practical";
        case KnowledgeLevel::Complete: return "Complete";
        case KnowledgeLevel::Ideal: return "Ideal";
    }
    return {};
}

KnowledgeLevel knowledge_level_from_string(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "null") return KnowledgeLevel::Null;
    if (t == "partial") return KnowledgeLevel::Partial;
    if (t == "practical") return KnowledgeLevel::Practical;
    if (t == "complete") return KnowledgeLevel::Complete;
    if (t == "ideal") return KnowledgeLevel::Ideal;
    throw InputError("unknown knowledge level: " + text);
}

std::vector<int> EfficacyCurve::sizes() const {
    std::vector<int> s;
    for (const auto& p : points) s.push_back(p.n);
    return s;
}

bool EfficacyCurve::complete() const {
    return std::all_of(points.begin(), points.end(),
                       [](const CurvePoint& p) { return p.p.has_value() && std::isfinite(*p.p); });
}

void EfficacyCurve::check() const {
    if (points.empty()) throw InputError("empty efficacy curve");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].n <= points[i - 1].n) throw InputError("curve sizes must be strictly increasing");
        if (!points[i].p || !std::isfinite(*points[i].p))
            throw InputError("curve point at n=" + std::to_string(points[i].n) + " has no efficacy value");
    }
}

double scaling_constant(std::span<const int> sizes) {
    if (sizes.empty()) throw InputError("scaling constant of an empty size list");
    double harmonic = 0.0;
    for (int n : sizes) {
        if (n <= 0) throw RangeError("training sizes must be positive");
        harmonic += 1.0 / n;
    }
    return 1.0 / harmonic;
}

HardnessScore hardness(const EfficacyCurve& curve) {
    curve.check();
    const auto sizes = curve.sizes();
    HardnessScore h;
    h.metric = curve.metric;
    h.scaling_constant = scaling_constant(sizes);
    double sum = 0.0;
    for (const auto& p : curve.points) sum += std::clamp(1.0 - *p.p, 0.0, 1.0) / p.n;
    h.value = h.scaling_constant * sum;
    return h;
}

OpportunityScore opportunity(const EfficacyCurve& null_curve, const EfficacyCurve& ideal_curve,
                             const EfficacyCurve& level_curve, KnowledgeLevel level) {
    null_curve.check();
    ideal_curve.check();
    level_curve.check();
    if (null_curve.metric != ideal_curve.metric || null_curve.metric != level_curve.metric)
        throw InputError("opportunity curves must share a metric");
    const auto sizes = null_curve.sizes();
    if (ideal_curve.sizes() != sizes || level_curve.sizes() != sizes)
        throw InputError("opportunity curves must share training sizes");

    constexpr double kGapEpsilon = 1e-9;
    OpportunityScore o;
    o.level = level;
    o.metric = null_curve.metric;
    const double c = scaling_constant(sizes);
    double sum = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double lower = *null_curve.points[i].p;
        const double upper = *ideal_curve.points[i].p;
        const double known = *level_curve.points[i].p;
        OpportunityTerm t;
        t.n = sizes[i];
        t.gap = upper - lower;
        t.filling = t.gap > kGapEpsilon ? std::clamp((known - lower) / t.gap, 0.0, 1.0) : 0.0;
        sum += t.filling * t.gap / t.n;
        o.per_size.push_back(t);
    }
    o.value = c * sum;
    return o;
}

std::string to_string(HardnessLevel level) {
    switch (level) {
        case HardnessLevel::Low: return "Low";
        case HardnessLevel::Medium: return "Medium";
        case HardnessLevel::High: return "High";
    }
    return {};
}

std::string to_string(HardnessMode mode) {
    return mode == HardnessMode::FixedRange ? "fixed" : "empirical";
}

HardnessMode hardness_mode_from_string(const std::string& text) {
    if (text == "fixed" || text == "FixedRange") return HardnessMode::FixedRange;
    if (text == "empirical" || text == "EmpiricalQuartile") return HardnessMode::EmpiricalQuartile;
    throw InputError("unknown hardness mode: " + text);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw InputError("quantile of an empty population");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

HardnessLevel classify_hardness(double score, HardnessMode mode, std::span<const double> population) {
    if (mode == HardnessMode::FixedRange) {
        if (score < 0.25) return HardnessLevel::Low;
        if (score < 0.75) return HardnessLevel::Medium;
        return HardnessLevel::High;
    }
    if (population.size() < 4) throw InputError("empirical quartiles need a population of at least 4 scores");
    std::vector<double> pop(population.begin(), population.end());
    const double q1 = quantile(pop, 0.25);
    const double q3 = quantile(pop, 0.75);
    if (score < q1) return HardnessLevel::Low;
    if (score >= q3) return HardnessLevel::High;
    return HardnessLevel::Medium;
}

namespace {

std::size_t row_of(KnowledgeLevel level) {
    switch (level) {
        case KnowledgeLevel::Partial: return 0;
        case KnowledgeLevel::Practical: return 1;
        case KnowledgeLevel::Complete: return 2;
        default: throw InputError("matrix rows are Partial, Practical and Complete only");
    }
}

}  // namespace

const MatrixCell& OpportunityMatrix::cell(KnowledgeLevel level, HardnessLevel h) const {
    return cells[row_of(level)][static_cast<std::size_t>(h)];
}

MatrixCell& OpportunityMatrix::cell(KnowledgeLevel level, HardnessLevel h) {
    return cells[row_of(level)][static_cast<std::size_t>(h)];
}

nlohmann::json OpportunityMatrix::to_json() const {
    nlohmann::json out;
    out["metric"] = to_string(metric);
    nlohmann::json rows = nlohmann::json::array();
    for (auto level : kMatrixLevels) rows.push_back(to_string(level));
    nlohmann::json cols = nlohmann::json::array();
    for (auto h : kHardnessLevels) cols.push_back(to_string(h));
    out["rows"] = rows;
    out["columns"] = cols;
    nlohmann::json cj = nlohmann::json::object();
    for (auto level : kMatrixLevels) {
        for (auto h : kHardnessLevels) {
            const auto& c = cell(level, h);
            const std::string key = to_string(level) + "," + to_string(h);
            cj[key] = {{"mean", c.empty() ? nlohmann::json() : nlohmann::json(c.mean)},
                       {"n", c.count},
                       {"empty", c.empty()},
                       {"samples_ref", "opportunity_" + to_string(metric) + ".json"},
                       {"sample_ids", c.sample_ids}};
        }
    }
    out["cells"] = cj;
    return out;
}

OpportunityMatrix build_matrix(MetricKind metric, std::span<const OpportunityObservation> observations) {
    OpportunityMatrix m;
    m.metric = metric;
    for (const auto& o : observations) {
        auto& c = m.cell(o.level, o.hardness);
        c.samples.push_back(o.value);
        c.sample_ids.push_back(o.id);
    }
    for (auto& row : m.cells) {
        for (auto& c : row) {
            c.count = static_cast<int>(c.samples.size());
            double sum = 0.0;
            for (double v : c.samples) sum += v;
            c.mean = c.count > 0 ? sum / c.count : 0.0;
        }
    }
    return m;
}

}  // namespace modperf
