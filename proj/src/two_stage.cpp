#include "modperf/two_stage.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "modperf/dataset.hpp"
#include "modperf/errors.hpp"

namespace modperf {

namespace {

double unit(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

Eigen::MatrixXd regressor_matrix(const std::vector<AspectRecord>& records) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), 5);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto s = scale_aspects(records[i].aspects);
        for (int j = 0; j < 5; ++j) X(static_cast<Eigen::Index>(i), j) = s[static_cast<std::size_t>(j)];
    }
    return X;
}

std::string cell_label(KnowledgeLevel level, HardnessLevel h) { return to_string(level) + "," + to_string(h); }

}  // namespace

std::array<double, 5> scale_aspects(const StructuralAspects& a, const AspectRanges& r) {
    return {unit(a.option_count, r.option_count_lo, r.option_count_hi), unit(a.p_w, r.p_w_lo, r.p_w_hi),
            unit(a.mu_a, r.mu_a_lo, r.mu_a_hi), unit(a.sigma_a, r.sigma_a_lo, r.sigma_a_hi),
            unit(a.module_count, r.module_count_lo, r.module_count_hi)};
}

std::vector<double> AspectGrid::alphas() const {
    if (n_alphas < 1 || !(alpha_lo > 0.0) || alpha_hi < alpha_lo) throw RangeError("invalid alpha grid");
    std::vector<double> out;
    if (n_alphas == 1) return {alpha_hi};
    const double a = std::log10(alpha_hi), b = std::log10(alpha_lo);
    for (int i = 0; i < n_alphas; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (n_alphas - 1)));
    return out;
}

double AspectRegression::predict(const StructuralAspects& aspects) const {
    const auto s = scale_aspects(aspects);
    Eigen::MatrixXd X(1, 5);
    for (int j = 0; j < 5; ++j) X(0, j) = s[static_cast<std::size_t>(j)];
    return model.predict(X)(0);
}

nlohmann::json AspectRegression::to_json() const {
    return {{"degree", chosen.degree},
            {"alpha", chosen.alpha},
            {"cv_mse", cv_mse},
            {"converged", model.converged()},
            {"regressors", kRegressorNames},
            {"model", model.to_json()},
            {"importance", importance.to_json()},
            {"regressor_importance", regressor_importance.to_json()}};
}

AspectRegression aspect_regression(const std::vector<AspectRecord>& records, const AspectGrid& grid) {
    if (records.size() < 10) throw InputError("aspect regression needs at least 10 records");
    if (grid.degree_lo < 1 || grid.degree_hi > 4 || grid.degree_lo > grid.degree_hi)
        throw RangeError("aspect regression degrees must lie in [1, 4]");
    const Eigen::MatrixXd X = regressor_matrix(records);
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) y(static_cast<Eigen::Index>(i)) = records[i].hardness;
    if (!y.allFinite()) throw InputError("hardness values must be finite");

    const auto alphas = grid.alphas();
    const int n = static_cast<int>(records.size());
    CVSpec cv = grid.cv;
    cv.folds = std::min(cv.folds, n);
    const auto folds = fold_assignment(n, cv);

    // CV loss of every (degree, alpha), each fold solved as a warm-started path.
    std::vector<std::vector<double>> loss(static_cast<std::size_t>(grid.degree_hi + 1),
                                          std::vector<double>(alphas.size(), 0.0));
    for (int d = grid.degree_lo; d <= grid.degree_hi; ++d) {
        const PolynomialExpansion expansion(5, d, false);
        const Eigen::MatrixXd F = expansion.transform(X);
        for (int f = 0; f < cv.folds; ++f) {
            std::vector<Eigen::Index> tr, te;
            for (int i = 0; i < n; ++i) (folds[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
            const Eigen::MatrixXd Ftr = F(tr, Eigen::all);
            const Eigen::MatrixXd Fte = F(te, Eigen::all);
            const Eigen::VectorXd ytr = y(tr);
            const Eigen::VectorXd yte = y(te);
            Eigen::VectorXd warm = Eigen::VectorXd::Zero(F.cols());
            for (std::size_t a = 0; a < alphas.size(); ++a) {
                const auto sol = lasso_coordinate_descent(Ftr, ytr, alphas[a], grid.max_iter, grid.tol, &warm);
                warm = sol.coef;
                const Eigen::VectorXd pred = (Fte * sol.coef).array() + sol.intercept;
                loss[static_cast<std::size_t>(d)][a] += mean_squared_error(pred, yte) / cv.folds;
            }
        }
    }

    GridSpace<AspectCandidate> space;
    std::vector<std::pair<int, std::size_t>> where;
    for (int d = grid.degree_lo; d <= grid.degree_hi; ++d)
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            space.values.push_back({d, alphas[a]});
            where.emplace_back(d, a);
        }
    // The budget covers the grid, so candidates arrive in table order.
    std::size_t cursor = 0;
    SearchBudget exhaustive{static_cast<int>(space.size()), grid.cv.shuffle_seed};
    const auto search = search_hyperparams(space, exhaustive, [&](const AspectCandidate&) {
        const auto [d, a] = where[cursor++];
        return loss[static_cast<std::size_t>(d)][a];
    });

    AspectRegression out;
    out.chosen = search.best;
    out.cv_mse = search.best_loss;
    PolynomialExpansion expansion(5, out.chosen.degree, false);
    const Eigen::MatrixXd F = expansion.transform(X);
    // Same path to the chosen alpha as in CV, on all rows.
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(F.cols());
    LassoSolution sol;
    for (double a : alphas) {
        sol = lasso_coordinate_descent(F, y, a, grid.max_iter, grid.tol, &warm);
        warm = sol.coef;
        if (a == out.chosen.alpha) break;
    }
    out.model = FittedL1(expansion, sol, out.chosen.alpha);

    std::vector<double> per_aspect(kAspectNames.size(), 0.0);
    std::vector<double> per_regressor(kRegressorNames.size(), 0.0);
    const auto& terms = expansion.terms();
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const double c = std::abs(sol.coef[static_cast<Eigen::Index>(t)]);
        if (c == 0.0) continue;
        std::set<int> aspects(terms[t].begin(), terms[t].end());
        std::set<int> mapped;
        for (int r : aspects) mapped.insert(kRegressorAspect[static_cast<std::size_t>(r)]);
        for (int r : aspects) per_regressor[static_cast<std::size_t>(r)] += c / static_cast<double>(aspects.size());
        for (int m : mapped) per_aspect[static_cast<std::size_t>(m)] += c / static_cast<double>(mapped.size());
    }
    out.importance = normalize_importance(per_aspect, {kAspectNames.begin(), kAspectNames.end()});
    out.regressor_importance = normalize_importance(per_regressor, {kRegressorNames.begin(), kRegressorNames.end()});
    return out;
}

std::vector<HypothesisRow> hypothesis_tests(const OpportunityMatrix& matrix, double alpha) {
    using K = KnowledgeLevel;
    using H = HardnessLevel;
    std::vector<HypothesisRow> rows;
    auto run = [&](const std::string& family, const std::string& id, K k1, H h1, K k2, H h2, Alternative alt) {
        HypothesisRow row;
        row.family = family;
        row.id = id;
        row.group1 = cell_label(k1, h1);
        row.group2 = cell_label(k2, h2);
        row.alternative = alt;
        const auto& a = matrix.cell(k1, h1);
        const auto& b = matrix.cell(k2, h2);
        row.n1 = a.count;
        row.n2 = b.count;
        if (a.empty() || b.empty()) {
            row.skipped = true;
            row.note = "empty cell";
            row.p_value = 1.0;
        } else {
            const auto r = mann_whitney_u(a.samples, b.samples, alt);
            row.p_value = r.p_value;
            row.statistic = r.statistic;
            row.cles1 = r.cles;
            row.cles2 = 1.0 - r.cles;
            row.significant = r.p_value < alpha;
        }
        rows.push_back(row);
    };

    const std::array<std::pair<H, H>, 3> hardness_pairs{{{H::Low, H::Medium}, {H::Low, H::High}, {H::Medium, H::High}}};
    const std::array<std::pair<K, K>, 3> knowledge_pairs{
        {{K::Partial, K::Practical}, {K::Partial, K::Complete}, {K::Practical, K::Complete}}};
    int i = 0;
    for (K k : kMatrixLevels)
        for (const auto& [lo, hi] : hardness_pairs) run("hardness", "H" + std::to_string(++i), k, lo, k, hi, Alternative::Less);
    i = 0;
    for (H h : kHardnessLevels)
        for (const auto& [lo, hi] : knowledge_pairs) run("knowledge", "K" + std::to_string(++i), lo, h, hi, h, Alternative::Less);

    struct Cross { K k1; H h1; K k2; H h2; };
    const std::array<Cross, 9> cross{{
        {K::Practical, H::Low, K::Partial, H::Medium},
        {K::Complete, H::Low, K::Partial, H::Medium},
        {K::Complete, H::Low, K::Practical, H::Medium},
        {K::Practical, H::Low, K::Partial, H::High},
        {K::Complete, H::Low, K::Partial, H::High},
        {K::Practical, H::Medium, K::Partial, H::High},
        {K::Complete, H::Medium, K::Partial, H::High},
        {K::Complete, H::Low, K::Practical, H::High},
        {K::Complete, H::Medium, K::Practical, H::High},
    }};
    i = 0;
    for (const auto& c : cross) run("cross", "C" + std::to_string(++i), c.k1, c.h1, c.k2, c.h2, Alternative::TwoSided);
    return rows;
}

nlohmann::json TwoStageResult::to_json() const {
    nlohmann::json systems = nlohmann::json::object();
    for (const auto& [id, h] : used_hardness)
        systems[id] = {{"measured_hardness", measured_hardness.at(id)},
                       {"used_hardness", h},
                       {"hardness_level", to_string(hardness_level.at(id))}};
    return {{"metric", to_string(metric)},
            {"stage1", stage1 ? stage1->to_json() : nlohmann::json()},
            {"systems", systems},
            {"notes", notes}};
}

TwoStageResult two_stage_pipeline(const std::vector<AspectRecord>& aspect_records,
                                  const std::vector<OpportunityRecord>& opportunity_records, MetricKind metric,
                                  const TwoStageOptions& options) {
    TwoStageResult out;
    out.metric = metric;
    for (const auto& r : aspect_records) out.measured_hardness[r.system_id] = r.hardness;

    bool measured = options.use_measured_hardness;
    if (!measured && aspect_records.size() < 10) {
        measured = true;
        out.notes.push_back("stage 1 skipped: fewer than 10 systems; measured hardness used");
    }
    if (!measured) out.stage1 = aspect_regression(aspect_records, options.grid);
    for (const auto& r : aspect_records)
        out.used_hardness[r.system_id] =
            measured ? r.hardness : std::clamp(out.stage1->predict(r.aspects), 0.0, 1.0);

    HardnessMode mode = options.mode;
    std::vector<double> population;
    for (const auto& [id, h] : out.used_hardness) population.push_back(h);
    if (mode == HardnessMode::EmpiricalQuartile && population.size() < 4) {
        mode = HardnessMode::FixedRange;
        out.notes.push_back("empirical quartiles need 4 systems; fixed ranges used");
    }
    for (const auto& [id, h] : out.used_hardness) out.hardness_level[id] = classify_hardness(h, mode, population);

    std::vector<OpportunityObservation> observations;
    for (const auto& o : opportunity_records) {
        const auto it = out.hardness_level.find(o.system_id);
        if (it == out.hardness_level.end()) {
            out.notes.push_back("opportunity for unknown system " + o.system_id + " ignored");
            continue;
        }
        observations.push_back({o.level, it->second, o.value, o.system_id});
    }
    out.matrix = build_matrix(metric, observations);
    out.tests = hypothesis_tests(out.matrix, options.alpha);
    return out;
}

std::string matrix_csv(const OpportunityMatrix& matrix) {
    std::ostringstream os;
    os << "metric,level,hardness,mean,n\n";
    for (auto k : kMatrixLevels)
        for (auto h : kHardnessLevels) {
            const auto& c = matrix.cell(k, h);
            os << to_string(matrix.metric) << ',' << to_string(k) << ',' << to_string(h) << ','
               << (c.empty() ? std::string() : format_double(c.mean)) << ',' << c.count << '\n';
        }
    return os.str();
}

std::string tests_csv(const std::vector<HypothesisRow>& rows) {
    std::ostringstream os;
    os << "family,id,group1,group2,alternative,n1,n2,p_value,cles1,cles2,significant,skipped\n";
    for (const auto& r : rows)
        os << r.family << ',' << r.id << ",\"" << r.group1 << "\",\"" << r.group2 << "\"," << to_string(r.alternative)
           << ',' << r.n1 << ',' << r.n2 << ',' << format_double(r.p_value) << ',' << format_double(r.cles1) << ','
           << format_double(r.cles2) << ',' << (r.significant ? "true" : "false") << ','
           << (r.skipped ? "true" : "false") << '\n';
    return os.str();
}

nlohmann::json tests_json(const std::vector<HypothesisRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows)
        out.push_back({{"family", r.family},
                       {"id", r.id},
                       {"group1", r.group1},
                       {"group2", r.group2},
                       {"alternative", to_string(r.alternative)},
                       {"n1", r.n1},
                       {"n2", r.n2},
                       {"p_value", r.p_value},
                       {"statistic", r.statistic},
                       {"cles1", r.cles1},
                       {"cles2", r.cles2},
                       {"significant", r.significant},
                       {"skipped", r.skipped},
                       {"note", r.note}});
    return out;
}

std::string heatmap_svg(const OpportunityMatrix& matrix) {
    constexpr int kCell = 120, kLeft = 110, kTop = 60;
    double vmax = 0.0;
    for (const auto& row : matrix.cells)
        for (const auto& c : row)
            if (!c.empty()) vmax = std::max(vmax, c.mean);

    // Light cream (low) to deep red-brown (high).
    auto color = [&](double v) {
        const double t = vmax > 0.0 ? std::clamp(v / vmax, 0.0, 1.0) : 0.0;
        const auto mix = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(0xff, 0x67), mix(0xf7, 0x00), mix(0xec, 0x0d));
        return std::string(buf);
    };

    std::ostringstream os;
    const int width = kLeft + 3 * kCell + 20, height = kTop + 3 * kCell + 20;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"14\">\n";
    os << "<title>Mean opportunity (" << to_string(matrix.metric) << ")</title>\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << kLeft + 3 * kCell / 2 << "\" y=\"24\" text-anchor=\"middle\" font-weight=\"bold\">"
       << "Mean opportunity (" << to_string(matrix.metric) << ")</text>\n";
    for (std::size_t c = 0; c < 3; ++c)
        os << "<text x=\"" << kLeft + static_cast<int>(c) * kCell + kCell / 2 << "\" y=\"" << kTop - 8
           << "\" text-anchor=\"middle\">" << to_string(kHardnessLevels[c]) << "</text>\n";
    for (std::size_t r = 0; r < 3; ++r) {
        const int y = kTop + static_cast<int>(r) * kCell;
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + kCell / 2 + 5 << "\" text-anchor=\"end\">"
           << to_string(kMatrixLevels[r]) << "</text>\n";
        for (std::size_t c = 0; c < 3; ++c) {
            const auto& cell = matrix.cell(kMatrixLevels[r], kHardnessLevels[c]);
            const int x = kLeft + static_cast<int>(c) * kCell;
            const std::string fill = cell.empty() ? "#d9d9d9" : color(cell.mean);
            const bool dark = !cell.empty() && vmax > 0.0 && cell.mean / vmax > 0.55;
            char value[32];
            if (cell.empty()) std::snprintf(value, sizeof value, "n/a");
            else std::snprintf(value, sizeof value, "%.3f", cell.mean);
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
               << "\" fill=\"" << fill << "\" stroke=\"#ffffff\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 << "\" text-anchor=\"middle\" fill=\""
               << (dark ? "#ffffff" : "#000000") << "\">" << value << "</text>\n";
            os << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 20
               << "\" text-anchor=\"middle\" font-size=\"11\" fill=\"" << (dark ? "#ffffff" : "#333333")
               << "\">n=" << cell.count << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace modperf
