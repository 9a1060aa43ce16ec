// Acceptance battery: one PASS/FAIL line per criterion.
//
// Criteria 1-5 are in-process oracle checks. 6-10 run the pipeline at desk
// scale under --workdir and inspect its artifacts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "modperf/experiment.hpp"
#include "modperf/forest.hpp"
#include "modperf/hardness.hpp"
#include "modperf/influence_graph.hpp"
#include "modperf/l1.hpp"
#include "modperf/metrics.hpp"
#include "modperf/seed.hpp"
#include "modperf/statistics.hpp"
#include "modperf/two_stage.hpp"

using namespace modperf;
namespace fs = std::filesystem;
using V = std::vector<double>;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

// ---- independent oracles -------------------------------------------------

double rank_sum_u(const V& x, const V& y) {
    V pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    double rx = 0.0;
    for (double xi : x) {
        double below = 0, same = 0;
        for (double v : pooled) {
            below += v < xi;
            same += v == xi;
        }
        rx += below + (same + 1) / 2;
    }
    const double nx = static_cast<double>(x.size());
    return rx - nx * (nx + 1) / 2;
}

// p-values for Less, Greater, TwoSided over all N! orderings.
std::array<double, 3> permutation_p(const V& x, const V& y) {
    V pooled = x;
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<int> idx(pooled.size());
    std::iota(idx.begin(), idx.end(), 0);
    const double u_obs = rank_sum_u(x, y);
    const double mean = 0.5 * static_cast<double>(x.size() * y.size());
    std::array<double, 3> hits{};
    double total = 0;
    V gx, gy;
    do {
        gx.clear();
        gy.clear();
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < x.size() ? gx : gy).push_back(pooled[static_cast<std::size_t>(idx[i])]);
        const double u = rank_sum_u(gx, gy);
        hits[0] += u <= u_obs + 1e-9;
        hits[1] += u >= u_obs - 1e-9;
        hits[2] += std::abs(u - mean) >= std::abs(u_obs - mean) - 1e-9;
        ++total;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return {hits[0] / total, hits[1] / total, hits[2] / total};
}

double pair_cles(const V& x, const V& y) {
    double wins = 0;
    for (double a : x)
        for (double b : y) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    return wins / static_cast<double>(x.size() * y.size());
}

double oracle_spearman(const V& a, const V& b) {
    auto ranks = [](const V& v) {
        V r(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double less = 0, equal = 0;
            for (double w : v) {
                less += w < v[i];
                equal += w == v[i];
            }
            r[i] = less + (equal + 1) / 2;
        }
        return r;
    };
    const V ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return saa == 0 || sbb == 0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

EfficacyCurve make_curve(const std::vector<int>& n, const V& p) {
    EfficacyCurve c;
    for (std::size_t i = 0; i < n.size(); ++i) c.points.push_back({n[i], p[i], {}});
    return c;
}

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// FNV-1a over sorted (relative path, contents) pairs.
std::uint64_t tree_hash(const fs::path& root, std::size_t* files = nullptr) {
    std::vector<fs::path> paths;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) paths.push_back(fs::relative(e.path(), root));
    std::sort(paths.begin(), paths.end());
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    };
    for (const auto& p : paths) {
        feed(p.generic_string());
        feed(slurp(root / p));
    }
    if (files) *files = paths.size();
    return h;
}

// ---- criteria ------------------------------------------------------------

Outcome criterion1() {
    Outcome o;
    const std::vector<int> n{20, 50, 100, 200, 500, 1000};
    const double hard = hardness(make_curve(n, {0.19, 0.31, 0.43, 0.55, 0.66, 0.77})).value;
    const double easy = hardness(make_curve(n, {0.71, 0.87, 0.96, 0.97, 0.97, 0.98})).value;
    const double c = scaling_constant(n);
    o.require(near(hard, 0.718, 0.001), "hardness 0.718");
    o.require(near(easy, 0.2015, 0.002), "hardness 0.2015");
    // Rational check: 11 * C must be exactly 125 and C the nearest double to 125/11.
    o.require(c == 125.0 / 11.0 && std::abs(11.0 * c - 125.0) < 1e-12, "scaling constant 125/11");
    o.detail << "hard=" << hard << " easy=" << easy << " C=" << c;
    return o;
}

Outcome criterion2() {
    Outcome o;
    StructuralAspects a;
    a.option_count = 10;
    a.iv_per_module = 3;
    a.module_count = 6;
    a.p_w = 0.4;
    a.mu_a = 0.1;
    a.sigma_a = 0.1;
    const int seeds = 10000;
    double sum = 0, sum_sq = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto g = generate_graph(a, derive_seed(2, "edges", static_cast<std::uint64_t>(s)));
        double count = 0;
        for (const auto& e : g.edges()) count += e.kind == EdgeKind::WithinOI;
        sum += count;
        sum_sq += count * count;
    }
    const double mean = sum / seeds;
    const double se = std::sqrt((sum_sq / seeds - mean * mean) / (seeds - 1));
    o.require(std::abs(mean - 72.0) <= 4 * se, "mean within 4 SE of 72");
    o.detail << "mean=" << mean << " se=" << se;
    return o;
}

Outcome criterion3() {
    Outcome o;
    const double pi = std::acos(-1.0);
    o.require(maape(V{3, 4}, V{3, 4}) == 0.0, "maape zero");
    o.require(near(maape(V{2, 0}, V{1, 1}), pi / 4, 1e-12), "maape pi/4");
    o.require(near(maape(V{1e12}, V{1}), pi / 2, 1e-9), "maape limit");
    o.require(acc(V{3, 4}, V{3, 4}) == 1.0, "acc perfect");
    o.require(near(acc(V{2, 0}, V{1, 1}), 0.5, 1e-12), "acc 0.5");
    o.require(near(acc(V{1e15}, V{1}), 0.0, 1e-9), "acc worst");
    o.require(near(spearman(V{1, 2, 3, 4}, V{2, 5, 7, 9}), 1.0, 1e-12), "spearman 1");
    o.require(near(spearman(V{4, 3, 2, 1}, V{2, 5, 7, 9}), -1.0, 1e-12), "spearman -1");
    o.require(near(spearman(V{1, 2, 2, 4}, V{1, 2, 3, 4}), 0.9487, 1e-4), "spearman 0.9487");
    o.require(spearman(V{2, 2, 2}, V{1, 2, 3}) == 0.0, "spearman degenerate");

    Rng rng(3);
    int invariant = 0, oracle = 0, symmetric = 0;
    for (int t = 0; t < 100; ++t) {
        V a(40), b(40), ea(40), la(40);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::round(uniform_real(rng, 0, 20)) / 4;
            b[i] = a[i] + uniform_real(rng, -2, 2);
            ea[i] = std::exp(a[i]);
            la[i] = 2.5 * a[i] + 1;
        }
        const double s = spearman(a, b);
        invariant += near(spearman(ea, b), s, 1e-12) && near(spearman(la, b), s, 1e-12) &&
                     near(spearman(a, V(ea.begin(), ea.end())), spearman(a, a), 1e-12);
        oracle += near(s, oracle_spearman(a, b), 1e-12);
        const double y = uniform_real(rng, 0.5, 5), d = uniform_real(rng, 0, 0.99);
        symmetric += near(acc(V{y * (1 + d)}, V{y}), acc(V{y * (1 - d)}, V{y}), 1e-12);
    }
    o.require(invariant == 100, "monotone-transform invariance");
    o.require(oracle == 100, "rank-counting oracle");
    o.require(symmetric == 100, "acc sign symmetry");
    o.detail << "invariance " << invariant << "/100, oracle " << oracle << "/100";
    return o;
}

Outcome criterion4() {
    Outcome o;
    Rng rng(4);
    int cases = 0, mismatches = 0, cles_bad = 0;
    for (std::size_t nx = 1; nx <= 7; ++nx) {
        for (std::size_t ny = 1; nx + ny <= 8; ++ny) {
            for (int draw = 0; draw < 3; ++draw) {
                V x(nx), y(ny);
                // Draw 0 is tie-free, the others use a small alphabet.
                for (auto& v : x) v = draw == 0 ? uniform01(rng) : static_cast<double>(uniform_int(rng, 0, 3));
                for (auto& v : y) v = draw == 0 ? uniform01(rng) : static_cast<double>(uniform_int(rng, 0, 3));
                V all = x;
                all.insert(all.end(), y.begin(), y.end());
                const bool all_tied = std::all_of(all.begin(), all.end(), [&](double v) { return v == all[0]; });
                const auto oracle = permutation_p(x, y);
                const std::array<Alternative, 3> alts{Alternative::Less, Alternative::Greater, Alternative::TwoSided};
                for (std::size_t k = 0; k < 3; ++k) {
                    const auto r = mann_whitney_u(x, y, alts[k]);
                    const double expect = all_tied ? 1.0 : oracle[k];
                    ++cases;
                    mismatches += !(r.exact && near(r.p_value, expect, 1e-12));
                }
                cles_bad += !near(cles(x, y), pair_cles(x, y), 1e-15);
                cles_bad += !near(cles(x, y) + cles(y, x), 1.0, 1e-15);
            }
        }
    }
    o.require(mismatches == 0, "exact Mann-Whitney vs permutation enumeration");
    o.require(cles_bad == 0, "CLES vs pair enumeration");

    int rejections = 0;
    const int sims = 1000;
    Rng z(derive_seed(4, "fisher-z"));
    for (int t = 0; t < sims; ++t) {
        V u(100), v(100);
        for (auto& a : u) a = standard_normal(z);
        for (auto& a : v) a = standard_normal(z);
        rejections += !fisher_z_test(u, v, {}, 0.05).independent;
    }
    const double rate = static_cast<double>(rejections) / sims;
    const double band = 2.576 * std::sqrt(0.05 * 0.95 / sims);
    o.require(std::abs(rate - 0.05) <= band, "Fisher-Z type-I rate");
    o.detail << cases << " MW cases, " << mismatches << " mismatches; Fisher-Z rate " << rate << " (band ±" << band
             << ")";
    return o;
}

Outcome criterion5() {
    Outcome o;
    Rng rng(5);
    double worst = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = static_cast<int>(uniform_int(rng, 5, 60));
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = standard_normal(rng);
            y(i) = 1.5 * X(i, 0) + standard_normal(rng);
        }
        const double alpha = uniform_real(rng, 0, 2);
        // Closed form: b = S(cov(x, y), alpha) / var(x), both with 1/n.
        const double mx = X.col(0).mean(), my = y.mean();
        const double cov = ((X.col(0).array() - mx) * (y.array() - my)).mean();
        const double var = (X.col(0).array() - mx).square().mean();
        const double b = (cov > alpha ? cov - alpha : (cov < -alpha ? cov + alpha : 0.0)) / var;
        const auto sol = lasso_coordinate_descent(X, y, alpha, 10000, 1e-12);
        worst = std::max({worst, std::abs(sol.coef(0) - b), std::abs(sol.intercept - (my - b * mx))});
    }
    o.require(worst <= 1e-6, "lasso vs soft-threshold closed form");

    int forest_exact = 0;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd X(80, 8);
        for (int i = 0; i < X.rows(); ++i)
            for (int j = 0; j < X.cols(); ++j) X(i, j) = bernoulli(rng, 0.5);
        const int j = static_cast<int>(uniform_int(rng, 0, 7));
        const Eigen::VectorXd y = X.col(j) * uniform_real(rng, 0.5, 3.0);
        const auto f = fit_forest(X, y, {30, 8, 1, 1.0, static_cast<std::uint64_t>(t)});
        forest_exact += (f.predict(X) - y).cwiseAbs().maxCoeff() <= 1e-12;
    }
    o.require(forest_exact == 20, "forest zero training error");

    int monotone_paths = 0;
    for (int t = 0; t < 20; ++t) {
        Eigen::MatrixXd X(100, 6);
        for (int i = 0; i < X.rows(); ++i)
            for (int j = 0; j < X.cols(); ++j) X(i, j) = bernoulli(rng, 0.5);
        Eigen::VectorXd y(100);
        for (int i = 0; i < 100; ++i) y(i) = X(i, 0) - 0.5 * X(i, 1) + 0.3 * X(i, 2) + 0.1 * standard_normal(rng);
        double prev = -1;
        bool ok = true;
        for (double alpha = 1.0; alpha > 1e-4; alpha *= 0.7) {
            const double norm = lasso_coordinate_descent(X, y, alpha, 100000, 1e-12).coef.lpNorm<1>();
            ok = ok && norm >= prev - 1e-9;
            prev = norm;
        }
        monotone_paths += ok;
    }
    o.require(monotone_paths == 20, "L1 path norm monotone");
    o.detail << "lasso max dev " << worst << ", forest exact " << forest_exact << "/20, monotone paths "
             << monotone_paths << "/20";
    return o;
}

// ---- pipeline-backed criteria ---------------------------------------------

ExperimentConfig knowledge_config(const fs::path& out) {
    ExperimentConfig c;
    c.global_seed = 6;
    c.n_systems = 50;
    c.trials = 1;
    c.train_sizes = {1000};
    c.metrics = {MetricKind::Spearman, MetricKind::Acc};
    c.levels = {KnowledgeLevel::Null, KnowledgeLevel::Ideal};
    c.out = out;
    return c;
}

ExperimentConfig rq1_config(const fs::path& out) {
    ExperimentConfig c;
    c.global_seed = 7;
    c.n_systems = 36;
    c.trials = 1;
    c.metrics = {MetricKind::Spearman};
    c.levels = {KnowledgeLevel::Null};
    c.design_module_counts = {5, 15, 30};
    c.design_option_counts = {6, 11, 16};
    c.out = out;
    return c;
}

// Full level set on smaller systems so every level fits at every size.
ExperimentConfig rq2_config(const fs::path& out) {
    ExperimentConfig c;
    c.global_seed = 8;
    c.n_systems = 20;
    c.trials = 1;
    c.metrics = {MetricKind::Spearman, MetricKind::Acc};
    c.ranges.module_count_lo = 5;
    c.ranges.module_count_hi = 10;
    c.out = out;
    return c;
}

void run_fresh(const ExperimentConfig& c) {
    fs::remove_all(c.out);
    const auto s = run_all(c);
    if (!s.failures.empty())
        throw std::runtime_error("pipeline unit failed: " + s.failures.front().first + ": " + s.failures.front().second);
}

double curve_point(const fs::path& out, int s, const std::string& file, int n) {
    const auto j = read_json(out / "systems" / system_id(s) / trial_id(0) / "curves" / file);
    for (const auto& p : j["points"])
        if (p["n"] == n && p.contains("p")) return p["p"].get<double>();
    throw std::runtime_error("missing point in " + file);
}

Outcome criterion6(const fs::path& work) {
    Outcome o;
    const auto c = knowledge_config(work / "knowledge");
    run_fresh(c);
    int scc_ok = 0, acc_ok = 0;
    for (int s = 0; s < c.n_systems; ++s) {
        scc_ok += curve_point(c.out, s, "ideal_scc.json", 1000) >= curve_point(c.out, s, "null_scc.json", 1000);
        acc_ok += curve_point(c.out, s, "ideal_acc.json", 1000) >= curve_point(c.out, s, "null_acc.json", 1000);
    }
    o.require(scc_ok >= 0.9 * c.n_systems, "Ideal >= Null (Spearman) in 90% of systems");
    o.require(acc_ok >= 0.9 * c.n_systems, "Ideal >= Null (Acc) in 90% of systems");
    o.detail << "Ideal>=Null: scc " << scc_ok << "/" << c.n_systems << ", acc " << acc_ok << "/" << c.n_systems;
    return o;
}

Outcome criterion7(const fs::path& work) {
    Outcome o;
    const auto c = rq1_config(work / "rq1");
    run_fresh(c);
    const auto h = read_json(c.out / "analysis" / "hardness.json");
    V modules, scores;
    std::vector<AspectRecord> records;
    for (const auto& [sid, entry] : h.items()) {
        if (!entry.contains("scc")) continue;
        modules.push_back(entry["aspects"]["module_count"].get<double>());
        scores.push_back(entry["scc"].get<double>());
    }
    o.require(modules.size() >= 30, "at least 30 systems with hardness");
    const auto t = spearman_test(modules, scores, Alternative::Greater);
    o.require(t.rho > 0 && t.p_value < 0.05, "hardness rises with Module#");

    const auto rq1 = read_json(c.out / "analysis" / "rq1_scc.json");
    const auto& w = rq1["lasso"]["importance"]["weights"];
    std::string top;
    double best = -1;
    for (const auto& [name, v] : w.items())
        if (v.get<double>() > best) {
            best = v.get<double>();
            top = name;
        }
    o.require(top == "Module#", "Module# has the largest importance");
    o.detail << "rho=" << t.rho << " p=" << t.p_value << "; importance";
    for (const auto& [name, v] : w.items()) o.detail << ' ' << name << '=' << v.get<double>();
    return o;
}

Outcome criterion8(const fs::path& work) {
    Outcome o;
    const auto c = rq2_config(work / "rq2");
    run_fresh(c);
    const auto opp = read_json(c.out / "analysis" / "opportunity_scc.json");
    V complete, partial;
    for (const auto& [sid, entry] : opp.items()) {
        if (entry.contains("Complete")) complete.push_back(entry["Complete"]["value"].get<double>());
        if (entry.contains("Partial")) partial.push_back(entry["Partial"]["value"].get<double>());
    }
    o.require(complete.size() >= 20 && partial.size() >= 20, "opportunity for at least 20 systems");
    const double mc = std::accumulate(complete.begin(), complete.end(), 0.0) / static_cast<double>(complete.size());
    const double mp = std::accumulate(partial.begin(), partial.end(), 0.0) / static_cast<double>(partial.size());
    const auto t = mann_whitney_u(complete, partial, Alternative::Greater);
    o.require(mc >= mp, "mean Opp(Complete) >= mean Opp(Partial)");
    o.require(t.p_value < 0.05 && t.cles > 0.5, "one-sided Mann-Whitney p < 0.05 with CLES > 0.5");
    bool identical_ok = true;
    for (const V* sample : {&complete, &partial})
        for (auto alt : {Alternative::Less, Alternative::Greater}) {
            const auto r = mann_whitney_u(*sample, *sample, alt);
            identical_ok = identical_ok && r.p_value >= 0.5 && r.cles == 0.5;
        }
    o.require(identical_ok, "identical samples give p >= 0.5 and CLES = 0.5");
    o.detail << "mean Complete=" << mc << " Partial=" << mp << "; p=" << t.p_value << " CLES=" << t.cles;
    return o;
}

Outcome criterion9(const fs::path& work) {
    Outcome o;
    const auto first = rq2_config(work / "rq2");
    if (!fs::exists(first.out / "report.md")) run_fresh(first);
    const auto second = rq2_config(work / "rq2_repeat");
    run_fresh(second);
    std::size_t fa = 0, fb = 0;
    const auto ha = tree_hash(first.out, &fa), hb = tree_hash(second.out, &fb);
    o.require(fa == fb && ha == hb, "byte-identical output trees");
    o.detail << fa << " files, hash " << std::hex << ha << (ha == hb ? " == " : " != ") << hb << std::dec;
    return o;
}

Outcome criterion10(const fs::path& work) {
    Outcome o;
    const auto c = rq2_config(work / "rq2");
    if (!fs::exists(c.out / "report.md")) run_fresh(c);
    for (auto metric : c.metrics) {
        const std::string m = to_string(metric);
        const auto matrix = read_json(c.out / "analysis" / ("matrix_" + m + ".json"));
        bool shape = matrix["rows"].size() == 3 && matrix["columns"].size() == 3 && matrix["cells"].size() == 9;
        for (const auto& r : matrix["rows"])
            for (const auto& col : matrix["columns"])
                shape = shape && matrix["cells"].contains(r.get<std::string>() + "," + col.get<std::string>());
        o.require(shape, m + " 3x3 matrix");

        const auto tests = read_json(c.out / "analysis" / ("tests_" + m + ".json"));
        int populated = 0;
        for (const auto& [key, cell] : matrix["cells"].items()) populated += !cell["empty"].get<bool>();
        o.require(tests.size() == 27, m + " 27 hypothesis rows");

        bool svg_ok = false;
        try {
            std::istringstream in(slurp(c.out / "analysis" / ("heatmap_" + m + ".svg")));
            boost::property_tree::ptree tree;
            boost::property_tree::read_xml(in, tree);
            const auto& root = tree.get_child("svg");
            svg_ok = root.get<std::string>("<xmlattr>.xmlns", "") == "http://www.w3.org/2000/svg" &&
                     root.count("rect") >= 9;
        } catch (const std::exception&) {
            svg_ok = false;
        }
        o.require(svg_ok, m + " standalone SVG");
        o.detail << m << ": " << populated << "/9 cells populated, " << tests.size() << " rows; ";
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance battery"};
    fs::path workdir = "acceptance_runs";
    std::vector<int> only;
    app.add_option("--workdir", workdir, "Directory for pipeline runs");
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(workdir);

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, criterion1},
        {2, criterion2},
        {3, criterion3},
        {4, criterion4},
        {5, criterion5},
        {6, [&] { return criterion6(workdir); }},
        {7, [&] { return criterion7(workdir); }},
        {8, [&] { return criterion8(workdir); }},
        {9, [&] { return criterion9(workdir); }},
        {10, [&] { return criterion10(workdir); }},
    };

    int failed = 0;
    for (const auto& [id, run] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << std::fixed
                  << std::setprecision(1) << secs << "s) " << std::defaultfloat << std::setprecision(6)
                  << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
