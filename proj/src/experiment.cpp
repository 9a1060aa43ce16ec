#include "modperf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "modperf/dataset.hpp"
#include "modperf/errors.hpp"
#include "modperf/importance.hpp"
#include "modperf/seed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace modperf {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string fraction_name(FeatureFraction f) {
    switch (f) {
        case FeatureFraction::Third: return "third";
        case FeatureFraction::Sqrt: return "sqrt";
        case FeatureFraction::All: return "all";
    }
    return {};
}

FeatureFraction fraction_from(const std::string& s) {
    if (s == "third") return FeatureFraction::Third;
    if (s == "sqrt") return FeatureFraction::Sqrt;
    if (s == "all") return FeatureFraction::All;
    throw InputError("unknown feature fraction: " + s);
}

template <class T>
void read_pair(const json& j, const char* key, T& lo, T& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw InputError(std::string(key) + " must be a [lo, hi] pair");
    lo = v[0].get<T>();
    hi = v[1].get<T>();
}

json aspects_json(const StructuralAspects& a) {
    return {{"option_count", a.option_count}, {"p_w", a.p_w},
            {"mu_a", a.mu_a},                 {"sigma_a", a.sigma_a},
            {"module_count", a.module_count}, {"iv_per_module", a.iv_per_module},
            {"perf_count", a.perf_count}};
}

fs::path system_dir(const ExperimentConfig& c, int s) { return c.out / "systems" / system_id(s); }
fs::path trial_dir(const ExperimentConfig& c, int s, int t) { return system_dir(c, s) / trial_id(t); }
fs::path curve_path(const ExperimentConfig& c, int s, int t, KnowledgeLevel level, MetricKind metric) {
    return trial_dir(c, s, t) / "curves" / (lower(to_string(level)) + "_" + to_string(metric) + ".json");
}

std::uint64_t prefix_digest(const std::vector<MeasurementRecord>& records, int n) {
    std::uint64_t h = 0;
    for (int i = 0; i < n; ++i) {
        std::string bits(records[static_cast<std::size_t>(i)].config.begin(),
                         records[static_cast<std::size_t>(i)].config.end());
        h = mix64(h ^ tag_hash(bits));
    }
    return h;
}

// Records a stage summary in the manifest, creating it when absent.
void update_manifest(const ExperimentConfig& c, const std::string& stage, const StageSummary& summary,
                     const json* systems = nullptr) {
    const fs::path path = c.out / "manifest.json";
    json m = fs::exists(path) ? read_json(path) : json::object();
    if (systems) m["systems"] = *systems;
    json failures = json::array();
    for (const auto& [unit, message] : summary.failures) failures.push_back({{"unit", unit}, {"error", message}});
    m["stages"][stage] = {{"units", summary.units}, {"failures", failures}};
    write_json_atomic(path, m);
}

}  // namespace

std::string system_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", index);
    return buf;
}

std::string trial_id(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%02d", index);
    return buf;
}

void ExperimentConfig::validate() const {
    if (n_systems < 1) throw RangeError("systems must be positive");
    if (trials < 1) throw RangeError("trials must be positive");
    if (n_train < 1 || n_test < 1) throw RangeError("n_train and n_test must be positive");
    if (train_sizes.empty()) throw InputError("train_sizes is empty");
    for (std::size_t i = 0; i < train_sizes.size(); ++i) {
        if (train_sizes[i] < 1 || train_sizes[i] > n_train) throw RangeError("train sizes must lie in [1, n_train]");
        if (i > 0 && train_sizes[i] <= train_sizes[i - 1]) throw InputError("train sizes must be strictly increasing");
    }
    if (metrics.empty()) throw InputError("no metrics selected");
    if (levels.empty()) throw InputError("no knowledge levels selected");
    ranges.validate();
    for (int m : design_module_counts)
        if (m < 1) throw RangeError("design module counts must be positive");
    for (int o : design_option_counts)
        if (o < 1) throw RangeError("design option counts must be positive");
    if (design_module_counts.empty() != design_option_counts.empty())
        throw InputError("design needs both module_counts and option_counts");
    if (!(iv_to_iv_p >= 0.0 && iv_to_iv_p <= 1.0)) throw RangeError("iv_to_iv_p must lie in [0, 1]");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) throw RangeError("noise_fraction must lie in [0, 1)");
    if (budget < 1) throw RangeError("budget must be positive");
    if (folds < 2) throw RangeError("folds must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0) || !(alpha_ci > 0.0 && alpha_ci < 1.0)) throw RangeError("alpha must lie in (0, 1)");
    if (forest_space.n_trees_lo < 1 || forest_space.n_trees_hi < forest_space.n_trees_lo ||
        forest_space.max_depth_lo < 1 || forest_space.max_depth_hi < forest_space.max_depth_lo ||
        forest_space.min_samples_leaf.empty() || forest_space.feature_fractions.empty())
        throw RangeError("invalid forest search space");
    if (jobs < 1) throw RangeError("jobs must be positive");
    if (importance_repeats < 1 || shapley_samples < 1) throw RangeError("importance repeats must be positive");
}

json ExperimentConfig::to_json() const {
    json metric_names = json::array();
    for (auto m : metrics) metric_names.push_back(to_string(m));
    json level_names = json::array();
    for (auto l : levels) level_names.push_back(to_string(l));
    json fractions = json::array();
    for (auto f : forest_space.feature_fractions) fractions.push_back(fraction_name(f));
    return {
        {"seed", global_seed},
        {"systems", n_systems},
        {"trials", trials},
        {"train_sizes", train_sizes},
        {"n_train", n_train},
        {"n_test", n_test},
        {"metrics", metric_names},
        {"levels", level_names},
        {"ranges",
         {{"option_count", {ranges.option_count_lo, ranges.option_count_hi}},
          {"p_w", {ranges.p_w_lo, ranges.p_w_hi}},
          {"mu_a", {ranges.mu_a_lo, ranges.mu_a_hi}},
          {"sigma_a", {ranges.sigma_a_lo, ranges.sigma_a_hi}},
          {"module_count", {ranges.module_count_lo, ranges.module_count_hi}},
          {"iv_per_module", ranges.iv_per_module},
          {"perf_count", ranges.perf_count}}},
        {"design", {{"module_counts", design_module_counts}, {"option_counts", design_option_counts}}},
        {"iv_to_iv_p", iv_to_iv_p},
        {"noise_fraction", noise_fraction},
        {"forest",
         {{"n_trees", {forest_space.n_trees_lo, forest_space.n_trees_hi}},
          {"max_depth", {forest_space.max_depth_lo, forest_space.max_depth_hi}},
          {"min_samples_leaf", forest_space.min_samples_leaf},
          {"feature_fraction", fractions}}},
        {"budget", budget},
        {"folds", folds},
        {"alpha_ci", alpha_ci},
        {"alpha", alpha},
        {"hardness_mode", to_string(hardness_mode)},
        {"use_measured_hardness", use_measured_hardness},
        {"aspect_grid",
         {{"degrees", {aspect_grid.degree_lo, aspect_grid.degree_hi}},
          {"n_alphas", aspect_grid.n_alphas},
          {"alpha_range", {aspect_grid.alpha_lo, aspect_grid.alpha_hi}},
          {"folds", aspect_grid.cv.folds},
          {"max_iter", aspect_grid.max_iter},
          {"tol", aspect_grid.tol}}},
        {"importance_repeats", importance_repeats},
        {"shapley_samples", shapley_samples},
    };
}

void ExperimentConfig::merge_json(const json& j) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    static const std::set<std::string> known{
        "seed", "systems", "trials", "train_sizes", "n_train", "n_test", "metrics", "levels", "ranges", "design",
        "iv_to_iv_p", "noise_fraction", "forest", "budget", "folds", "alpha_ci", "alpha", "hardness_mode",
        "use_measured_hardness", "aspect_grid", "importance_repeats", "shapley_samples", "out", "jobs", "resume"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InputError("unknown config key: " + key);
    try {
        if (j.contains("seed")) global_seed = j["seed"].get<std::uint64_t>();
        if (j.contains("systems")) n_systems = j["systems"].get<int>();
        if (j.contains("trials")) trials = j["trials"].get<int>();
        if (j.contains("train_sizes")) train_sizes = j["train_sizes"].get<std::vector<int>>();
        if (j.contains("n_train")) n_train = j["n_train"].get<int>();
        if (j.contains("n_test")) n_test = j["n_test"].get<int>();
        if (j.contains("metrics")) {
            metrics.clear();
            for (const auto& m : j["metrics"]) metrics.push_back(metric_from_string(m.get<std::string>()));
        }
        if (j.contains("levels")) {
            levels.clear();
            for (const auto& l : j["levels"]) levels.push_back(knowledge_level_from_string(l.get<std::string>()));
        }
        if (j.contains("ranges")) {
            const auto& r = j["ranges"];
            read_pair(r, "option_count", ranges.option_count_lo, ranges.option_count_hi);
            read_pair(r, "p_w", ranges.p_w_lo, ranges.p_w_hi);
            read_pair(r, "mu_a", ranges.mu_a_lo, ranges.mu_a_hi);
            read_pair(r, "sigma_a", ranges.sigma_a_lo, ranges.sigma_a_hi);
            read_pair(r, "module_count", ranges.module_count_lo, ranges.module_count_hi);
            if (r.contains("iv_per_module")) ranges.iv_per_module = r["iv_per_module"].get<int>();
            if (r.contains("perf_count")) ranges.perf_count = r["perf_count"].get<int>();
        }
        if (j.contains("design")) {
            const auto& d = j["design"];
            if (d.contains("module_counts")) design_module_counts = d["module_counts"].get<std::vector<int>>();
            if (d.contains("option_counts")) design_option_counts = d["option_counts"].get<std::vector<int>>();
        }
        if (j.contains("iv_to_iv_p")) iv_to_iv_p = j["iv_to_iv_p"].get<double>();
        if (j.contains("noise_fraction")) noise_fraction = j["noise_fraction"].get<double>();
        if (j.contains("forest")) {
            const auto& f = j["forest"];
            read_pair(f, "n_trees", forest_space.n_trees_lo, forest_space.n_trees_hi);
            read_pair(f, "max_depth", forest_space.max_depth_lo, forest_space.max_depth_hi);
            if (f.contains("min_samples_leaf")) forest_space.min_samples_leaf = f["min_samples_leaf"].get<std::vector<int>>();
            if (f.contains("feature_fraction")) {
                forest_space.feature_fractions.clear();
                for (const auto& x : f["feature_fraction"]) forest_space.feature_fractions.push_back(fraction_from(x.get<std::string>()));
            }
        }
        if (j.contains("budget")) budget = j["budget"].get<int>();
        if (j.contains("folds")) folds = j["folds"].get<int>();
        if (j.contains("alpha_ci")) alpha_ci = j["alpha_ci"].get<double>();
        if (j.contains("alpha")) alpha = j["alpha"].get<double>();
        if (j.contains("hardness_mode")) hardness_mode = hardness_mode_from_string(j["hardness_mode"].get<std::string>());
        if (j.contains("use_measured_hardness")) use_measured_hardness = j["use_measured_hardness"].get<bool>();
        if (j.contains("aspect_grid")) {
            const auto& g = j["aspect_grid"];
            read_pair(g, "degrees", aspect_grid.degree_lo, aspect_grid.degree_hi);
            read_pair(g, "alpha_range", aspect_grid.alpha_lo, aspect_grid.alpha_hi);
            if (g.contains("n_alphas")) aspect_grid.n_alphas = g["n_alphas"].get<int>();
            if (g.contains("folds")) aspect_grid.cv.folds = g["folds"].get<int>();
            if (g.contains("max_iter")) aspect_grid.max_iter = g["max_iter"].get<int>();
            if (g.contains("tol")) aspect_grid.tol = g["tol"].get<double>();
        }
        if (j.contains("importance_repeats")) importance_repeats = j["importance_repeats"].get<int>();
        if (j.contains("shapley_samples")) shapley_samples = j["shapley_samples"].get<int>();
        if (j.contains("out")) out = j["out"].get<std::string>();
        if (j.contains("jobs")) jobs = j["jobs"].get<int>();
        if (j.contains("resume")) resume = j["resume"].get<bool>();
    } catch (const json::exception& e) {
        throw InputError(std::string("bad config value: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_file(const fs::path& path) {
    ExperimentConfig c;
    c.merge_json(read_json(path));
    return c;
}

StructuralAspects system_aspects(const ExperimentConfig& config, int index) {
    StructuralAspects a = sample_aspects(derive_seed(config.global_seed, static_cast<std::uint64_t>(index), 0, "aspects"),
                                         config.ranges);
    if (!config.design_module_counts.empty()) {
        const auto nm = config.design_module_counts.size();
        const auto combo = static_cast<std::size_t>(index) % (nm * config.design_option_counts.size());
        a.module_count = config.design_module_counts[combo % nm];
        a.option_count = config.design_option_counts[combo / nm];
    }
    return a;
}

std::vector<std::pair<int, std::string>> parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    std::vector<std::pair<int, std::string>> errors;
    std::mutex mutex;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (const std::exception& e) {
                std::lock_guard lock(mutex);
                errors.emplace_back(i, e.what());
            }
        }
    };
    const int threads = std::max(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    std::sort(errors.begin(), errors.end());
    return errors;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot write " + tmp.string());
        os << text;
        if (!os) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

void write_json_atomic(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

StageSummary run_generate(const ExperimentConfig& config) {
    config.validate();
    write_json_atomic(config.out / "config.json", config.to_json());
    StageSummary summary;
    summary.units = config.n_systems;
    std::vector<json> entries(static_cast<std::size_t>(config.n_systems));
    std::atomic<int> skipped{0};

    auto errors = parallel_for(config.n_systems, config.jobs, [&](int s) {
        const auto sid = system_id(s);
        const auto aspects = system_aspects(config, s);
        const auto graph_seed = derive_seed(config.global_seed, static_cast<std::uint64_t>(s), 0, "graph");
        json entry = {{"id", sid}, {"aspects", aspects_json(aspects)}, {"graph_seed", graph_seed}};
        json trials = json::array();
        for (int t = 0; t < config.trials; ++t)
            trials.push_back({{"id", trial_id(t)},
                              {"semantics_seed", derive_seed(config.global_seed, static_cast<std::uint64_t>(s),
                                                             static_cast<std::uint64_t>(t), "semantics")},
                              {"dataset_seed", derive_seed(config.global_seed, static_cast<std::uint64_t>(s),
                                                           static_cast<std::uint64_t>(t), "dataset")}});
        entry["trials"] = trials;
        entries[static_cast<std::size_t>(s)] = entry;

        bool done = fs::exists(system_dir(config, s) / "graph.json");
        for (int t = 0; t < config.trials && done; ++t) done = fs::exists(trial_dir(config, s, t) / "dataset.json");
        if (config.resume && done) {
            ++skipped;
            return;
        }
        try {
            auto graph = std::make_shared<const CausalInfluenceGraph>(generate_graph(aspects, graph_seed, config.iv_to_iv_p));
            write_json_atomic(system_dir(config, s) / "graph.json", graph->to_json());
            write_json_atomic(system_dir(config, s) / "knowledge.json", derive_knowledge(*graph).to_json());
            for (int t = 0; t < config.trials; ++t) {
                const auto& tj = trials[static_cast<std::size_t>(t)];
                const auto semantics = synthesize_semantics(graph, tj["semantics_seed"].get<std::uint64_t>(),
                                                            config.noise_fraction);
                const auto dir = trial_dir(config, s, t);
                write_json_atomic(dir / "semantics.json", semantics.to_json("../graph.json"));
                const auto ds = sample_dataset(semantics, tj["dataset_seed"].get<std::uint64_t>(), config.n_train,
                                               config.n_test, sid);
                write_records_csv(dir / "train.csv", aspects, ds.train);
                write_records_csv(dir / "test.csv", aspects, ds.test);
                // Written last: marks the trial complete.
                write_json_atomic(dir / "dataset.json", {{"system_id", sid},
                                                         {"trial", trial_id(t)},
                                                         {"seed", tj["dataset_seed"]},
                                                         {"n_train", config.n_train},
                                                         {"n_test", config.n_test},
                                                         {"train_sizes", config.train_sizes}});
            }
        } catch (...) {
            std::error_code ec;
            fs::remove_all(system_dir(config, s), ec);
            throw;
        }
    });
    summary.skipped = skipped;
    for (auto& [i, msg] : errors) summary.failures.emplace_back(system_id(i), msg);
    json systems = json::array();
    for (auto& e : entries) systems.push_back(e);
    update_manifest(config, "generate", summary, &systems);
    return summary;
}

StageSummary run_model(const ExperimentConfig& config) {
    config.validate();
    StageSummary summary;
    const int units = config.n_systems * config.trials;
    summary.units = units;
    std::atomic<int> skipped{0};
    const bool needs_perf = std::any_of(config.levels.begin(), config.levels.end(),
                                        [](KnowledgeLevel l) { return l != KnowledgeLevel::Null; });

    auto errors = parallel_for(units, config.jobs, [&](int unit) {
        const int s = unit / config.trials;
        const int t = unit % config.trials;
        const auto dir = trial_dir(config, s, t);
        if (config.resume && fs::exists(dir / "fairness.json")) {
            ++skipped;
            return;
        }
        const auto graph = CausalInfluenceGraph::from_json(read_json(system_dir(config, s) / "graph.json"));
        const auto knowledge = derive_knowledge(graph);
        SystemDataset ds;
        ds.system_id = system_id(s);
        ds.train = read_records_csv(dir / "train.csv", graph.aspects());
        ds.test = read_records_csv(dir / "test.csv", graph.aspects());
        ds.train_sizes = config.train_sizes;
        for (int n : config.train_sizes)
            if (n > static_cast<int>(ds.train.size())) throw RangeError("train size exceeds stored training rows");

        const auto unit_seed = derive_seed(config.global_seed, static_cast<std::uint64_t>(s),
                                           static_cast<std::uint64_t>(t), "model");
        std::map<KnowledgeLevel, std::map<MetricKind, EfficacyCurve>> curves;
        json fairness_points = json::array();
        for (int n : config.train_sizes) {
            const auto prefix = training_prefix(ds, n);
            ModelingSetup setup;
            setup.space = config.forest_space;
            setup.budget = {config.budget, derive_seed(unit_seed, "budget", static_cast<std::uint64_t>(n))};
            setup.cv = {config.folds, derive_seed(unit_seed, "cv", static_cast<std::uint64_t>(n))};
            setup.alpha_ci = config.alpha_ci;
            setup.fit_seed = derive_seed(unit_seed, "fit", static_cast<std::uint64_t>(n));

            std::shared_ptr<const TunedForest> perf;
            std::string perf_error;
            if (needs_perf) {
                try {
                    perf = fit_perf_model(prefix, setup);
                } catch (const std::exception& e) {
                    perf_error = e.what();
                }
            }
            json level_info = json::object();
            for (auto level : config.levels) {
                std::optional<ModularPredictor> predictor;
                std::string error = level == KnowledgeLevel::Null ? std::string() : perf_error;
                if (error.empty()) {
                    try {
                        predictor = fit_level(level, prefix, graph, knowledge, setup, perf);
                    } catch (const std::exception& e) {
                        error = e.what();
                    }
                }
                for (auto metric : config.metrics) {
                    CurvePoint point;
                    point.n = n;
                    if (predictor) {
                        try {
                            point.p = evaluate_efficacy(*predictor, ds.test, metric);
                        } catch (const std::exception& e) {
                            point.error = e.what();
                        }
                    } else {
                        point.error = error;
                    }
                    curves[level][metric].metric = metric;
                    curves[level][metric].points.push_back(point);
                }
                level_info[to_string(level)] = {
                    {"evaluations", predictor ? predictor->evaluations() : 0},
                    {"fallback_ivs", predictor ? predictor->summary()["fallbacks"] : json()},
                    {"error", error}};
            }
            fairness_points.push_back({{"n", n},
                                       {"prefix_rows", prefix.size()},
                                       {"prefix_digest", prefix_digest(ds.train, n)},
                                       {"setup", setup.to_json()},
                                       {"levels", level_info}});
        }

        for (const auto& [level, by_metric] : curves) {
            for (const auto& [metric, curve] : by_metric) {
                json points = json::array();
                for (const auto& p : curve.points) {
                    json pj = {{"n", p.n}, {"p", p.p ? json(*p.p) : json()}};
                    if (!p.error.empty()) pj["error"] = p.error;
                    points.push_back(pj);
                }
                write_json_atomic(curve_path(config, s, t, level, metric),
                                  {{"system_id", system_id(s)},
                                   {"trial", trial_id(t)},
                                   {"level", to_string(level)},
                                   {"metric", to_string(metric)},
                                   {"points", points},
                                   {"seeds", {{"global", config.global_seed}, {"unit", unit_seed}}},
                                   {"budget", config.budget}});
            }
        }
        write_json_atomic(dir / "fairness.json", {{"system_id", system_id(s)},
                                                  {"trial", trial_id(t)},
                                                  {"budget_per_regressor", config.budget},
                                                  {"points", fairness_points}});
    });
    summary.skipped = skipped;
    for (auto& [i, msg] : errors)
        summary.failures.emplace_back(system_id(i / config.trials) + "/" + trial_id(i % config.trials), msg);
    update_manifest(config, "model", summary);
    return summary;
}

EfficacyCurve load_mean_curve(const ExperimentConfig& config, int s, KnowledgeLevel level, MetricKind metric,
                              std::vector<std::string>* gaps) {
    EfficacyCurve mean;
    mean.metric = metric;
    std::vector<double> sum(config.train_sizes.size(), 0.0);
    std::vector<int> count(config.train_sizes.size(), 0);
    for (int t = 0; t < config.trials; ++t) {
        const auto path = curve_path(config, s, t, level, metric);
        if (!fs::exists(path)) {
            if (gaps) gaps->push_back("missing curve " + fs::relative(path, config.out).string());
            continue;
        }
        const auto j = read_json(path);
        for (const auto& p : j.at("points")) {
            const auto it = std::find(config.train_sizes.begin(), config.train_sizes.end(), p.at("n").get<int>());
            if (it == config.train_sizes.end()) continue;
            const auto k = static_cast<std::size_t>(it - config.train_sizes.begin());
            if (p.at("p").is_number()) {
                sum[k] += p.at("p").get<double>();
                ++count[k];
            } else if (gaps) {
                gaps->push_back("failed point n=" + std::to_string(p.at("n").get<int>()) + " in " +
                                fs::relative(path, config.out).string() + ": " + p.value("error", std::string()));
            }
        }
    }
    for (std::size_t k = 0; k < config.train_sizes.size(); ++k) {
        CurvePoint point;
        point.n = config.train_sizes[k];
        if (count[k] > 0) point.p = sum[k] / count[k];
        else point.error = "no successful trial";
        mean.points.push_back(point);
    }
    return mean;
}

StageSummary run_analyze(const ExperimentConfig& config) {
    config.validate();
    StageSummary summary;
    summary.units = static_cast<int>(config.metrics.size());
    const fs::path dir = config.out / "analysis";
    std::vector<std::string> gaps;
    const std::set<KnowledgeLevel> have(config.levels.begin(), config.levels.end());
    const std::array<KnowledgeLevel, 3> structured{KnowledgeLevel::Partial, KnowledgeLevel::Practical,
                                                   KnowledgeLevel::Complete};

    std::vector<StructuralAspects> aspects(static_cast<std::size_t>(config.n_systems));
    std::vector<bool> present(static_cast<std::size_t>(config.n_systems), false);
    for (int s = 0; s < config.n_systems; ++s) {
        const auto path = system_dir(config, s) / "graph.json";
        if (!fs::exists(path)) {
            gaps.push_back("missing system " + system_id(s));
            continue;
        }
        aspects[static_cast<std::size_t>(s)] = CausalInfluenceGraph::from_json(read_json(path)).aspects();
        present[static_cast<std::size_t>(s)] = true;
    }
    if (std::none_of(present.begin(), present.end(), [](bool b) { return b; }))
        throw IoError("no generated systems under " + config.out.string());

    json hardness_json = json::object();
    for (int s = 0; s < config.n_systems; ++s)
        if (present[static_cast<std::size_t>(s)])
            hardness_json[system_id(s)]["aspects"] = aspects_json(aspects[static_cast<std::size_t>(s)]);

    for (auto metric : config.metrics) {
        const std::string mname = to_string(metric);
        std::vector<AspectRecord> aspect_records;
        std::vector<OpportunityRecord> opportunity_records;
        json opp_json = json::object();
        std::ostringstream curves_csv;
        curves_csv << "system,level,n,p\n";

        for (int s = 0; s < config.n_systems; ++s) {
            if (!present[static_cast<std::size_t>(s)]) continue;
            const auto sid = system_id(s);
            std::map<KnowledgeLevel, EfficacyCurve> mean;
            for (auto level : config.levels) {
                mean[level] = load_mean_curve(config, s, level, metric, &gaps);
                for (const auto& p : mean[level].points)
                    curves_csv << sid << ',' << to_string(level) << ',' << p.n << ','
                               << (p.p ? format_double(*p.p) : std::string()) << '\n';
            }
            if (!have.count(KnowledgeLevel::Null)) continue;
            if (!mean[KnowledgeLevel::Null].complete()) {
                gaps.push_back("no hardness for " + sid + " (" + mname + "): incomplete Null curve");
                continue;
            }
            const auto h = hardness(mean[KnowledgeLevel::Null]);
            hardness_json[sid][mname] = h.value;
            aspect_records.push_back({sid, aspects[static_cast<std::size_t>(s)], h.value});

            if (!have.count(KnowledgeLevel::Ideal) || !mean[KnowledgeLevel::Ideal].complete()) continue;
            for (auto level : structured) {
                if (!have.count(level)) continue;
                if (!mean[level].complete()) {
                    gaps.push_back("no opportunity for " + sid + " " + to_string(level) + " (" + mname + ")");
                    continue;
                }
                const auto o = opportunity(mean[KnowledgeLevel::Null], mean[KnowledgeLevel::Ideal], mean[level], level);
                json per_size = json::array();
                for (const auto& t : o.per_size) per_size.push_back({{"n", t.n}, {"gap", t.gap}, {"filling", t.filling}});
                opp_json[sid][to_string(level)] = {{"value", o.value}, {"per_size", per_size}};
                opportunity_records.push_back({sid, level, o.value});
            }
        }
        write_text_atomic(dir / ("curves_" + mname + ".csv"), curves_csv.str());
        write_json_atomic(dir / ("opportunity_" + mname + ".json"), opp_json);

        if (aspect_records.size() >= 10) {
            const auto reg = aspect_regression(aspect_records, config.aspect_grid);
            Eigen::MatrixXd X(static_cast<Eigen::Index>(aspect_records.size()), 5);
            Eigen::VectorXd y(static_cast<Eigen::Index>(aspect_records.size()));
            for (std::size_t i = 0; i < aspect_records.size(); ++i) {
                const auto sc = scale_aspects(aspect_records[i].aspects);
                for (int k = 0; k < 5; ++k) X(static_cast<Eigen::Index>(i), k) = sc[static_cast<std::size_t>(k)];
                y(static_cast<Eigen::Index>(i)) = aspect_records[i].hardness;
            }
            const Predictor model = [&reg](const Eigen::MatrixXd& Z) { return reg.model.predict(Z); };
            const std::vector<std::string> names(kRegressorNames.begin(), kRegressorNames.end());
            const auto seed = derive_seed(config.global_seed, "rq1");
            const auto perm = permutation_importance(model, X, y, mean_squared_error, config.importance_repeats,
                                                     seed, names);
            const auto shap = shapley_importance(model, X, y, mean_squared_error, config.shapley_samples, seed,
                                                 ShapleyMode::Auto, names);
            // Regressor attributions folded onto the four aspects.
            auto fold = [](const ImportanceVector& v) {
                std::vector<double> raw(kAspectNames.size(), 0.0);
                for (std::size_t r = 0; r < v.raw.size(); ++r)
                    raw[static_cast<std::size_t>(kRegressorAspect[r])] += std::max(v.raw[r], 0.0);
                return normalize_importance(raw, {kAspectNames.begin(), kAspectNames.end()});
            };
            write_json_atomic(dir / ("rq1_" + mname + ".json"),
                              {{"metric", mname},
                               {"systems", aspect_records.size()},
                               {"lasso", reg.to_json()},
                               {"permutation", {{"regressors", perm.to_json()}, {"aspects", fold(perm).to_json()}}},
                               {"shapley", {{"regressors", shap.to_json()}, {"aspects", fold(shap).to_json()}}}});
        } else {
            gaps.push_back("aspect regression (" + mname + ") skipped: " + std::to_string(aspect_records.size()) +
                           " systems with hardness, 10 needed");
        }

        if (aspect_records.empty()) {
            gaps.push_back("matrix (" + mname + ") skipped: no hardness scores");
            continue;
        }
        TwoStageOptions options;
        options.mode = config.hardness_mode;
        options.use_measured_hardness = config.use_measured_hardness;
        options.alpha = config.alpha;
        options.grid = config.aspect_grid;
        const auto result = two_stage_pipeline(aspect_records, opportunity_records, metric, options);
        write_json_atomic(dir / ("two_stage_" + mname + ".json"), result.to_json());
        write_json_atomic(dir / ("matrix_" + mname + ".json"), result.matrix.to_json());
        write_text_atomic(dir / ("matrix_" + mname + ".csv"), matrix_csv(result.matrix));
        write_json_atomic(dir / ("tests_" + mname + ".json"), tests_json(result.tests));
        write_text_atomic(dir / ("tests_" + mname + ".csv"), tests_csv(result.tests));
        write_text_atomic(dir / ("heatmap_" + mname + ".svg"), heatmap_svg(result.matrix));
        for (const auto& note : result.notes) gaps.push_back(mname + ": " + note);
    }
    write_json_atomic(dir / "hardness.json", hardness_json);
    write_json_atomic(dir / "gaps.json", {{"gaps", gaps}});
    update_manifest(config, "analyze", summary);
    return summary;
}

StageSummary run_report(const ExperimentConfig& config) {
    StageSummary summary;
    summary.units = 1;
    write_text_atomic(config.out / "report.md", render_report(config.out));
    update_manifest(config, "report", summary);
    return summary;
}

StageSummary run_all(const ExperimentConfig& config) {
    StageSummary total;
    for (const auto& stage : {run_generate, run_model, run_analyze, run_report}) {
        auto s = stage(config);
        total.units += s.units;
        total.skipped += s.skipped;
        total.failures.insert(total.failures.end(), s.failures.begin(), s.failures.end());
    }
    return total;
}

}  // namespace modperf
