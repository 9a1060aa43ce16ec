#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "modperf/errors.hpp"
#include "modperf/experiment.hpp"

using namespace modperf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / "modperf_test_experiment" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig tiny(const fs::path& out) {
    ExperimentConfig c;
    c.global_seed = 17;
    c.n_systems = 2;
    c.trials = 1;
    c.train_sizes = {10, 20};
    c.n_train = 20;
    c.n_test = 30;
    c.ranges.option_count_lo = c.ranges.option_count_hi = 6;
    c.ranges.module_count_lo = c.ranges.module_count_hi = 5;
    c.forest_space = ForestSearchSpace{5, 8, 3, 5, {1}, {FeatureFraction::All}};
    c.importance_repeats = 2;
    c.shapley_samples = 10;
    c.out = out;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    return out;
}

int run_cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(MODPERF_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("ids") {
    CHECK(system_id(7) == "s0007");
    CHECK(trial_id(3) == "t03");
}

TEST_CASE("config JSON merge, validation and round-trip") {
    ExperimentConfig c;
    c.merge_json(nlohmann::json::parse(R"({"seed": 9, "systems": 4, "train_sizes": [10, 40], "n_train": 40,
        "metrics": ["scc"], "levels": ["Null", "Ideal"], "ranges": {"module_count": [5, 8]},
        "hardness_mode": "empirical", "forest": {"n_trees": [5, 9]}})"));
    CHECK(c.global_seed == 9);
    CHECK(c.n_systems == 4);
    CHECK(c.metrics == std::vector<MetricKind>{MetricKind::Spearman});
    CHECK(c.levels.size() == 2);
    CHECK(c.ranges.module_count_hi == 8);
    CHECK(c.hardness_mode == HardnessMode::EmpiricalQuartile);
    CHECK(c.forest_space.n_trees_hi == 9);
    CHECK_NOTHROW(c.validate());

    ExperimentConfig d;
    d.merge_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    CHECK_FALSE(c.to_json().contains("out"));
    CHECK_FALSE(c.to_json().contains("jobs"));

    CHECK_THROWS_AS(c.merge_json(nlohmann::json::parse(R"({"sytems": 3})")), InputError);
    ExperimentConfig bad;
    bad.train_sizes = {50, 20};
    CHECK_THROWS(bad.validate());
    bad = ExperimentConfig{};
    bad.train_sizes = {20, 2000};
    CHECK_THROWS_AS(bad.validate(), RangeError);
}

TEST_CASE("design lists fix module and option counts") {
    ExperimentConfig c;
    c.design_module_counts = {5, 15, 30};
    c.design_option_counts = {6, 11, 16};
    std::map<std::pair<int, int>, int> seen;
    for (int s = 0; s < 18; ++s) {
        const auto a = system_aspects(c, s);
        ++seen[{a.module_count, a.option_count}];
    }
    CHECK(seen.size() == 9);
    for (const auto& [k, v] : seen) CHECK(v == 2);
    CHECK(system_aspects(c, 3) == system_aspects(c, 3));
}

TEST_CASE("parallel_for collects errors") {
    std::atomic<int> sum{0};
    const auto errors = parallel_for(20, 4, [&](int i) {
        if (i % 7 == 3) throw std::runtime_error("bad " + std::to_string(i));
        sum += i;
    });
    REQUIRE(errors.size() == 3);
    CHECK(errors[0].first == 3);
    CHECK(errors[2].second == "bad 17");
    CHECK(sum == 190 - 3 - 10 - 17);
}

TEST_CASE("a tiny run is complete and reproducible") {
    const auto a = scratch("run_a"), b = scratch("run_b");
    auto ca = tiny(a);
    ca.jobs = 2;
    const auto s = run_all(ca);
    CHECK(s.failures.empty());
    for (const char* f : {"config.json", "manifest.json", "report.md", "analysis/hardness.json",
                          "analysis/matrix_acc.json", "analysis/tests_scc.csv", "analysis/heatmap_acc.svg",
                          "systems/s0000/graph.json", "systems/s0001/t00/train.csv",
                          "systems/s0000/t00/curves/complete_scc.json", "systems/s0000/t00/fairness.json"})
        CHECK_MESSAGE(fs::exists(a / f), f);
    const auto curve = read_json(a / "systems/s0000/t00/curves/null_acc.json");
    CHECK(curve["points"].size() == 2);
    CHECK(curve["points"][0]["n"] == 10);

    run_all(tiny(b));
    CHECK(tree(a) == tree(b));
}

TEST_CASE("resume skips finished units") {
    const auto dir = scratch("resume");
    auto c = tiny(dir);
    run_generate(c);
    run_model(c);
    const auto before = slurp(dir / "systems/s0001/t00/fairness.json");
    fs::remove_all(dir / "systems/s0000/t00/curves");
    fs::remove(dir / "systems/s0000/t00/fairness.json");
    c.resume = true;
    const auto g = run_generate(c);
    CHECK(g.skipped == 2);
    const auto m = run_model(c);
    CHECK(m.skipped == 1);
    CHECK(fs::exists(dir / "systems/s0000/t00/fairness.json"));
    CHECK(slurp(dir / "systems/s0001/t00/fairness.json") == before);
}

TEST_CASE("CLI reports structured errors") {
    const auto dir = scratch("cli");
    const auto err = dir / "stderr.txt";
    CHECK(run_cli("generate --systems 0 --out " + (dir / "o").string(), err) == 2);
    auto j = nlohmann::json::parse(slurp(err));
    CHECK(j["error"]["type"] == "range");

    CHECK(run_cli("generate --bogus", err) == 2);
    CHECK(nlohmann::json::parse(slurp(err))["error"]["type"] == "usage");

    CHECK(run_cli("generate --config " + (dir / "missing.json").string(), err) == 3);
    CHECK(nlohmann::json::parse(slurp(err))["error"]["type"] == "io");

    CHECK(run_cli("analyze --out " + (dir / "empty").string(), err) == 3);
    CHECK(nlohmann::json::parse(slurp(err))["error"]["type"] == "io");
}

TEST_CASE("report needs an analysis") {
    CHECK_THROWS_AS(render_report(scratch("no_analysis")), IoError);
}
