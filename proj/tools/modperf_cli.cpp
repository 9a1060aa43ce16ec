// modperf: generate synthetic modular systems, fit knowledge-level models,
// score hardness and opportunity, and test the resulting matrix.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "modperf/errors.hpp"
#include "modperf/experiment.hpp"

using namespace modperf;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(part);
    }
    return out;
}

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> systems, trials, budget, jobs;
    std::vector<std::string> train_sizes, metrics, levels;
    std::optional<double> alpha;
    std::optional<std::string> hardness_mode, out;
    bool resume = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; flags override its values");
    cmd->add_option("--seed", f.seed, "Global 64-bit seed");
    cmd->add_option("--systems", f.systems, "Number of generated systems");
    cmd->add_option("--trials", f.trials, "Semantics/dataset redraws per system");
    cmd->add_option("--train-sizes", f.train_sizes, "Training sizes, e.g. 20,50,100")->delimiter(',');
    cmd->add_option("--metric", f.metrics, "acc and/or scc")->delimiter(',');
    cmd->add_option("--levels", f.levels, "Knowledge levels, e.g. null,partial,ideal")->delimiter(',');
    cmd->add_option("--budget", f.budget, "Hyperparameter evaluations per regressor");
    cmd->add_option("--alpha", f.alpha, "Significance level of the hypothesis tests");
    cmd->add_option("--hardness-mode", f.hardness_mode, "fixed or empirical")
        ->check(CLI::IsMember({"fixed", "empirical"}));
    cmd->add_option("--jobs", f.jobs, "Parallel work units");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_flag("--resume", f.resume, "Skip units whose outputs already exist");
}

ExperimentConfig build_config(const Flags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(f.config);
    if (f.seed) c.global_seed = *f.seed;
    if (f.systems) c.n_systems = *f.systems;
    if (f.trials) c.trials = *f.trials;
    if (!f.train_sizes.empty()) {
        c.train_sizes.clear();
        for (const auto& s : split_list(f.train_sizes)) c.train_sizes.push_back(std::stoi(s));
    }
    if (!f.metrics.empty()) {
        c.metrics.clear();
        for (const auto& m : split_list(f.metrics)) c.metrics.push_back(metric_from_string(m));
    }
    if (!f.levels.empty()) {
        c.levels.clear();
        for (const auto& l : split_list(f.levels)) c.levels.push_back(knowledge_level_from_string(l));
    }
    if (f.budget) c.budget = *f.budget;
    if (f.alpha) c.alpha = *f.alpha;
    if (f.hardness_mode) c.hardness_mode = hardness_mode_from_string(*f.hardness_mode);
    if (f.jobs) c.jobs = *f.jobs;
    if (f.out) c.out = *f.out;
    if (f.resume) c.resume = true;
    c.validate();
    return c;
}

int fail(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", {{"type", kind}, {"message", message}}}}.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structural-knowledge opportunity experiments on synthetic modular systems"};
    app.require_subcommand(1);
    Flags flags;
    using Stage = StageSummary (*)(const ExperimentConfig&);
    const std::vector<std::pair<std::string, Stage>> stages{{"generate", run_generate},
                                                           {"model", run_model},
                                                           {"analyze", run_analyze},
                                                           {"report", run_report},
                                                           {"all", run_all}};
    const std::map<std::string, std::string> help{
        {"generate", "Sample aspects, graphs, semantics and datasets"},
        {"model", "Fit every knowledge level and write efficacy curves"},
        {"analyze", "Hardness, opportunity, aspect importance, matrix and tests"},
        {"report", "Render report.md from the analysis"},
        {"all", "Run every stage in order"}};
    for (const auto& [name, _] : stages) add_flags(app.add_subcommand(name, help.at(name)), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail("usage", e.what(), 2);
    }

    try {
        const auto config = build_config(flags);
        for (const auto& [name, stage] : stages) {
            if (!app.got_subcommand(name)) continue;
            const auto summary = stage(config);
            json failures = json::array();
            for (const auto& [unit, message] : summary.failures) failures.push_back({{"unit", unit}, {"error", message}});
            std::cout << json{{"stage", name}, {"units", summary.units}, {"skipped", summary.skipped},
                              {"failures", failures}, {"out", config.out.string()}}
                             .dump()
                      << std::endl;
            return summary.failures.empty() ? 0 : 4;
        }
    } catch (const InputError& e) {
        return fail("input", e.what(), 2);
    } catch (const RangeError& e) {
        return fail("range", e.what(), 2);
    } catch (const IoError& e) {
        return fail("io", e.what(), 3);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
