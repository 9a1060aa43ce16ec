#include <cstdio>
#include <filesystem>
#include <sstream>

#include "modperf/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace modperf {

namespace {

std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void importance_table(std::ostringstream& os, const json& rq1) {
    os << "| Aspect | Lasso | Permutation | Shapley |\n|---|---|---|---|\n";
    for (const auto& name : kAspectNames) {
        os << "| " << name << " | " << fixed(rq1["lasso"]["importance"]["weights"][name].get<double>()) << " | "
           << fixed(rq1["permutation"]["aspects"]["weights"][name].get<double>()) << " | "
           << fixed(rq1["shapley"]["aspects"]["weights"][name].get<double>()) << " |\n";
    }
}

}  // namespace

std::string render_report(const fs::path& out) {
    const fs::path analysis = out / "analysis";
    if (!fs::exists(analysis / "hardness.json")) throw IoError("no analysis under " + out.string());
    std::ostringstream os;
    os << "# Modeling opportunity report\n\n";
    if (fs::exists(out / "config.json")) {
        const auto c = read_json(out / "config.json");
        os << "Seed " << c["seed"] << ", " << c["systems"] << " systems, " << c["trials"] << " trial(s) each, "
           << "training sizes " << c["train_sizes"].dump() << ", search budget " << c["budget"] << " with "
           << c["folds"] << "-fold CV, hardness mode " << c["hardness_mode"].get<std::string>() << ".\n\n";
    }

    const json hardness = read_json(analysis / "hardness.json");
    if (!hardness.empty()) {
        os << "## Hardness\n\n| System | Option# | p_w | mu_a | sigma_a | Module# | acc | scc |\n"
           << "|---|---|---|---|---|---|---|---|\n";
        for (const auto& [sid, entry] : hardness.items()) {
            const auto& a = entry["aspects"];
            os << "| " << sid << " | " << a["option_count"] << " | " << fixed(a["p_w"].get<double>()) << " | "
               << fixed(a["mu_a"].get<double>()) << " | " << fixed(a["sigma_a"].get<double>()) << " | "
               << a["module_count"] << " | " << (entry.contains("acc") ? fixed(entry["acc"].get<double>()) : "-")
               << " | " << (entry.contains("scc") ? fixed(entry["scc"].get<double>()) : "-") << " |\n";
        }
        os << '\n';
    }

    for (const std::string metric : {"acc", "scc"}) {
        const auto rq1_path = analysis / ("rq1_" + metric + ".json");
        const auto matrix_path = analysis / ("matrix_" + metric + ".json");
        const auto tests_path = analysis / ("tests_" + metric + ".json");
        if (!fs::exists(rq1_path) && !fs::exists(matrix_path)) continue;
        os << "## Metric " << metric << "\n\n";
        if (fs::exists(rq1_path)) {
            const auto rq1 = read_json(rq1_path);
            os << "### Aspect importance\n\nL1 model: degree " << rq1["lasso"]["degree"] << ", alpha "
               << rq1["lasso"]["alpha"].get<double>() << ", CV MSE " << rq1["lasso"]["cv_mse"].get<double>()
               << ".\n\n";
            importance_table(os, rq1);
            os << '\n';
        }
        if (fs::exists(matrix_path)) {
            const auto m = read_json(matrix_path);
            os << "### Mean opportunity\n\n| Knowledge | Low | Medium | High |\n|---|---|---|---|\n";
            for (const auto& row : m["rows"]) {
                os << "| " << row.get<std::string>();
                for (const auto& col : m["columns"]) {
                    const auto& cell = m["cells"][row.get<std::string>() + "," + col.get<std::string>()];
                    os << " | " << (cell["empty"].get<bool>() ? std::string("n/a")
                                                              : fixed(cell["mean"].get<double>()) + " (n=" +
                                                                    std::to_string(cell["n"].get<int>()) + ")");
                }
                os << " |\n";
            }
            os << "\n![heatmap](analysis/heatmap_" << metric << ".svg)\n\n";
        }
        if (fs::exists(tests_path)) {
            os << "### Hypothesis tests\n\n| Id | Group 1 | Group 2 | Alternative | p | CLES 1 | CLES 2 |\n"
               << "|---|---|---|---|---|---|---|\n";
            for (const auto& r : read_json(tests_path)) {
                os << "| " << r["id"].get<std::string>() << " | " << r["group1"].get<std::string>() << " | "
                   << r["group2"].get<std::string>() << " | " << r["alternative"].get<std::string>() << " | ";
                if (r["skipped"].get<bool>()) os << "skipped | - | - |\n";
                else
                    os << fixed(r["p_value"].get<double>()) << (r["significant"].get<bool>() ? "*" : "") << " | "
                       << fixed(r["cles1"].get<double>()) << " | " << fixed(r["cles2"].get<double>()) << " |\n";
            }
            os << '\n';
        }
    }

    if (fs::exists(analysis / "gaps.json")) {
        const auto gaps = read_json(analysis / "gaps.json")["gaps"];
        os << "## Gaps\n\n";
        if (gaps.empty()) os << "None.\n";
        for (const auto& g : gaps) os << "- " << g.get<std::string>() << '\n';
    }
    return os.str();
}

}  // namespace modperf
