#include "modperf/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "modperf/errors.hpp"
#include "modperf/seed.hpp"

namespace modperf {

SystemDataset sample_dataset(const SystemSemantics& semantics, std::uint64_t seed, int n_train, int n_test,
                             std::string system_id) {
    if (n_train < 1 || n_test < 1) throw InputError("n_train and n_test must be >= 1");
    const int options = semantics.graph().aspects().total_options();
    const auto needed = static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_test);

    Rng rng(derive_seed(seed, "configurations"));
    std::vector<Configuration> configs;
    configs.reserve(needed);

    if (options < 62 && (std::uint64_t{1} << options) < needed)
        throw CapacityError("configuration space has " + std::to_string(std::uint64_t{1} << options) +
                            " points, " + std::to_string(needed) + " requested");

    if (options < 62 && (std::uint64_t{1} << options) <= 4 * needed) {
        const std::uint64_t space = std::uint64_t{1} << options;
        std::vector<std::uint64_t> codes(space);
        for (std::uint64_t c = 0; c < space; ++c) codes[c] = c;
        shuffle(codes, rng);
        for (std::size_t i = 0; i < needed; ++i) {
            Configuration cfg(static_cast<std::size_t>(options));
            for (int b = 0; b < options; ++b) cfg[static_cast<std::size_t>(b)] = (codes[i] >> b) & 1U;
            configs.push_back(std::move(cfg));
        }
    } else {
        std::set<Configuration> seen;
        const std::size_t max_attempts = 10 * needed;
        for (std::size_t attempt = 0; attempt < max_attempts && configs.size() < needed; ++attempt) {
            Configuration cfg(static_cast<std::size_t>(options));
            for (auto& bit : cfg) bit = static_cast<std::uint8_t>(rng() >> 63);
            if (seen.insert(cfg).second) configs.push_back(std::move(cfg));
        }
        if (configs.size() < needed) throw CapacityError("could not draw enough distinct configurations");
    }

    SystemDataset ds;
    ds.system_id = std::move(system_id);
    for (std::size_t i = 0; i < needed; ++i) {
        auto eval = semantics.evaluate(configs[i], derive_seed(seed, "noise", i));
        MeasurementRecord rec{std::move(configs[i]), std::move(eval.iv_values), std::move(eval.perf_values)};
        (i < static_cast<std::size_t>(n_train) ? ds.train : ds.test).push_back(std::move(rec));
    }
    return ds;
}

std::vector<MeasurementRecord> training_prefix(const SystemDataset& dataset, int n) {
    if (n < 0 || static_cast<std::size_t>(n) > dataset.train.size())
        throw RangeError("training prefix of " + std::to_string(n) + " exceeds " +
                         std::to_string(dataset.train.size()) + " training records");
    return {dataset.train.begin(), dataset.train.begin() + n};
}

std::vector<std::string> csv_header(const StructuralAspects& a) {
    std::vector<std::string> h;
    for (int m = 0; m < a.module_count; ++m)
        for (int j = 0; j < a.option_count; ++j) h.push_back("o_" + std::to_string(m) + "_" + std::to_string(j));
    for (int m = 0; m < a.module_count; ++m)
        for (int k = 0; k < a.iv_per_module; ++k) h.push_back("iv_" + std::to_string(m) + "_" + std::to_string(k));
    for (int q = 0; q < a.perf_count; ++q) h.push_back("perf_" + std::to_string(q));
    return h;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_records_csv(const std::filesystem::path& path, const StructuralAspects& aspects,
                       const std::vector<MeasurementRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const auto header = csv_header(aspects);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : records) {
        bool first = true;
        auto sep = [&] {
            if (!first) out << ',';
            first = false;
        };
        for (auto b : r.config) {
            sep();
            out << static_cast<int>(b);
        }
        for (double v : r.iv_values) {
            sep();
            out << format_double(v);
        }
        for (double v : r.perf_values) {
            sep();
            out << format_double(v);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MeasurementRecord> read_records_csv(const std::filesystem::path& path, const StructuralAspects& aspects) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    const auto header = csv_header(aspects);
    std::string line;
    std::getline(in, line);
    {
        std::stringstream ss(line);
        std::size_t i = 0;
        for (std::string cell; std::getline(ss, cell, ','); ++i)
            if (i >= header.size() || cell != header[i]) throw IoError("unexpected CSV header in " + path.string());
        if (i != header.size()) throw IoError("unexpected CSV header in " + path.string());
    }
    const auto n_opt = static_cast<std::size_t>(aspects.total_options());
    const auto n_iv = static_cast<std::size_t>(aspects.total_ivs());
    std::vector<MeasurementRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        MeasurementRecord r;
        std::stringstream ss(line);
        std::size_t col = 0;
        for (std::string cell; std::getline(ss, cell, ','); ++col) {
            if (col < n_opt)
                r.config.push_back(static_cast<std::uint8_t>(cell == "1"));
            else if (col < n_opt + n_iv)
                r.iv_values.push_back(std::strtod(cell.c_str(), nullptr));
            else
                r.perf_values.push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (col != header.size()) throw IoError("short CSV row in " + path.string());
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace modperf
