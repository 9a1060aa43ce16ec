#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "modperf/semantics.hpp"

namespace modperf {

/// One bit per option node in canonical order.
using Configuration = std::vector<std::uint8_t>;

struct MeasurementRecord {
    Configuration config;
    std::vector<double> iv_values;
    std::vector<double> perf_values;
};

struct SystemDataset {
    std::string system_id;
    std::vector<MeasurementRecord> train;
    std::vector<MeasurementRecord> test;
    std::vector<int> train_sizes;
};

/// Draws n_train + n_test distinct configurations uniformly at random and
/// measures each with its own noise seed. Small spaces (at most four times
/// the request) are enumerated and shuffled instead of rejection sampled.
/// Throws CapacityError when the space holds fewer configurations than
/// requested or de-duplication exhausts 10x oversampling.
SystemDataset sample_dataset(const SystemSemantics& semantics, std::uint64_t seed, int n_train, int n_test,
                             std::string system_id = "system");

/// First n training records. Prefixes are nested by construction.
std::vector<MeasurementRecord> training_prefix(const SystemDataset& dataset, int n);

/// `o_<m>_<j>,...,iv_<m>_<k>,...,perf_<q>` header for the given aspects.
std::vector<std::string> csv_header(const StructuralAspects& aspects);

void write_records_csv(const std::filesystem::path& path, const StructuralAspects& aspects,
                       const std::vector<MeasurementRecord>& records);
std::vector<MeasurementRecord> read_records_csv(const std::filesystem::path& path, const StructuralAspects& aspects);

/// Formats a double so that parsing it back yields the same value.
std::string format_double(double v);

}  // namespace modperf
