#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedism/data.hpp"
#include "fedism/engine.hpp"
#include "fedism/model.hpp"

namespace fedism {

/// Dataset source: synthetic generation or CSV files on disk.
struct DataSource {
    std::optional<DatasetSpec> generate;
    int test_samples_per_class = 0;  // generated test split; 0 = same as train
    std::optional<std::filesystem::path> train_csv;
    std::optional<std::filesystem::path> test_csv;
};

struct NamedStrategy {
    std::string name;
    StrategyConfig config;
};

/// Parsed experiment description: one dataset/partition/model setup swept
/// over a (strategy x seed) matrix.
struct RunSpec {
    DataSource dataset;
    PartitionSpec partition;
    ModelSpec model;  // feature_dim / num_classes filled from the dataset
    FederationConfig federation;
    std::vector<NamedStrategy> strategies;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir;
    int summary_window = 5;
};

/// Strict JSON parsing: unknown keys are rejected with their full key path,
/// presets resolve to complete strategy configs, omitted tuning knobs fall
/// back to rho_max 0.1, tau 0.5, q 2.0, beta 0.5.
RunSpec parse_config(const std::filesystem::path& path);
RunSpec parse_config_text(const std::string& text);

/// Round-trippable echo of the spec (defaults filled in).
std::string config_echo(const RunSpec& spec);

}  // namespace fedism
