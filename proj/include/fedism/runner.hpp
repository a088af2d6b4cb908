#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fedism/run_config.hpp"

namespace fedism {

/// Inputs of a single (strategy, seed) cell, with all effective seeds
/// derived from the spec's base seeds mixed with the run seed.
struct PreparedRun {
    Model model;
    std::vector<ClientDataset> clients;
    Dataset clean_test;
    Dataset corrupted_test;
    FederationConfig federation;
    std::vector<std::pair<std::string, std::uint64_t>> effective_seeds;
};

PreparedRun prepare_run(const RunSpec& spec, const StrategyConfig& strategy,
                        std::uint64_t run_seed);

/// Execute every (strategy, seed) pair, write one directory per run
/// (rounds.csv, eval.csv, manifest.json, model.bin) plus summary.csv with
/// final-window metrics aggregated per strategy.
void run_matrix(const RunSpec& spec, int workers = 1);

/// Aligned comparison of summary files; per-metric deltas against the
/// matching strategy row of the first summary (its first row when no name
/// matches). Throws ConfigError when a required column is missing.
std::string compare(const std::vector<std::filesystem::path>& summaries);

}  // namespace fedism
