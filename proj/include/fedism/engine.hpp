#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fedism/metrics.hpp"
#include "fedism/sharpness.hpp"
#include "fedism/strategy.hpp"

namespace fedism {

struct FederationConfig {
    int rounds = 1;  // T
    int local_epochs = 1;
    int batch_size = 32;
    double learning_rate = 0.01;
    StrategyConfig strategy;
    int eval_every = 10;
    std::uint64_t master_seed = 0;
    bool logit_adjustment = true;
    double adjustment_temperature = 1.0;
};

struct ClientRoundStats {
    double n = 0.0;
    double base_loss = 0.0;
    double sharpness = 0.0;
    double perturbed_loss = 0.0;
};

struct RoundRecord {
    int t = 0;
    double rho_used = 0.0;  // assessment search distance, rho_at(schedule, t)
    std::vector<ClientRoundStats> clients;
    AggregationWeights weights_raw;
    AggregationWeights weights_smoothed;
    std::optional<EvalReport> eval;
};

struct RunResult {
    ParamVector final_params;
    std::vector<RoundRecord> records;
};

/// Observer invoked with the aggregated global model after every round.
using RoundObserver = std::function<void(int t, const ParamVector& global)>;

/// One client's local pass: `local_epochs` sweeps over seed-shuffled
/// mini-batches, gd or salt steps per the strategy, rho fixed at rho(t).
/// The shuffle stream depends only on (master_seed, client_id, t).
ParamVector local_train(const Model& model, const ParamVector& global,
                        const ClientDataset& client, int t, const FederationConfig& cfg);

/// Run the full federation: broadcast, local training, whole-shard state
/// assessment, weighting, smoothing, aggregation, periodic evaluation.
/// Bitwise deterministic in master_seed for any `workers` count.
RunResult run(const Model& model, const std::vector<ClientDataset>& clients,
              const Dataset& clean_test, const Dataset& corrupted_test,
              const FederationConfig& cfg, int workers = 1,
              const RoundObserver& observer = nullptr);

void validate(const FederationConfig& cfg);

}  // namespace fedism
