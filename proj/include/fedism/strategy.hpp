#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fedism/model.hpp"

namespace fedism {

enum class LocalOptimizer { gd, salt };

enum class ScheduleKind { constant, progressive };

/// Search-distance schedule. progressive: rho(t) = rho_max * (t/T)^tau,
/// nondecreasing from ~0 at t=1 up to rho_max at t=T.
struct RhoSchedule {
    ScheduleKind kind = ScheduleKind::constant;
    double rho_fixed = 0.0;    // constant
    double rho_max = 0.1;      // progressive
    double tau = 0.5;          // progressive
    int total_rounds = 0;      // T
};

double rho_at(const RhoSchedule& schedule, int t);

enum class AggKind { size, sharpness_q, perturbed_loss_q };

/// Aggregation-weight rule. Stats are floored before the q-th power so
/// vanishing or slightly negative measurements stay well defined.
struct AggRule {
    AggKind kind = AggKind::size;
    double q = 2.0;
    double weight_floor = 1e-8;
};

/// The only per-client numbers the server-side weighting ever sees.
/// Deliberately excludes any data-quality attribute.
struct ClientStats {
    double n = 0.0;
    double sharpness = 0.0;
    double perturbed_loss = 0.0;
};

/// Point on the K-1 simplex: entries >= 0, sum 1 within 1e-12.
using AggregationWeights = std::vector<double>;

AggregationWeights weights_raw(const AggRule& rule, const std::vector<ClientStats>& stats);

/// Moving average of weight vectors; t = 1 passes w_raw through unchanged.
AggregationWeights smooth(const AggregationWeights& w_raw, const AggregationWeights& w_prev,
                          double beta, int t);

/// Elementwise weighted sum of parameter vectors, accumulated in client
/// order so the result is identical for any execution schedule.
ParamVector aggregate(const std::vector<ParamVector>& locals, const AggregationWeights& w);

/// A complete strategy is data: optimizer x schedule x weighting x smoothing.
struct StrategyConfig {
    LocalOptimizer local_optimizer = LocalOptimizer::gd;
    RhoSchedule schedule;
    AggRule agg;
    double beta = 0.5;
    double gsam_alpha = 0.0;
};

/// Named presets:
///   fedavg        = gd,   constant rho 0,     size weights
///   fedism        = salt, constant rho 0.05,  sharpness^q weights
///   fedism_plus_s = salt, progressive,        sharpness^q weights
///   fedism_plus_l = salt, progressive,        perturbed-loss^q weights
///   fairopt_loss  = gd,   constant rho 0,     perturbed-loss^q weights
///                   (at rho 0 the perturbed loss equals the training loss)
StrategyConfig strategy_preset(std::string_view name);

const std::vector<std::string>& strategy_preset_names();

}  // namespace fedism
