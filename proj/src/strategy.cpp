#include "fedism/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fedism {
namespace {

AggregationWeights uniform(std::size_t k) {
    return AggregationWeights(k, 1.0 / static_cast<double>(k));
}

AggregationWeights powered(const std::vector<double>& stat, double q, double floor) {
    const std::size_t k = stat.size();
    std::vector<double> floored(k);
    double top = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        floored[i] = std::max(stat[i], floor);
        top = std::max(top, floored[i]);
    }
    if (top <= 0.0) {
        std::fprintf(stderr, "warning: aggregation stats all zero after flooring; using uniform weights\n");
        return uniform(k);
    }
    // Ratios before the power keep c^q out of the floats, so scaling every
    // stat by c > 0 cancels exactly.
    AggregationWeights w(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        w[i] = std::pow(floored[i] / top, q);
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

double rho_at(const RhoSchedule& schedule, int t) {
    if (schedule.kind == ScheduleKind::constant) {
        if (schedule.rho_fixed < 0.0) throw ConfigError("schedule: rho_fixed must be >= 0");
        return schedule.rho_fixed;
    }
    if (schedule.total_rounds < 1) throw ConfigError("schedule: total_rounds must be >= 1");
    if (t < 1 || t > schedule.total_rounds)
        throw ConfigError("schedule: round " + std::to_string(t) + " outside [1, " +
                          std::to_string(schedule.total_rounds) + "]");
    if (schedule.rho_max < 0.0) throw ConfigError("schedule: rho_max must be >= 0");
    if (!(schedule.tau > 0.0)) throw ConfigError("schedule: tau must be > 0");
    return schedule.rho_max *
           std::pow(static_cast<double>(t) / schedule.total_rounds, schedule.tau);
}

AggregationWeights weights_raw(const AggRule& rule, const std::vector<ClientStats>& stats) {
    if (stats.empty()) throw ConfigError("weights_raw: no clients");
    if (!(rule.q > 0.0) || !std::isfinite(rule.q)) throw ConfigError("weights_raw: q must be finite and > 0");
    if (rule.weight_floor < 0.0) throw ConfigError("weights_raw: weight_floor must be >= 0");

    const std::size_t k = stats.size();
    if (rule.kind == AggKind::size) {
        double total = 0.0;
        for (const auto& s : stats) {
            if (s.n < 0.0) throw ConfigError("weights_raw: negative client size");
            total += s.n;
        }
        if (total <= 0.0) {
            std::fprintf(stderr, "warning: total client size is zero; using uniform weights\n");
            return uniform(k);
        }
        AggregationWeights w(k);
        for (std::size_t i = 0; i < k; ++i) w[i] = stats[i].n / total;
        return w;
    }

    std::vector<double> stat(k);
    for (std::size_t i = 0; i < k; ++i)
        stat[i] = rule.kind == AggKind::sharpness_q ? stats[i].sharpness : stats[i].perturbed_loss;
    return powered(stat, rule.q, rule.weight_floor);
}

AggregationWeights smooth(const AggregationWeights& w_raw, const AggregationWeights& w_prev,
                          double beta, int t) {
    if (!(beta > 0.0) || beta > 1.0) throw ConfigError("smooth: beta must be in (0, 1]");
    if (t < 1) throw ConfigError("smooth: round must be >= 1");
    if (t == 1 || beta == 1.0) return w_raw;
    if (w_raw.size() != w_prev.size()) throw ConfigError("smooth: weight lengths differ");
    AggregationWeights w(w_raw.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = beta * w_raw[i] + (1.0 - beta) * w_prev[i];
    return w;
}

ParamVector aggregate(const std::vector<ParamVector>& locals, const AggregationWeights& w) {
    if (locals.empty()) throw ConfigError("aggregate: no local models");
    if (locals.size() != w.size()) throw ConfigError("aggregate: weight count mismatch");
    for (const auto& theta : locals)
        if (theta.layout != locals.front().layout) throw ConfigError("aggregate: layout mismatch");

    ParamVector out{locals.front().layout, std::vector<double>(locals.front().values.size(), 0.0)};
    for (std::size_t k = 0; k < locals.size(); ++k) {
        if (w[k] == 0.0) continue;
        add_scaled(out, w[k], locals[k]);
    }
    return out;
}

StrategyConfig strategy_preset(std::string_view name) {
    StrategyConfig cfg;
    if (name == "fedavg") {
        cfg.local_optimizer = LocalOptimizer::gd;
        cfg.schedule = {ScheduleKind::constant, 0.0};
        cfg.agg.kind = AggKind::size;
        return cfg;
    }
    if (name == "fedism") {
        cfg.local_optimizer = LocalOptimizer::salt;
        cfg.schedule = {ScheduleKind::constant, 0.05};
        cfg.agg.kind = AggKind::sharpness_q;
        return cfg;
    }
    if (name == "fedism_plus_s") {
        cfg.local_optimizer = LocalOptimizer::salt;
        cfg.schedule.kind = ScheduleKind::progressive;
        cfg.agg.kind = AggKind::sharpness_q;
        return cfg;
    }
    if (name == "fedism_plus_l") {
        cfg.local_optimizer = LocalOptimizer::salt;
        cfg.schedule.kind = ScheduleKind::progressive;
        cfg.agg.kind = AggKind::perturbed_loss_q;
        return cfg;
    }
    if (name == "fairopt_loss") {
        cfg.local_optimizer = LocalOptimizer::gd;
        cfg.schedule = {ScheduleKind::constant, 0.0};
        cfg.agg.kind = AggKind::perturbed_loss_q;
        return cfg;
    }
    throw ConfigError("unknown strategy preset '" + std::string(name) + "'");
}

const std::vector<std::string>& strategy_preset_names() {
    static const std::vector<std::string> names = {"fedavg", "fedism", "fedism_plus_s",
                                                   "fedism_plus_l", "fairopt_loss"};
    return names;
}

}  // namespace fedism
