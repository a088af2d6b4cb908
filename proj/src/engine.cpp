#include "fedism/engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <numeric>
#include <random>
#include <thread>

namespace fedism {
namespace {

LogitAdjustment client_adjustment(const ClientDataset& client, const FederationConfig& cfg) {
    if (!cfg.logit_adjustment) return LogitAdjustment::disabled();
    return LogitAdjustment::from_label_counts(client.data.labels, client.data.num_classes,
                                              cfg.adjustment_temperature);
}

}  // namespace

void validate(const FederationConfig& cfg) {
    if (cfg.rounds < 1) throw ConfigError("federation: rounds must be >= 1");
    if (cfg.local_epochs < 1) throw ConfigError("federation: local_epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("federation: batch_size must be >= 1");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("federation: learning_rate must be > 0");
    if (cfg.eval_every < 1) throw ConfigError("federation: eval_every must be >= 1");
    if (!(cfg.strategy.beta > 0.0) || cfg.strategy.beta > 1.0)
        throw ConfigError("federation: strategy beta must be in (0, 1]");
    if (cfg.strategy.gsam_alpha < 0.0) throw ConfigError("federation: gsam_alpha must be >= 0");
    if (cfg.strategy.schedule.kind == ScheduleKind::progressive &&
        cfg.strategy.schedule.total_rounds != cfg.rounds)
        throw ConfigError("federation: progressive schedule total_rounds must equal rounds");
    if (cfg.adjustment_temperature < 0.0)
        throw ConfigError("federation: adjustment_temperature must be >= 0");
    rho_at(cfg.strategy.schedule, 1);  // surfaces bad schedule parameters early
}

ParamVector local_train(const Model& model, const ParamVector& global,
                        const ClientDataset& client, int t, const FederationConfig& cfg) {
    const Dataset& shard = client.data;
    if (shard.size() == 0) throw ConfigError("local_train: empty client shard");

    const LogitAdjustment adj = client_adjustment(client, cfg);
    const bool salt = cfg.strategy.local_optimizer == LocalOptimizer::salt;
    const double rho = salt ? rho_at(cfg.strategy.schedule, t) : 0.0;

    // Shuffle stream fixed by (master_seed, client, round): execution order
    // across clients can never leak into the sample order.
    std::mt19937_64 rng(seed_stream(cfg.master_seed,
                                    static_cast<std::uint64_t>(client.client_id),
                                    static_cast<std::uint64_t>(t)));

    const std::size_t n = shard.size();
    const std::size_t d = static_cast<std::size_t>(shard.feature_dim);
    const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::vector<double> feat_buf(std::min(bs, n) * d);
    std::vector<int> label_buf(std::min(bs, n));

    ParamVector theta = global;
    for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t count = std::min(bs, n - start);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t src = order[start + i];
                std::copy_n(shard.features.data() + src * d, d, feat_buf.data() + i * d);
                label_buf[i] = shard.labels[src];
            }
            DataBatch batch{{feat_buf.data(), count * d}, {label_buf.data(), count}};
            theta = salt ? salt_step(model, theta, batch, cfg.learning_rate, rho, adj,
                                     cfg.strategy.gsam_alpha)
                         : model.sgd_step(theta, batch, cfg.learning_rate, adj);
        }
    }
    return theta;
}

namespace {

struct RoundContext {
    const Model& model;
    const std::vector<ClientDataset>& clients;
    const FederationConfig& cfg;
    std::vector<ParamVector>& locals;
    std::vector<ClientStats>& stats;
    std::vector<ClientRoundStats>& round_stats;
};

/// Client phase: independent work, results land in indexed slots so
/// scheduling cannot reorder anything.
void client_phase(const RoundContext& ctx, const ParamVector& global, int t, double rho,
                  int workers) {
    const std::size_t k = ctx.clients.size();
    auto client_pass = [&](std::size_t i) {
        const ClientDataset& client = ctx.clients[i];
        ctx.locals[i] = local_train(ctx.model, global, client, t, ctx.cfg);
        const LogitAdjustment adj = client_adjustment(client, ctx.cfg);
        const StateAssessment a =
            client_assessment(ctx.model, ctx.locals[i], client.data, rho, adj, ctx.cfg.batch_size);
        const double n = static_cast<double>(client.data.size());
        ctx.stats[i] = {n, a.sharpness, a.perturbed_loss};
        ctx.round_stats[i] = {n, a.base_loss, a.sharpness, a.perturbed_loss};
    };

    if (workers == 1) {
        for (std::size_t i = 0; i < k; ++i) client_pass(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(k);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < k; i = next.fetch_add(1)) {
                try {
                    client_pass(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (std::size_t i = 0; i < k; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);
}

}  // namespace

RunResult run(const Model& model, const std::vector<ClientDataset>& clients,
              const Dataset& clean_test, const Dataset& corrupted_test,
              const FederationConfig& cfg, int workers, const RoundObserver& observer) {
    validate(cfg);
    if (clients.empty()) throw ConfigError("run: no clients");
    for (const auto& c : clients) {
        if (c.data.feature_dim != model.spec().feature_dim ||
            c.data.num_classes != model.spec().num_classes)
            throw ConfigError("run: client data dimensions do not match the model");
        if (c.data.size() == 0) throw ConfigError("run: empty client shard");
    }
    if (clean_test.feature_dim != model.spec().feature_dim ||
        corrupted_test.feature_dim != model.spec().feature_dim)
        throw ConfigError("run: test set dimensions do not match the model");
    if (workers < 1) workers = 1;
    workers = std::min<int>(workers, static_cast<int>(clients.size()));

    const std::size_t k = clients.size();
    std::vector<Quality> attrs(k);
    for (std::size_t i = 0; i < k; ++i) attrs[i] = clients[i].quality;

    RunResult result;
    result.records.reserve(cfg.rounds);
    ParamVector global = model.init();
    AggregationWeights w_prev;

    std::vector<ParamVector> locals(k);
    std::vector<ClientStats> stats(k);
    std::vector<ClientRoundStats> round_stats(k);
    RoundContext ctx{model, clients, cfg, locals, stats, round_stats};

    for (int t = 1; t <= cfg.rounds; ++t) {
        try {
            const double rho = rho_at(cfg.strategy.schedule, t);
            client_phase(ctx, global, t, rho, workers);

            const AggregationWeights raw = weights_raw(cfg.strategy.agg, stats);
            const AggregationWeights smoothed = smooth(raw, w_prev, cfg.strategy.beta, t);
            global = aggregate(locals, smoothed);
            if (!global.finite()) throw DivergenceError("aggregated model is non-finite");
            w_prev = smoothed;

            RoundRecord rec;
            rec.t = t;
            rec.rho_used = rho;
            rec.clients = round_stats;
            rec.weights_raw = raw;
            rec.weights_smoothed = smoothed;
            if (t % cfg.eval_every == 0 || t == cfg.rounds)
                rec.eval = evaluate(model, global, clean_test, corrupted_test, attrs,
                                    LogitAdjustment::disabled());
            result.records.push_back(std::move(rec));
            if (observer) observer(t, global);
        } catch (const DivergenceError& e) {
            if (e.round() >= 0) throw;
            throw DivergenceError(e.what(), t);
        }
    }
    result.final_params = std::move(global);
    return result;
}

}  // namespace fedism
