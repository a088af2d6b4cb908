#include <cmath>
#include <random>

#include "doctest.h"
#include "fedism/engine.hpp"

using namespace fedism;

namespace {

Dataset random_dataset(int n, int dim, int classes, std::uint64_t seed) {
    Dataset d;
    d.feature_dim = dim;
    d.num_classes = classes;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, classes - 1);
    for (int i = 0; i < n; ++i) {
        for (int e = 0; e < dim; ++e) d.features.push_back(unit(rng));
        d.labels.push_back(label(rng));
    }
    return d;
}

std::vector<ClientDataset> make_clients(int k, int per_client, std::uint64_t seed) {
    std::vector<ClientDataset> clients(k);
    for (int i = 0; i < k; ++i) {
        clients[i].client_id = i;
        clients[i].data = random_dataset(per_client, 3, 2, seed + i);
        clients[i].quality = i == 0 ? Quality::corrupted : Quality::clean;
    }
    return clients;
}

FederationConfig base_config(int rounds, std::string_view preset) {
    FederationConfig cfg;
    cfg.rounds = rounds;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.strategy = strategy_preset(preset);
    cfg.strategy.schedule.total_rounds = rounds;
    cfg.eval_every = 10;
    cfg.master_seed = 42;
    return cfg;
}

bool same_records(const std::vector<RoundRecord>& a, const std::vector<RoundRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].t != b[t].t || a[t].rho_used != b[t].rho_used) return false;
        if (a[t].weights_raw != b[t].weights_raw) return false;
        if (a[t].weights_smoothed != b[t].weights_smoothed) return false;
        if (a[t].clients.size() != b[t].clients.size()) return false;
        for (std::size_t i = 0; i < a[t].clients.size(); ++i) {
            const auto& x = a[t].clients[i];
            const auto& y = b[t].clients[i];
            if (x.n != y.n || x.base_loss != y.base_loss || x.sharpness != y.sharpness ||
                x.perturbed_loss != y.perturbed_loss)
                return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("config validation") {
    auto cfg = base_config(10, "fedavg");
    CHECK_NOTHROW(validate(cfg));

    auto bad = cfg;
    bad.rounds = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.local_epochs = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.eval_every = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.strategy.beta = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.strategy.beta = 1.25;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = cfg;
    bad.strategy.gsam_alpha = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = base_config(10, "fedism_plus_s");
    bad.strategy.schedule.total_rounds = 99;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = base_config(10, "fedism_plus_s");
    bad.strategy.schedule.tau = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("local_train basics") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 3, 0.1});
    const ParamVector global = m.init();
    ClientDataset client;
    client.client_id = 4;
    client.data = random_dataset(20, 3, 2, 9);

    SUBCASE("zero learning rate is the identity") {
        auto cfg = base_config(5, "fedavg");
        cfg.learning_rate = 0.0;
        CHECK(local_train(m, global, client, 1, cfg).values == global.values);
    }
    SUBCASE("deterministic given identical inputs") {
        const auto cfg = base_config(5, "fedism_plus_s");
        const ParamVector a = local_train(m, global, client, 3, cfg);
        const ParamVector b = local_train(m, global, client, 3, cfg);
        CHECK(a.values == b.values);

        ClientDataset twin = client;
        CHECK(local_train(m, global, twin, 3, cfg).values == a.values);
    }
    SUBCASE("training reduces the shard loss") {
        auto cfg = base_config(5, "fedavg");
        cfg.local_epochs = 5;
        const auto adj = LogitAdjustment::from_label_counts(client.data.labels, 2);
        const ParamVector after = local_train(m, global, client, 1, cfg);
        CHECK(m.loss(after, full_batch(client.data), adj) <
              m.loss(global, full_batch(client.data), adj));
    }
    SUBCASE("empty shard rejected") {
        ClientDataset empty;
        empty.data.feature_dim = 3;
        empty.data.num_classes = 2;
        CHECK_THROWS_AS(local_train(m, global, empty, 1, base_config(5, "fedavg")), ConfigError);
    }
}

TEST_CASE("single client single round equals plain local training") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 7, 0.1});
    const auto clients = make_clients(1, 24, 100);
    const Dataset test = random_dataset(30, 3, 2, 200);
    const auto cfg = base_config(1, "fedavg");

    const RunResult res = run(m, clients, test, test, cfg);
    const ParamVector manual = local_train(m, m.init(), clients[0], 1, cfg);
    CHECK(res.final_params.values == manual.values);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].weights_raw == AggregationWeights{1.0});
    CHECK(res.records[0].eval.has_value());
}

TEST_CASE("zeroed fedism_plus_s with size weights collapses to fedavg") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 11, 0.1});
    const auto clients = make_clients(3, 16, 300);
    const Dataset test = random_dataset(30, 3, 2, 400);

    const auto fedavg = base_config(5, "fedavg");
    auto zeroed = base_config(5, "fedism_plus_s");
    zeroed.strategy.schedule.rho_max = 0.0;
    zeroed.strategy.agg.kind = AggKind::size;

    const RunResult a = run(m, clients, test, test, fedavg);
    const RunResult b = run(m, clients, test, test, zeroed);
    CHECK(a.final_params.values == b.final_params.values);
    for (std::size_t t = 0; t < 5; ++t)
        CHECK(a.records[t].weights_smoothed == b.records[t].weights_smoothed);
}

TEST_CASE("worker count never changes results") {
    const Model m({Arch::mlp1, 3, 2, 4, 13, 0.2});
    const auto clients = make_clients(5, 20, 500);
    const Dataset test = random_dataset(40, 3, 2, 600);
    const auto cfg = base_config(6, "fedism_plus_s");

    const RunResult serial = run(m, clients, test, test, cfg, 1);
    const RunResult parallel = run(m, clients, test, test, cfg, 4);
    const RunResult oversubscribed = run(m, clients, test, test, cfg, 64);
    CHECK(serial.final_params.values == parallel.final_params.values);
    CHECK(serial.final_params.values == oversubscribed.final_params.values);
    CHECK(same_records(serial.records, parallel.records));
    CHECK(same_records(serial.records, oversubscribed.records));
}

TEST_CASE("smoothed weights replay from raw weights") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 17, 0.1});
    const auto clients = make_clients(4, 16, 700);
    const Dataset test = random_dataset(30, 3, 2, 800);
    const auto cfg = base_config(8, "fedism_plus_l");

    const RunResult res = run(m, clients, test, test, cfg);
    AggregationWeights prev;
    for (const auto& rec : res.records) {
        const auto replayed = smooth(rec.weights_raw, prev, cfg.strategy.beta, rec.t);
        CHECK(replayed == rec.weights_smoothed);
        prev = rec.weights_smoothed;
    }
}

TEST_CASE("progressive rho trace is monotone and recorded") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 19, 0.1});
    const auto clients = make_clients(3, 12, 900);
    const Dataset test = random_dataset(20, 3, 2, 1000);
    const auto cfg = base_config(7, "fedism_plus_s");

    const RunResult res = run(m, clients, test, test, cfg);
    REQUIRE(res.records.size() == 7);
    for (std::size_t t = 0; t < 7; ++t) {
        CHECK(res.records[t].rho_used == rho_at(cfg.strategy.schedule, static_cast<int>(t) + 1));
        if (t > 0) CHECK(res.records[t].rho_used >= res.records[t - 1].rho_used);
    }
    CHECK(res.records[6].rho_used == cfg.strategy.schedule.rho_max);
}

TEST_CASE("assessments always use the scheduled rho") {
    // gd optimizer: local steps ignore rho, yet the recorded assessments must
    // still probe at rho(t) and so report nonzero sharpness.
    const Model m({Arch::softmax_linear, 3, 2, 0, 23, 0.1});
    const auto clients = make_clients(3, 16, 1100);
    const Dataset test = random_dataset(20, 3, 2, 1200);
    auto cfg = base_config(6, "fedavg");
    cfg.strategy.schedule = {ScheduleKind::progressive, 0.0, 0.1, 0.5, 6};

    const RunResult res = run(m, clients, test, test, cfg);
    double total_sharp = 0.0;
    for (const auto& rec : res.records) {
        CHECK(rec.rho_used > 0.0);
        for (const auto& c : rec.clients) total_sharp += std::abs(c.sharpness);
    }
    CHECK(total_sharp > 0.0);
}

TEST_CASE("eval cadence") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 29, 0.1});
    const auto clients = make_clients(2, 12, 1300);
    const Dataset test = random_dataset(20, 3, 2, 1400);
    auto cfg = base_config(7, "fedavg");
    cfg.eval_every = 3;

    const RunResult res = run(m, clients, test, test, cfg);
    REQUIRE(res.records.size() == 7);
    for (int t = 1; t <= 7; ++t)
        CHECK(res.records[t - 1].eval.has_value() == (t % 3 == 0 || t == 7));
}

TEST_CASE("divergence reports the failing round") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 31, 0.1});
    auto clients = make_clients(2, 12, 1500);
    clients[1].data.features[0] = std::numeric_limits<double>::infinity();
    const Dataset test = random_dataset(20, 3, 2, 1600);

    try {
        run(m, clients, test, test, base_config(5, "fedavg"));
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.round() == 1);
        CHECK(std::string(e.what()).find("round 1") != std::string::npos);
    }
}

TEST_CASE("run input validation") {
    const Model m({Arch::softmax_linear, 3, 2, 0, 37, 0.1});
    const Dataset test = random_dataset(20, 3, 2, 1700);
    const auto cfg = base_config(3, "fedavg");

    CHECK_THROWS_AS(run(m, {}, test, test, cfg), ConfigError);

    auto clients = make_clients(2, 12, 1800);
    clients[0].data.feature_dim = 4;
    CHECK_THROWS_AS(run(m, clients, test, test, cfg), ConfigError);

    clients = make_clients(2, 12, 1800);
    const Dataset wrong = random_dataset(20, 4, 2, 1900);
    CHECK_THROWS_AS(run(m, clients, wrong, test, cfg), ConfigError);
}
