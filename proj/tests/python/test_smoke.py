import json
import math

import pytest

import fedism


def small_setup(seed=0):
    dspec = fedism.DatasetSpec()
    dspec.num_classes = 2
    dspec.feature_dim = 3
    dspec.samples_per_class = 30
    dspec.seed = seed

    part = fedism.PartitionSpec()
    part.num_clients = 3
    part.corrupted_client_count = 1
    part.corruption.severity = 1.0
    part.seed = seed

    train = fedism.generate(dspec)
    clients = fedism.partition(train, part)
    clean_test, corrupted_test = fedism.make_test_pair(train, part.corruption)

    mspec = fedism.ModelSpec()
    mspec.feature_dim = 3
    mspec.num_classes = 2
    mspec.init_seed = seed
    return fedism.Model(mspec), clients, clean_test, corrupted_test


def test_generate_and_partition_shapes():
    _, clients, clean_test, _ = small_setup()
    assert len(clients) == 3
    assert sum(len(c.data) for c in clients) == len(clean_test) == 60
    assert sum(c.quality == fedism.Quality.corrupted for c in clients) == 1
    for c in clients:
        assert len(c.data.features) == len(c.data) * 3


def test_gradient_descends_and_matches_loss():
    model, clients, _, _ = small_setup()
    shard = clients[0].data
    theta = model.init()
    g = model.grad(theta, shard)
    assert len(g) == len(theta)
    before = model.loss(theta, shard)
    after = model.loss(model.sgd_step(theta, shard, 0.1), shard)
    assert after < before
    assert math.isfinite(fedism.norm2(g))


def test_assessment_identities():
    model, clients, _, _ = small_setup()
    shard = clients[0].data
    theta = model.init()
    at_zero = fedism.assess(model, theta, shard, 0.0)
    assert at_zero.sharpness == 0.0
    assert at_zero.perturbed_loss == at_zero.base_loss
    away = fedism.client_assessment(model, theta, shard, 0.05,
                                    fedism.LogitAdjustment.disabled(), 16)
    assert away.perturbed_loss == pytest.approx(away.base_loss + away.sharpness)


def test_schedule_and_weights():
    sch = fedism.RhoSchedule()
    sch.kind = fedism.ScheduleKind.progressive
    sch.rho_max = 0.1
    sch.tau = 0.5
    sch.total_rounds = 100
    assert fedism.rho_at(sch, 100) == 0.1
    assert fedism.rho_at(sch, 25) == 0.05

    rule = fedism.AggRule()
    rule.kind = fedism.AggKind.sharpness_q
    stats = []
    for s in (0.2, 0.4, 0.8):
        cs = fedism.ClientStats()
        cs.n, cs.sharpness, cs.perturbed_loss = 10.0, s, s + 1.0
        stats.append(cs)
    w = fedism.weights_raw(rule, stats)
    assert sum(w) == pytest.approx(1.0, abs=1e-12)
    assert w[2] > w[1] > w[0] >= 0.0


def test_presets():
    names = fedism.strategy_preset_names()
    assert "fedavg" in names and "fedism_plus_s" in names
    avg = fedism.strategy_preset("fedavg")
    assert avg.local_optimizer == fedism.LocalOptimizer.gd
    assert avg.agg.kind == fedism.AggKind.size
    with pytest.raises(fedism.ConfigError):
        fedism.strategy_preset("fedprox")


def test_run_records_and_eval():
    model, clients, clean_test, corrupted_test = small_setup()
    cfg = fedism.FederationConfig()
    cfg.rounds = 4
    cfg.batch_size = 16
    cfg.learning_rate = 0.05
    cfg.eval_every = 2
    cfg.strategy = fedism.strategy_preset("fedism_plus_s")
    cfg.strategy.schedule.total_rounds = cfg.rounds

    result = fedism.run(model, clients, clean_test, corrupted_test, cfg, workers=2)
    assert len(result.records) == 4
    assert result.final_params.finite()
    assert result.records[0].eval is None
    final_eval = result.records[-1].eval
    assert final_eval is not None
    assert 0.0 <= final_eval.acc_avg <= 1.0
    assert sum(result.records[-1].weights_smoothed) == pytest.approx(1.0, abs=1e-12)


def test_config_matrix_and_compare(tmp_path):
    config = {
        "dataset": {"generate": {"num_classes": 2, "feature_dim": 3,
                                 "samples_per_class": 20}},
        "partition": {"num_clients": 2, "corrupted_client_count": 1,
                      "corruption": {"severity": 1.0}},
        "federation": {"rounds": 3, "batch_size": 16, "learning_rate": 0.05},
        "strategies": [{"preset": "fedavg"}, {"preset": "fedism_plus_s"}],
        "seeds": [1],
    }
    spec = fedism.parse_config_text(json.dumps(config))
    spec.output_dir = str(tmp_path / "out")
    fedism.run_matrix(spec, workers=2)
    summary = tmp_path / "out" / "summary.csv"
    assert summary.exists()
    assert (tmp_path / "out" / "fedavg_seed1" / "rounds.csv").exists()

    table = fedism.compare([str(summary), str(summary)])
    assert "fedism_plus_s" in table and "d_acc_corr" in table

    echoed = fedism.config_echo(spec)
    assert fedism.config_echo(fedism.parse_config_text(echoed)) == echoed


def test_strict_config_errors():
    with pytest.raises(fedism.ConfigError, match="learning_rte"):
        fedism.parse_config_text(json.dumps({
            "federation": {"learning_rte": 0.1},
            "strategies": [{"preset": "fedavg"}],
        }))
