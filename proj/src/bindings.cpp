#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fedism/report.hpp"
#include "fedism/runner.hpp"

namespace py = pybind11;
using namespace fedism;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Federated learning simulator with sharpness-aware local training "
              "and sharpness-weighted aggregation";
    m.attr("__version__") = "0.1.0";
    m.attr("GRAD_NORM_EPS") = kGradNormEps;

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<PartitionError>(m, "PartitionError");
    py::register_exception<DivergenceError>(m, "DivergenceError");
    py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError");

    py::enum_<Arch>(m, "Arch")
        .value("softmax_linear", Arch::softmax_linear)
        .value("mlp1", Arch::mlp1);
    py::enum_<CorruptionKind>(m, "CorruptionKind")
        .value("additive_gaussian", CorruptionKind::additive_gaussian)
        .value("smoothing", CorruptionKind::smoothing);
    py::enum_<Quality>(m, "Quality")
        .value("clean", Quality::clean)
        .value("corrupted", Quality::corrupted);
    py::enum_<LocalOptimizer>(m, "LocalOptimizer")
        .value("gd", LocalOptimizer::gd)
        .value("salt", LocalOptimizer::salt);
    py::enum_<ScheduleKind>(m, "ScheduleKind")
        .value("constant", ScheduleKind::constant)
        .value("progressive", ScheduleKind::progressive);
    py::enum_<AggKind>(m, "AggKind")
        .value("size", AggKind::size)
        .value("sharpness_q", AggKind::sharpness_q)
        .value("perturbed_loss_q", AggKind::perturbed_loss_q);

    py::class_<DatasetSpec>(m, "DatasetSpec")
        .def(py::init<>())
        .def_readwrite("num_classes", &DatasetSpec::num_classes)
        .def_readwrite("feature_dim", &DatasetSpec::feature_dim)
        .def_readwrite("samples_per_class", &DatasetSpec::samples_per_class)
        .def_readwrite("class_separation", &DatasetSpec::class_separation)
        .def_readwrite("seed", &DatasetSpec::seed);

    py::class_<CorruptionSpec>(m, "CorruptionSpec")
        .def(py::init<>())
        .def_readwrite("kind", &CorruptionSpec::kind)
        .def_readwrite("severity", &CorruptionSpec::severity)
        .def_readwrite("seed", &CorruptionSpec::seed);

    py::class_<PartitionSpec>(m, "PartitionSpec")
        .def(py::init<>())
        .def_readwrite("num_clients", &PartitionSpec::num_clients)
        .def_readwrite("dirichlet_alpha", &PartitionSpec::dirichlet_alpha)
        .def_readwrite("corrupted_client_count", &PartitionSpec::corrupted_client_count)
        .def_readwrite("corruption", &PartitionSpec::corruption)
        .def_readwrite("seed", &PartitionSpec::seed);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("feature_dim", &Dataset::feature_dim)
        .def_readwrite("num_classes", &Dataset::num_classes)
        .def_readwrite("features", &Dataset::features)
        .def_readwrite("labels", &Dataset::labels)
        .def("__len__", &Dataset::size);

    py::class_<ClientDataset>(m, "ClientDataset")
        .def(py::init<>())
        .def_readwrite("client_id", &ClientDataset::client_id)
        .def_readwrite("data", &ClientDataset::data)
        .def_readwrite("quality", &ClientDataset::quality);

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<>())
        .def_readwrite("arch", &ModelSpec::arch)
        .def_readwrite("feature_dim", &ModelSpec::feature_dim)
        .def_readwrite("num_classes", &ModelSpec::num_classes)
        .def_readwrite("hidden_units", &ModelSpec::hidden_units)
        .def_readwrite("init_seed", &ModelSpec::init_seed)
        .def_readwrite("init_scale", &ModelSpec::init_scale);

    py::class_<ParamLayout>(m, "ParamLayout")
        .def(py::init<>())
        .def_readwrite("shapes", &ParamLayout::shapes)
        .def("total", &ParamLayout::total)
        .def(py::self == py::self);

    py::class_<ParamVector>(m, "ParamVector")
        .def(py::init<>())
        .def_readwrite("layout", &ParamVector::layout)
        .def_readwrite("values", &ParamVector::values)
        .def("finite", &ParamVector::finite)
        .def("__len__", &ParamVector::size);

    py::class_<LogitAdjustment>(m, "LogitAdjustment")
        .def(py::init<>())
        .def_readwrite("enabled", &LogitAdjustment::enabled)
        .def_readwrite("class_prior", &LogitAdjustment::class_prior)
        .def_readwrite("temperature", &LogitAdjustment::temperature)
        .def_static("disabled", &LogitAdjustment::disabled)
        .def_static(
            "from_label_counts",
            [](const std::vector<int>& labels, int num_classes, double temperature) {
                return LogitAdjustment::from_label_counts(labels, num_classes, temperature);
            },
            py::arg("labels"), py::arg("num_classes"), py::arg("temperature") = 1.0);

    py::class_<StateAssessment>(m, "StateAssessment")
        .def(py::init<>())
        .def_readwrite("rho", &StateAssessment::rho)
        .def_readwrite("sharpness", &StateAssessment::sharpness)
        .def_readwrite("perturbed_loss", &StateAssessment::perturbed_loss)
        .def_readwrite("base_loss", &StateAssessment::base_loss);

    py::class_<RhoSchedule>(m, "RhoSchedule")
        .def(py::init<>())
        .def_readwrite("kind", &RhoSchedule::kind)
        .def_readwrite("rho_fixed", &RhoSchedule::rho_fixed)
        .def_readwrite("rho_max", &RhoSchedule::rho_max)
        .def_readwrite("tau", &RhoSchedule::tau)
        .def_readwrite("total_rounds", &RhoSchedule::total_rounds);

    py::class_<AggRule>(m, "AggRule")
        .def(py::init<>())
        .def_readwrite("kind", &AggRule::kind)
        .def_readwrite("q", &AggRule::q)
        .def_readwrite("weight_floor", &AggRule::weight_floor);

    py::class_<ClientStats>(m, "ClientStats")
        .def(py::init<>())
        .def_readwrite("n", &ClientStats::n)
        .def_readwrite("sharpness", &ClientStats::sharpness)
        .def_readwrite("perturbed_loss", &ClientStats::perturbed_loss);

    py::class_<StrategyConfig>(m, "StrategyConfig")
        .def(py::init<>())
        .def_readwrite("local_optimizer", &StrategyConfig::local_optimizer)
        .def_readwrite("schedule", &StrategyConfig::schedule)
        .def_readwrite("agg", &StrategyConfig::agg)
        .def_readwrite("beta", &StrategyConfig::beta)
        .def_readwrite("gsam_alpha", &StrategyConfig::gsam_alpha);

    py::class_<FederationConfig>(m, "FederationConfig")
        .def(py::init<>())
        .def_readwrite("rounds", &FederationConfig::rounds)
        .def_readwrite("local_epochs", &FederationConfig::local_epochs)
        .def_readwrite("batch_size", &FederationConfig::batch_size)
        .def_readwrite("learning_rate", &FederationConfig::learning_rate)
        .def_readwrite("strategy", &FederationConfig::strategy)
        .def_readwrite("eval_every", &FederationConfig::eval_every)
        .def_readwrite("master_seed", &FederationConfig::master_seed)
        .def_readwrite("logit_adjustment", &FederationConfig::logit_adjustment)
        .def_readwrite("adjustment_temperature", &FederationConfig::adjustment_temperature);

    py::class_<EvalReport>(m, "EvalReport")
        .def(py::init<>())
        .def_readwrite("acc_clean", &EvalReport::acc_clean)
        .def_readwrite("auc_clean", &EvalReport::auc_clean)
        .def_readwrite("acc_corrupted", &EvalReport::acc_corrupted)
        .def_readwrite("auc_corrupted", &EvalReport::auc_corrupted)
        .def_readwrite("acc_avg", &EvalReport::acc_avg)
        .def_readwrite("auc_avg", &EvalReport::auc_avg)
        .def_readwrite("per_client_acc", &EvalReport::per_client_acc)
        .def_readwrite("per_client_auc", &EvalReport::per_client_auc)
        .def_readwrite("client_std_acc", &EvalReport::client_std_acc)
        .def_readwrite("client_std_auc", &EvalReport::client_std_auc);

    py::class_<ClientRoundStats>(m, "ClientRoundStats")
        .def(py::init<>())
        .def_readwrite("n", &ClientRoundStats::n)
        .def_readwrite("base_loss", &ClientRoundStats::base_loss)
        .def_readwrite("sharpness", &ClientRoundStats::sharpness)
        .def_readwrite("perturbed_loss", &ClientRoundStats::perturbed_loss);

    py::class_<RoundRecord>(m, "RoundRecord")
        .def(py::init<>())
        .def_readwrite("t", &RoundRecord::t)
        .def_readwrite("rho_used", &RoundRecord::rho_used)
        .def_readwrite("clients", &RoundRecord::clients)
        .def_readwrite("weights_raw", &RoundRecord::weights_raw)
        .def_readwrite("weights_smoothed", &RoundRecord::weights_smoothed)
        .def_readwrite("eval", &RoundRecord::eval);

    py::class_<RunResult>(m, "RunResult")
        .def(py::init<>())
        .def_readwrite("final_params", &RunResult::final_params)
        .def_readwrite("records", &RunResult::records);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("half_width", &GridSpec::half_width)
        .def_readwrite("points_per_axis", &GridSpec::points_per_axis);

    py::class_<DataSource>(m, "DataSource")
        .def(py::init<>())
        .def_readwrite("generate", &DataSource::generate)
        .def_readwrite("test_samples_per_class", &DataSource::test_samples_per_class)
        .def_readwrite("train_csv", &DataSource::train_csv)
        .def_readwrite("test_csv", &DataSource::test_csv);

    py::class_<NamedStrategy>(m, "NamedStrategy")
        .def(py::init<>())
        .def_readwrite("name", &NamedStrategy::name)
        .def_readwrite("config", &NamedStrategy::config);

    py::class_<RunSpec>(m, "RunSpec")
        .def(py::init<>())
        .def_readwrite("dataset", &RunSpec::dataset)
        .def_readwrite("partition", &RunSpec::partition)
        .def_readwrite("model", &RunSpec::model)
        .def_readwrite("federation", &RunSpec::federation)
        .def_readwrite("strategies", &RunSpec::strategies)
        .def_readwrite("seeds", &RunSpec::seeds)
        .def_readwrite("output_dir", &RunSpec::output_dir)
        .def_readwrite("summary_window", &RunSpec::summary_window);

    py::class_<Model>(m, "Model")
        .def(py::init<ModelSpec>())
        .def_property_readonly("spec", &Model::spec)
        .def_property_readonly("layout", &Model::layout)
        .def("init", &Model::init)
        .def("forward",
             [](const Model& model, const ParamVector& theta, const Dataset& data) {
                 return model.forward(theta, full_batch(data));
             })
        .def(
            "loss",
            [](const Model& model, const ParamVector& theta, const Dataset& data,
               const LogitAdjustment& adj) { return model.loss(theta, full_batch(data), adj); },
            py::arg("theta"), py::arg("data"),
            py::arg("adjustment") = LogitAdjustment::disabled())
        .def(
            "grad",
            [](const Model& model, const ParamVector& theta, const Dataset& data,
               const LogitAdjustment& adj) { return model.grad(theta, full_batch(data), adj); },
            py::arg("theta"), py::arg("data"),
            py::arg("adjustment") = LogitAdjustment::disabled())
        .def(
            "sgd_step",
            [](const Model& model, const ParamVector& theta, const Dataset& data, double lr,
               const LogitAdjustment& adj) {
                return model.sgd_step(theta, full_batch(data), lr, adj);
            },
            py::arg("theta"), py::arg("data"), py::arg("learning_rate"),
            py::arg("adjustment") = LogitAdjustment::disabled());

    m.def("generate", &generate, py::arg("spec"));
    m.def("partition", &partition, py::arg("dataset"), py::arg("spec"));
    m.def("corrupt", &corrupt, py::arg("features"), py::arg("feature_dim"), py::arg("spec"));
    m.def("make_test_pair", &make_test_pair, py::arg("test"), py::arg("corruption"));
    m.def("load_csv", &load_csv, py::arg("path"));
    m.def("save_csv", &save_csv, py::arg("dataset"), py::arg("path"));
    m.def("seed_stream", &seed_stream, py::arg("seed"), py::arg("a"), py::arg("b") = 0,
          py::arg("c") = 0);

    m.def("add_scaled", &add_scaled, py::arg("y"), py::arg("a"), py::arg("x"));
    m.def("norm2", &norm2, py::arg("v"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("params"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"), py::arg("layout"));

    m.def("optimal_perturbation", &optimal_perturbation, py::arg("grad"), py::arg("rho"));
    m.def(
        "assess",
        [](const Model& model, const ParamVector& theta, const Dataset& data, double rho,
           const LogitAdjustment& adj) { return assess(model, theta, full_batch(data), rho, adj); },
        py::arg("model"), py::arg("theta"), py::arg("data"), py::arg("rho"),
        py::arg("adjustment") = LogitAdjustment::disabled());
    m.def(
        "salt_step",
        [](const Model& model, const ParamVector& theta, const Dataset& data, double lr,
           double rho, const LogitAdjustment& adj, double gsam_alpha) {
            return salt_step(model, theta, full_batch(data), lr, rho, adj, gsam_alpha);
        },
        py::arg("model"), py::arg("theta"), py::arg("data"), py::arg("learning_rate"),
        py::arg("rho"), py::arg("adjustment") = LogitAdjustment::disabled(),
        py::arg("gsam_alpha") = 0.0);
    m.def("client_assessment", &client_assessment, py::arg("model"), py::arg("theta"),
          py::arg("shard"), py::arg("rho"), py::arg("adjustment"), py::arg("batch_size"));

    m.def("rho_at", &rho_at, py::arg("schedule"), py::arg("t"));
    m.def("weights_raw", &weights_raw, py::arg("rule"), py::arg("stats"));
    m.def("smooth", &smooth, py::arg("w_raw"), py::arg("w_prev"), py::arg("beta"), py::arg("t"));
    m.def("aggregate", &aggregate, py::arg("locals"), py::arg("weights"));
    m.def("strategy_preset", &strategy_preset, py::arg("name"));
    m.def("strategy_preset_names", &strategy_preset_names);

    m.def(
        "accuracy",
        [](const Model& model, const ParamVector& theta, const Dataset& test,
           const LogitAdjustment& adj) { return accuracy(model, theta, test, adj); },
        py::arg("model"), py::arg("theta"), py::arg("test"),
        py::arg("adjustment") = LogitAdjustment::disabled());
    m.def(
        "rank_auc",
        [](const std::vector<double>& scores, const std::vector<int>& positive) {
            return rank_auc(scores, positive);
        },
        py::arg("scores"), py::arg("positive"));
    m.def("macro_auc", &macro_auc, py::arg("model"), py::arg("theta"), py::arg("test"));
    m.def(
        "evaluate",
        [](const Model& model, const ParamVector& theta, const Dataset& clean_test,
           const Dataset& corrupted_test, const std::vector<Quality>& client_attributes,
           const LogitAdjustment& adj) {
            return evaluate(model, theta, clean_test, corrupted_test, client_attributes, adj);
        },
        py::arg("model"), py::arg("theta"), py::arg("clean_test"), py::arg("corrupted_test"),
        py::arg("client_attributes"), py::arg("adjustment") = LogitAdjustment::disabled());
    m.def("landscape_slice", &landscape_slice, py::arg("model"), py::arg("theta"),
          py::arg("test"), py::arg("d1"), py::arg("d2"), py::arg("grid") = GridSpec{});
    m.def("random_directions", &random_directions, py::arg("layout"), py::arg("seed"));

    m.def("local_train", &local_train, py::arg("model"), py::arg("global_params"),
          py::arg("client"), py::arg("t"), py::arg("config"));
    m.def("validate", &validate, py::arg("config"));
    m.def(
        "run",
        [](const Model& model, const std::vector<ClientDataset>& clients,
           const Dataset& clean_test, const Dataset& corrupted_test,
           const FederationConfig& cfg, int workers) {
            return run(model, clients, clean_test, corrupted_test, cfg, workers);
        },
        py::arg("model"), py::arg("clients"), py::arg("clean_test"), py::arg("corrupted_test"),
        py::arg("config"), py::arg("workers") = 1);

    m.def("eval_series", &eval_series, py::arg("records"));
    m.def("write_rounds", &write_rounds, py::arg("records"), py::arg("path"));
    m.def("read_rounds", &read_rounds, py::arg("path"));
    m.def("write_eval", &write_eval, py::arg("reports"), py::arg("path"));
    m.def("read_eval", &read_eval, py::arg("path"));
    m.def("format_double", &format_double, py::arg("v"));
    m.def("parse_double", &parse_double, py::arg("s"));

    m.def("parse_config", &parse_config, py::arg("path"));
    m.def("parse_config_text", &parse_config_text, py::arg("text"));
    m.def("config_echo", &config_echo, py::arg("spec"));
    m.def("run_matrix", &run_matrix, py::arg("spec"), py::arg("workers") = 1);
    m.def("compare", &compare, py::arg("summaries"));
}
