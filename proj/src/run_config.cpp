#include "fedism/run_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

namespace fedism {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
    }
}

std::string join(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
    return v.get<int>();
}

double get_real(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), "expected a number");
    return v.get<double>();
}

std::uint64_t get_seed(const json& obj, const std::string& path, const char* key,
                       std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        fail(join(path, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), "expected a boolean");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& path, const char* key) {
    const json& v = obj.at(key);
    if (!v.is_string()) fail(join(path, key), "expected a string");
    return v.get<std::string>();
}

CorruptionKind parse_corruption_kind(const std::string& s, const std::string& path) {
    if (s == "additive_gaussian") return CorruptionKind::additive_gaussian;
    if (s == "smoothing") return CorruptionKind::smoothing;
    fail(path, "unknown corruption kind '" + s + "'");
}

Arch parse_arch(const std::string& s, const std::string& path) {
    if (s == "softmax_linear") return Arch::softmax_linear;
    if (s == "mlp1") return Arch::mlp1;
    fail(path, "unknown arch '" + s + "'");
}

DataSource parse_dataset(const json& obj, const std::string& path) {
    check_keys(obj, path, {"generate", "test_samples_per_class", "train_csv", "test_csv"});
    DataSource src;
    if (obj.contains("generate")) {
        const json& g = obj.at("generate");
        const std::string gp = join(path, "generate");
        check_keys(g, gp,
                   {"num_classes", "feature_dim", "samples_per_class", "class_separation", "seed"});
        DatasetSpec spec;
        spec.num_classes = get_int(g, gp, "num_classes", spec.num_classes);
        spec.feature_dim = get_int(g, gp, "feature_dim", spec.feature_dim);
        spec.samples_per_class = get_int(g, gp, "samples_per_class", spec.samples_per_class);
        spec.class_separation = get_real(g, gp, "class_separation", spec.class_separation);
        spec.seed = get_seed(g, gp, "seed", spec.seed);
        src.generate = spec;
    }
    src.test_samples_per_class = get_int(obj, path, "test_samples_per_class", 0);
    if (obj.contains("train_csv")) src.train_csv = get_string(obj, path, "train_csv");
    if (obj.contains("test_csv")) src.test_csv = get_string(obj, path, "test_csv");
    if (src.generate && (src.train_csv || src.test_csv))
        fail(path, "choose either generate or csv files, not both");
    if (!src.generate) {
        if (!src.train_csv || !src.test_csv)
            fail(path, "csv mode needs both train_csv and test_csv");
    }
    return src;
}

PartitionSpec parse_partition(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"num_clients", "dirichlet_alpha", "corrupted_client_count", "corruption", "seed"});
    PartitionSpec part;
    part.num_clients = get_int(obj, path, "num_clients", part.num_clients);
    part.dirichlet_alpha = get_real(obj, path, "dirichlet_alpha", part.dirichlet_alpha);
    part.corrupted_client_count =
        get_int(obj, path, "corrupted_client_count", part.corrupted_client_count);
    part.seed = get_seed(obj, path, "seed", part.seed);
    if (obj.contains("corruption")) {
        const json& c = obj.at("corruption");
        const std::string cp = join(path, "corruption");
        check_keys(c, cp, {"kind", "severity", "seed"});
        if (c.contains("kind"))
            part.corruption.kind = parse_corruption_kind(get_string(c, cp, "kind"), join(cp, "kind"));
        part.corruption.severity = get_real(c, cp, "severity", part.corruption.severity);
        part.corruption.seed = get_seed(c, cp, "seed", part.corruption.seed);
    }
    return part;
}

ModelSpec parse_model(const json& obj, const std::string& path) {
    check_keys(obj, path, {"arch", "hidden_units", "init_seed", "init_scale"});
    ModelSpec spec;
    if (obj.contains("arch")) spec.arch = parse_arch(get_string(obj, path, "arch"), join(path, "arch"));
    spec.hidden_units = get_int(obj, path, "hidden_units", spec.hidden_units);
    spec.init_seed = get_seed(obj, path, "init_seed", spec.init_seed);
    spec.init_scale = get_real(obj, path, "init_scale", spec.init_scale);
    if (spec.arch == Arch::mlp1 && spec.hidden_units < 1)
        fail(join(path, "hidden_units"), "mlp1 needs hidden_units >= 1");
    return spec;
}

FederationConfig parse_federation(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"rounds", "local_epochs", "batch_size", "learning_rate", "eval_every",
                "master_seed", "logit_adjustment", "adjustment_temperature"});
    FederationConfig cfg;
    cfg.rounds = get_int(obj, path, "rounds", cfg.rounds);
    cfg.local_epochs = get_int(obj, path, "local_epochs", cfg.local_epochs);
    cfg.batch_size = get_int(obj, path, "batch_size", cfg.batch_size);
    cfg.learning_rate = get_real(obj, path, "learning_rate", cfg.learning_rate);
    cfg.eval_every = get_int(obj, path, "eval_every", cfg.eval_every);
    cfg.master_seed = get_seed(obj, path, "master_seed", cfg.master_seed);
    cfg.logit_adjustment = get_bool(obj, path, "logit_adjustment", cfg.logit_adjustment);
    cfg.adjustment_temperature =
        get_real(obj, path, "adjustment_temperature", cfg.adjustment_temperature);
    return cfg;
}

NamedStrategy parse_strategy(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"name", "preset", "local_optimizer", "schedule", "aggregation", "beta",
                "gsam_alpha"});
    NamedStrategy out;
    if (obj.contains("preset")) {
        const std::string preset = get_string(obj, path, "preset");
        try {
            out.config = strategy_preset(preset);
        } catch (const ConfigError& e) {
            fail(join(path, "preset"), e.what());
        }
        out.name = preset;
    } else if (!obj.contains("name")) {
        fail(path, "strategy needs a name or a preset");
    }
    if (obj.contains("name")) out.name = get_string(obj, path, "name");

    if (obj.contains("local_optimizer")) {
        const std::string s = get_string(obj, path, "local_optimizer");
        if (s == "gd")
            out.config.local_optimizer = LocalOptimizer::gd;
        else if (s == "salt")
            out.config.local_optimizer = LocalOptimizer::salt;
        else
            fail(join(path, "local_optimizer"), "unknown optimizer '" + s + "'");
    }
    if (obj.contains("schedule")) {
        const json& s = obj.at("schedule");
        const std::string sp = join(path, "schedule");
        check_keys(s, sp, {"kind", "rho_fixed", "rho_max", "tau"});
        if (s.contains("kind")) {
            const std::string kind = get_string(s, sp, "kind");
            if (kind == "constant")
                out.config.schedule.kind = ScheduleKind::constant;
            else if (kind == "progressive")
                out.config.schedule.kind = ScheduleKind::progressive;
            else
                fail(join(sp, "kind"), "unknown schedule kind '" + kind + "'");
        }
        out.config.schedule.rho_fixed = get_real(s, sp, "rho_fixed", out.config.schedule.rho_fixed);
        out.config.schedule.rho_max = get_real(s, sp, "rho_max", out.config.schedule.rho_max);
        out.config.schedule.tau = get_real(s, sp, "tau", out.config.schedule.tau);
    }
    if (obj.contains("aggregation")) {
        const json& a = obj.at("aggregation");
        const std::string ap = join(path, "aggregation");
        check_keys(a, ap, {"kind", "q", "weight_floor"});
        if (a.contains("kind")) {
            const std::string kind = get_string(a, ap, "kind");
            if (kind == "size")
                out.config.agg.kind = AggKind::size;
            else if (kind == "sharpness_q")
                out.config.agg.kind = AggKind::sharpness_q;
            else if (kind == "perturbed_loss_q")
                out.config.agg.kind = AggKind::perturbed_loss_q;
            else
                fail(join(ap, "kind"), "unknown aggregation kind '" + kind + "'");
        }
        out.config.agg.q = get_real(a, ap, "q", out.config.agg.q);
        out.config.agg.weight_floor = get_real(a, ap, "weight_floor", out.config.agg.weight_floor);
    }
    out.config.beta = get_real(obj, path, "beta", out.config.beta);
    out.config.gsam_alpha = get_real(obj, path, "gsam_alpha", out.config.gsam_alpha);
    return out;
}

const char* corruption_kind_name(CorruptionKind k) {
    return k == CorruptionKind::additive_gaussian ? "additive_gaussian" : "smoothing";
}

const char* arch_name(Arch a) { return a == Arch::softmax_linear ? "softmax_linear" : "mlp1"; }

const char* schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::constant ? "constant" : "progressive";
}

const char* agg_kind_name(AggKind k) {
    switch (k) {
        case AggKind::size: return "size";
        case AggKind::sharpness_q: return "sharpness_q";
        default: return "perturbed_loss_q";
    }
}

}  // namespace

RunSpec parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(doc, "",
               {"dataset", "partition", "model", "federation", "strategies", "seeds", "output_dir",
                "summary_window"});

    RunSpec spec;
    if (doc.contains("dataset"))
        spec.dataset = parse_dataset(doc.at("dataset"), "dataset");
    else
        spec.dataset.generate = DatasetSpec{};
    if (doc.contains("partition")) spec.partition = parse_partition(doc.at("partition"), "partition");
    if (doc.contains("model")) spec.model = parse_model(doc.at("model"), "model");
    if (doc.contains("federation"))
        spec.federation = parse_federation(doc.at("federation"), "federation");

    if (!doc.contains("strategies")) fail("strategies", "at least one strategy is required");
    const json& strategies = doc.at("strategies");
    if (!strategies.is_array() || strategies.empty())
        fail("strategies", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        NamedStrategy s =
            parse_strategy(strategies[i], "strategies[" + std::to_string(i) + "]");
        s.config.schedule.total_rounds = spec.federation.rounds;
        if (!names.insert(s.name).second)
            fail("strategies[" + std::to_string(i) + "].name", "duplicate name '" + s.name + "'");
        spec.strategies.push_back(std::move(s));
    }

    if (doc.contains("seeds")) {
        const json& seeds = doc.at("seeds");
        if (!seeds.is_array() || seeds.empty()) fail("seeds", "expected a non-empty array");
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            const json& v = seeds[i];
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
                fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
            spec.seeds.push_back(v.get<std::uint64_t>());
        }
    } else {
        spec.seeds = {0};
    }

    spec.output_dir = doc.contains("output_dir") ? get_string(doc, "", "output_dir")
                                                 : std::string("runs");
    spec.summary_window = get_int(doc, "", "summary_window", spec.summary_window);
    if (spec.summary_window < 1) fail("summary_window", "must be >= 1");
    return spec;
}

RunSpec parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_config_text(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_echo(const RunSpec& spec) {
    json doc;
    json dataset;
    if (spec.dataset.generate) {
        const DatasetSpec& g = *spec.dataset.generate;
        dataset["generate"] = {{"num_classes", g.num_classes},
                               {"feature_dim", g.feature_dim},
                               {"samples_per_class", g.samples_per_class},
                               {"class_separation", g.class_separation},
                               {"seed", g.seed}};
        dataset["test_samples_per_class"] = spec.dataset.test_samples_per_class;
    } else {
        dataset["train_csv"] = spec.dataset.train_csv->string();
        dataset["test_csv"] = spec.dataset.test_csv->string();
    }
    doc["dataset"] = std::move(dataset);

    doc["partition"] = {{"num_clients", spec.partition.num_clients},
                        {"dirichlet_alpha", spec.partition.dirichlet_alpha},
                        {"corrupted_client_count", spec.partition.corrupted_client_count},
                        {"corruption",
                         {{"kind", corruption_kind_name(spec.partition.corruption.kind)},
                          {"severity", spec.partition.corruption.severity},
                          {"seed", spec.partition.corruption.seed}}},
                        {"seed", spec.partition.seed}};

    doc["model"] = {{"arch", arch_name(spec.model.arch)},
                    {"hidden_units", spec.model.hidden_units},
                    {"init_seed", spec.model.init_seed},
                    {"init_scale", spec.model.init_scale}};

    doc["federation"] = {{"rounds", spec.federation.rounds},
                         {"local_epochs", spec.federation.local_epochs},
                         {"batch_size", spec.federation.batch_size},
                         {"learning_rate", spec.federation.learning_rate},
                         {"eval_every", spec.federation.eval_every},
                         {"master_seed", spec.federation.master_seed},
                         {"logit_adjustment", spec.federation.logit_adjustment},
                         {"adjustment_temperature", spec.federation.adjustment_temperature}};

    json strategies = json::array();
    for (const auto& s : spec.strategies) {
        json sched = {{"kind", schedule_kind_name(s.config.schedule.kind)},
                      {"rho_fixed", s.config.schedule.rho_fixed},
                      {"rho_max", s.config.schedule.rho_max},
                      {"tau", s.config.schedule.tau}};
        json agg = {{"kind", agg_kind_name(s.config.agg.kind)},
                    {"q", s.config.agg.q},
                    {"weight_floor", s.config.agg.weight_floor}};
        strategies.push_back(
            {{"name", s.name},
             {"local_optimizer", s.config.local_optimizer == LocalOptimizer::gd ? "gd" : "salt"},
             {"schedule", std::move(sched)},
             {"aggregation", std::move(agg)},
             {"beta", s.config.beta},
             {"gsam_alpha", s.config.gsam_alpha}});
    }
    doc["strategies"] = std::move(strategies);
    doc["seeds"] = spec.seeds;
    doc["output_dir"] = spec.output_dir.string();
    doc["summary_window"] = spec.summary_window;
    return doc.dump(2);
}

}  // namespace fedism
