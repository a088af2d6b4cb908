#include "fedism/runner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedism/report.hpp"

#ifndef FEDISM_BUILD_ID
#define FEDISM_BUILD_ID "dev"
#endif

namespace fedism {
namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
    if (v.empty()) return {};
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / v.size())};
}

constexpr std::array<const char*, 8> kSummaryMetrics = {
    "acc_clean", "acc_corr", "acc_avg",        "auc_clean",
    "auc_corr",  "auc_avg",  "client_std_acc", "client_std_auc"};

std::array<double, 8> metric_values(const EvalReport& r) {
    return {r.acc_clean, r.acc_corrupted, r.acc_avg,       r.auc_clean,
            r.auc_corrupted, r.auc_avg,   r.client_std_acc, r.client_std_auc};
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) return cells;
        start = comma + 1;
    }
}

struct SummaryRow {
    std::string strategy;
    std::array<double, 8> means{};
};

std::vector<SummaryRow> read_summary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("compare: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("compare: " + path.string() + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split_line(line);

    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw ConfigError("compare: " + path.string() + ": missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t strategy_col = column("strategy");
    std::array<std::size_t, 8> metric_cols{};
    for (std::size_t m = 0; m < kSummaryMetrics.size(); ++m)
        metric_cols[m] = column(std::string(kSummaryMetrics[m]) + "_mean");

    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw ConfigError("compare: " + path.string() + ": ragged row '" + line + "'");
        SummaryRow row;
        row.strategy = cells[strategy_col];
        for (std::size_t m = 0; m < metric_cols.size(); ++m)
            row.means[m] = parse_double(cells[metric_cols[m]]);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("compare: " + path.string() + " has no data rows");
    return rows;
}

std::string fixed4(double v, bool forced_sign = false) {
    char buf[32];
    std::snprintf(buf, sizeof buf, forced_sign ? "%+.4f" : "%.4f", v);
    return buf;
}

}  // namespace

PreparedRun prepare_run(const RunSpec& spec, const StrategyConfig& strategy,
                        std::uint64_t run_seed) {
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    seeds.emplace_back("run", run_seed);

    Dataset train, test;
    if (spec.dataset.generate) {
        DatasetSpec train_spec = *spec.dataset.generate;
        train_spec.seed = seed_stream(spec.dataset.generate->seed, run_seed, 1);
        seeds.emplace_back("train_data", train_spec.seed);
        train = generate(train_spec);

        DatasetSpec test_spec = train_spec;
        if (spec.dataset.test_samples_per_class > 0)
            test_spec.samples_per_class = spec.dataset.test_samples_per_class;
        test_spec.seed = seed_stream(spec.dataset.generate->seed, run_seed, 2);
        seeds.emplace_back("test_data", test_spec.seed);
        test = generate(test_spec);
    } else {
        train = load_csv(*spec.dataset.train_csv);
        test = load_csv(*spec.dataset.test_csv);
        if (train.feature_dim != test.feature_dim)
            throw ConfigError("train and test csv disagree on feature count");
        const int c = std::max(train.num_classes, test.num_classes);
        train.num_classes = c;
        test.num_classes = c;
    }

    PartitionSpec part = spec.partition;
    part.seed = seed_stream(spec.partition.seed, run_seed, 3);
    part.corruption.seed = seed_stream(spec.partition.corruption.seed, run_seed, 4);
    seeds.emplace_back("partition", part.seed);
    seeds.emplace_back("corruption", part.corruption.seed);
    std::vector<ClientDataset> clients = partition(train, part);
    auto [clean_test, corrupted_test] = make_test_pair(test, part.corruption);

    ModelSpec mspec = spec.model;
    mspec.feature_dim = train.feature_dim;
    mspec.num_classes = train.num_classes;
    mspec.init_seed = seed_stream(spec.model.init_seed, run_seed, 5);
    seeds.emplace_back("model_init", mspec.init_seed);

    FederationConfig fed = spec.federation;
    fed.strategy = strategy;
    fed.strategy.schedule.total_rounds = fed.rounds;
    fed.master_seed = seed_stream(spec.federation.master_seed, run_seed, 6);
    seeds.emplace_back("master", fed.master_seed);

    return PreparedRun{Model(mspec), std::move(clients), std::move(clean_test),
                       std::move(corrupted_test), std::move(fed), std::move(seeds)};
}

void run_matrix(const RunSpec& spec, int workers) {
    if (spec.strategies.empty()) throw ConfigError("run_matrix: no strategies");
    if (spec.seeds.empty()) throw ConfigError("run_matrix: no seeds");
    std::filesystem::create_directories(spec.output_dir);

    std::ofstream summary(spec.output_dir / "summary.csv", std::ios::binary);
    if (!summary) throw ConfigError("run_matrix: cannot open summary.csv");
    summary << "strategy,runs";
    for (const char* m : kSummaryMetrics) summary << ',' << m << "_mean," << m << "_std";
    summary << '\n';

    for (const NamedStrategy& strat : spec.strategies) {
        std::array<std::vector<double>, 8> pooled;
        for (std::uint64_t seed : spec.seeds) {
            PreparedRun pr = prepare_run(spec, strat.config, seed);
            const std::filesystem::path dir =
                spec.output_dir / (strat.name + "_seed" + std::to_string(seed));
            std::filesystem::create_directories(dir);

            RunManifest manifest;
            manifest.started_at = utc_now();
            const RunResult result = run(pr.model, pr.clients, pr.clean_test, pr.corrupted_test,
                                         pr.federation, workers);
            manifest.finished_at = utc_now();

            write_rounds(result.records, dir / "rounds.csv");
            const auto evals = eval_series(result.records);
            write_eval(evals, dir / "eval.csv");
            save_checkpoint(result.final_params, dir / "model.bin");

            RunSpec echo = spec;
            echo.strategies = {strat};
            echo.seeds = {seed};
            manifest.config_echo = config_echo(echo);
            manifest.build_id = FEDISM_BUILD_ID;
            manifest.seeds = pr.effective_seeds;
            for (const auto& shape : pr.model.layout().shapes)
                manifest.model_layout.push_back({shape[0], shape[1]});
            manifest.outputs = {"rounds.csv", "eval.csv", "model.bin", "manifest.json"};
            write_manifest(manifest, dir / "manifest.json");

            const std::size_t window =
                std::min<std::size_t>(evals.size(), static_cast<std::size_t>(spec.summary_window));
            for (std::size_t i = evals.size() - window; i < evals.size(); ++i) {
                const auto values = metric_values(evals[i].second);
                for (std::size_t m = 0; m < values.size(); ++m) pooled[m].push_back(values[m]);
            }
        }

        summary << strat.name << ',' << spec.seeds.size();
        for (const auto& series : pooled) {
            const MeanStd ms = mean_std(series);
            summary << ',' << format_double(ms.mean) << ',' << format_double(ms.std);
        }
        summary << '\n';
    }
    if (!summary) throw ConfigError("run_matrix: write failed for summary.csv");
}

std::string compare(const std::vector<std::filesystem::path>& paths) {
    if (paths.size() < 2) throw ConfigError("compare: need at least two summary files");
    std::vector<std::vector<SummaryRow>> summaries;
    summaries.reserve(paths.size());
    for (const auto& p : paths) summaries.push_back(read_summary(p));
    const std::vector<SummaryRow>& base = summaries.front();

    auto baseline_for = [&](const std::string& strategy) -> const SummaryRow& {
        for (const auto& row : base)
            if (row.strategy == strategy) return row;
        return base.front();
    };

    std::vector<std::vector<std::string>> table;
    table.push_back({"summary", "strategy"});
    for (const char* m : kSummaryMetrics) table.back().push_back(m);
    for (const char* m : kSummaryMetrics) table.back().push_back("d_" + std::string(m));

    for (std::size_t s = 0; s < summaries.size(); ++s) {
        for (const SummaryRow& row : summaries[s]) {
            const SummaryRow& ref = baseline_for(row.strategy);
            std::vector<std::string> cells = {paths[s].string(), row.strategy};
            for (double v : row.means) cells.push_back(fixed4(v));
            for (std::size_t m = 0; m < row.means.size(); ++m)
                cells.push_back(fixed4(row.means[m] - ref.means[m], true));
            table.push_back(std::move(cells));
        }
    }

    std::vector<std::size_t> widths(table.front().size(), 0);
    for (const auto& row : table)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    std::ostringstream out;
    for (const auto& row : table) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << "  ";
            out << row[i] << std::string(widths[i] - row[i].size(), ' ');
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace fedism
