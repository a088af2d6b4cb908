#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fedism/report.hpp"
#include "fedism/runner.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& output_dir, int workers,
                const std::vector<std::uint64_t>& seed_override) {
    fedism::RunSpec spec = fedism::parse_config(config_path);
    if (!output_dir.empty()) spec.output_dir = output_dir;
    if (!seed_override.empty()) spec.seeds = seed_override;
    fedism::run_matrix(spec, workers);
    std::printf("wrote %s\n", (spec.output_dir / "summary.csv").string().c_str());
    return 0;
}

int compare_command(const std::vector<std::string>& paths) {
    std::vector<std::filesystem::path> files(paths.begin(), paths.end());
    std::fputs(fedism::compare(files).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated learning simulator for sharpness-aware training and aggregation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    int workers = 1;
    std::vector<std::uint64_t> seed_override;
    CLI::App* run = app.add_subcommand("run", "Execute the (strategy x seed) matrix of a config");
    run->add_option("config", config_path, "JSON run configuration")->required();
    run->add_option("--output-dir", output_dir, "Override the config's output directory");
    run->add_option("--workers", workers, "Worker threads per run (never changes results)")
        ->check(CLI::PositiveNumber);
    run->add_option("--seed-override", seed_override, "Replace the config's seed list");

    std::vector<std::string> summaries;
    CLI::App* cmp = app.add_subcommand("compare", "Tabulate summary files against the first one");
    cmp->add_option("summaries", summaries, "summary.csv paths")->expected(2, -1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run) return run_command(config_path, output_dir, workers, seed_override);
        return compare_command(summaries);
    } catch (const fedism::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 3;
    } catch (const fedism::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
