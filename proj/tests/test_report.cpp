#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fedism/report.hpp"
#include "json.hpp"

using namespace fedism;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<RoundRecord> sample_records() {
    std::vector<RoundRecord> records(2);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int t = 0; t < 2; ++t) {
        auto& rec = records[t];
        rec.t = t + 1;
        rec.rho_used = 0.01 * (t + 1);
        double raw_total = 0.0, smooth_total = 0.0;
        for (int k = 0; k < 3; ++k) {
            rec.clients.push_back({100.0 + k, u(rng), u(rng), u(rng)});
            rec.weights_raw.push_back(u(rng));
            rec.weights_smoothed.push_back(u(rng));
            raw_total += rec.weights_raw.back();
            smooth_total += rec.weights_smoothed.back();
        }
        for (auto& w : rec.weights_raw) w /= raw_total;
        for (auto& w : rec.weights_smoothed) w /= smooth_total;
    }
    records[1].eval.emplace();
    records[1].eval->acc_clean = 0.9;
    records[1].eval->acc_corrupted = 0.7;
    records[1].eval->acc_avg = 0.8;
    return records;
}

}  // namespace

TEST_CASE("doubles round-trip through their text form") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double v = dist(rng) * std::pow(10.0, i % 17 - 8);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(parse_double(format_double(0.0)) == 0.0);
    CHECK(format_double(0.1) == "0.1");
    CHECK_THROWS_AS(parse_double("12x"), ConfigError);
    CHECK_THROWS_AS(parse_double(""), ConfigError);
}

TEST_CASE("rounds file round trip") {
    const auto records = sample_records();
    const auto path = temp_file("fedism_rounds.csv");
    write_rounds(records, path);

    SUBCASE("shape: header plus one row per round and client") {
        const std::string text = slurp(path);
        CHECK(std::count(text.begin(), text.end(), '\n') == 7);
        CHECK(text.rfind("t,rho,client_id,n,base_loss,sharpness,perturbed_loss,w_raw,w_smooth\n",
                         0) == 0);
    }
    SUBCASE("parse-back equals the in-memory records") {
        const auto back = read_rounds(path);
        REQUIRE(back.size() == 2);
        for (std::size_t t = 0; t < 2; ++t) {
            CHECK(back[t].t == records[t].t);
            CHECK(back[t].rho_used == records[t].rho_used);
            CHECK(back[t].weights_raw == records[t].weights_raw);
            CHECK(back[t].weights_smoothed == records[t].weights_smoothed);
            REQUIRE(back[t].clients.size() == 3);
            for (std::size_t k = 0; k < 3; ++k) {
                CHECK(back[t].clients[k].n == records[t].clients[k].n);
                CHECK(back[t].clients[k].base_loss == records[t].clients[k].base_loss);
                CHECK(back[t].clients[k].sharpness == records[t].clients[k].sharpness);
                CHECK(back[t].clients[k].perturbed_loss == records[t].clients[k].perturbed_loss);
            }
        }
    }
    SUBCASE("weights re-summed from the file stay on the simplex") {
        for (const auto& rec : read_rounds(path)) {
            double raw = 0.0, smoothed = 0.0;
            for (std::size_t k = 0; k < rec.weights_raw.size(); ++k) {
                raw += rec.weights_raw[k];
                smoothed += rec.weights_smoothed[k];
            }
            CHECK(raw == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(smoothed == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("byte determinism") {
        const auto again = temp_file("fedism_rounds2.csv");
        write_rounds(records, again);
        CHECK(slurp(path) == slurp(again));
        fs::remove(again);
    }
    fs::remove(path);
}

TEST_CASE("rounds file error paths") {
    const auto path = temp_file("fedism_rounds_bad.csv");
    CHECK_THROWS_AS(write_rounds({}, path), ConfigError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "wrong,header\n";
    }
    CHECK_THROWS_AS(read_rounds(path), ConfigError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "t,rho,client_id,n,base_loss,sharpness,perturbed_loss,w_raw,w_smooth\n";
        out << "1,0.1,1,10,0.5,0.1,0.6,1,1\n";  // client 1 before client 0
    }
    CHECK_THROWS_AS(read_rounds(path), ConfigError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "t,rho,client_id,n,base_loss,sharpness,perturbed_loss,w_raw,w_smooth\n";
        out << "1,0.1,0,10\n";
    }
    CHECK_THROWS_AS(read_rounds(path), ConfigError);

    fs::remove(path);
    CHECK_THROWS_AS(read_rounds(path), ConfigError);
}

TEST_CASE("eval file round trip") {
    std::vector<std::pair<int, EvalReport>> reports(1);
    reports[0].first = 100;
    auto& r = reports[0].second;
    r.acc_clean = 0.925;
    r.auc_clean = 0.99;
    r.acc_corrupted = 0.775;
    r.auc_corrupted = 0.85;
    r.acc_avg = 0.5 * (r.acc_clean + r.acc_corrupted);
    r.auc_avg = 0.5 * (r.auc_clean + r.auc_corrupted);
    r.client_std_acc = 0.03;
    r.client_std_auc = 0.04;

    const auto path = temp_file("fedism_eval.csv");
    write_eval(reports, path);

    const std::string text = slurp(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);

    const auto back = read_eval(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].first == 100);
    CHECK(back[0].second.acc_clean == r.acc_clean);
    CHECK(back[0].second.auc_corrupted == r.auc_corrupted);
    CHECK(back[0].second.acc_avg == 0.5 * (back[0].second.acc_clean + back[0].second.acc_corrupted));
    CHECK(back[0].second.auc_avg == 0.5 * (back[0].second.auc_clean + back[0].second.auc_corrupted));
    CHECK(back[0].second.client_std_auc == 0.04);
    fs::remove(path);
}

TEST_CASE("eval series extracts only evaluated rounds") {
    const auto records = sample_records();
    const auto series = eval_series(records);
    REQUIRE(series.size() == 1);
    CHECK(series[0].first == 2);
    CHECK(series[0].second.acc_clean == 0.9);
}

TEST_CASE("manifest round trip") {
    RunManifest m;
    m.config_echo = nlohmann::json{{"rounds", 50}, {"strategy", "fedavg"}}.dump(2);
    m.build_id = "abc1234";
    m.seeds = {{"model_init", 5}, {"partition", 7}};
    m.model_layout = {{2, 3}, {2, 1}};
    m.started_at = "2026-08-17T00:00:00Z";
    m.finished_at = "2026-08-17T00:00:05Z";
    m.outputs = {"rounds.csv", "eval.csv", "model.bin"};

    const auto dir = temp_file("fedism_manifest_dir");
    fs::remove_all(dir);
    const auto path = dir / "deep" / "manifest.json";
    write_manifest(m, path);
    CHECK(fs::exists(path));

    const RunManifest back = read_manifest(path);
    CHECK(nlohmann::json::parse(back.config_echo) == nlohmann::json::parse(m.config_echo));
    CHECK(back.build_id == m.build_id);
    CHECK(back.seeds == m.seeds);
    CHECK(back.model_layout == m.model_layout);
    CHECK(back.started_at == m.started_at);
    CHECK(back.finished_at == m.finished_at);
    CHECK(back.outputs == m.outputs);
    fs::remove_all(dir);
}

TEST_CASE("manifest error paths") {
    const auto path = temp_file("fedism_manifest_bad.json");
    {
        std::ofstream out(path, std::ios::binary);
        out << "{ not json";
    }
    CHECK_THROWS_AS(read_manifest(path), ConfigError);
    {
        std::ofstream out(path, std::ios::binary);
        out << R"({"config": {}})";
    }
    CHECK_THROWS_AS(read_manifest(path), ConfigError);
    fs::remove(path);
    CHECK_THROWS_AS(read_manifest(path), ConfigError);
}
