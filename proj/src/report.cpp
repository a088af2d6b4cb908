#include "fedism/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fedism {
namespace {

using nlohmann::json;

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

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != expected_header)
        throw ConfigError(path.string() + ": unexpected header '" + line + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_line(line));
    }
    return rows;
}

int parse_int(const std::string& s) {
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("not an integer: '" + s + "'");
    return v;
}

constexpr const char* kRoundsHeader =
    "t,rho,client_id,n,base_loss,sharpness,perturbed_loss,w_raw,w_smooth";
constexpr const char* kEvalHeader =
    "t,acc_clean,auc_clean,acc_corr,auc_corr,acc_avg,auc_avg,client_std_acc,client_std_auc";

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("not a number: '" + s + "'");
    return v;
}

void write_rounds(const std::vector<RoundRecord>& records, const std::filesystem::path& path) {
    if (records.empty()) throw ConfigError("write_rounds: no records");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_rounds: cannot open " + path.string());
    out << kRoundsHeader << '\n';
    for (const auto& rec : records) {
        for (std::size_t k = 0; k < rec.clients.size(); ++k) {
            const auto& c = rec.clients[k];
            out << rec.t << ',' << format_double(rec.rho_used) << ',' << k << ','
                << format_double(c.n) << ',' << format_double(c.base_loss) << ','
                << format_double(c.sharpness) << ',' << format_double(c.perturbed_loss) << ','
                << format_double(rec.weights_raw[k]) << ','
                << format_double(rec.weights_smoothed[k]) << '\n';
        }
    }
    if (!out) throw ConfigError("write_rounds: write failed for " + path.string());
}

std::vector<RoundRecord> read_rounds(const std::filesystem::path& path) {
    std::vector<RoundRecord> records;
    for (const auto& cells : read_csv(path, kRoundsHeader)) {
        if (cells.size() != 9)
            throw ConfigError(path.string() + ": expected 9 columns, got " +
                              std::to_string(cells.size()));
        const int t = parse_int(cells[0]);
        if (records.empty() || records.back().t != t) {
            records.push_back({});
            records.back().t = t;
            records.back().rho_used = parse_double(cells[1]);
        }
        RoundRecord& rec = records.back();
        const int client_id = parse_int(cells[2]);
        if (client_id != static_cast<int>(rec.clients.size()))
            throw ConfigError(path.string() + ": client rows out of order at t=" +
                              std::to_string(t));
        rec.clients.push_back({parse_double(cells[3]), parse_double(cells[4]),
                               parse_double(cells[5]), parse_double(cells[6])});
        rec.weights_raw.push_back(parse_double(cells[7]));
        rec.weights_smoothed.push_back(parse_double(cells[8]));
    }
    return records;
}

void write_eval(const std::vector<std::pair<int, EvalReport>>& reports,
                const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_eval: cannot open " + path.string());
    out << kEvalHeader << '\n';
    for (const auto& [t, r] : reports) {
        out << t << ',' << format_double(r.acc_clean) << ',' << format_double(r.auc_clean) << ','
            << format_double(r.acc_corrupted) << ',' << format_double(r.auc_corrupted) << ','
            << format_double(r.acc_avg) << ',' << format_double(r.auc_avg) << ','
            << format_double(r.client_std_acc) << ',' << format_double(r.client_std_auc) << '\n';
    }
    if (!out) throw ConfigError("write_eval: write failed for " + path.string());
}

std::vector<std::pair<int, EvalReport>> read_eval(const std::filesystem::path& path) {
    std::vector<std::pair<int, EvalReport>> reports;
    for (const auto& cells : read_csv(path, kEvalHeader)) {
        if (cells.size() != 9)
            throw ConfigError(path.string() + ": expected 9 columns, got " +
                              std::to_string(cells.size()));
        EvalReport r;
        r.acc_clean = parse_double(cells[1]);
        r.auc_clean = parse_double(cells[2]);
        r.acc_corrupted = parse_double(cells[3]);
        r.auc_corrupted = parse_double(cells[4]);
        r.acc_avg = parse_double(cells[5]);
        r.auc_avg = parse_double(cells[6]);
        r.client_std_acc = parse_double(cells[7]);
        r.client_std_auc = parse_double(cells[8]);
        reports.emplace_back(parse_int(cells[0]), std::move(r));
    }
    return reports;
}

std::vector<std::pair<int, EvalReport>> eval_series(const std::vector<RoundRecord>& records) {
    std::vector<std::pair<int, EvalReport>> out;
    for (const auto& rec : records)
        if (rec.eval) out.emplace_back(rec.t, *rec.eval);
    return out;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    json doc;
    doc["config"] = json::parse(manifest.config_echo);
    doc["build_id"] = manifest.build_id;
    json seeds = json::array();
    for (const auto& [name, value] : manifest.seeds)
        seeds.push_back(json{{"name", name}, {"value", value}});
    doc["seeds"] = std::move(seeds);
    json layout = json::array();
    for (const auto& shape : manifest.model_layout) layout.push_back(shape);
    doc["model_layout"] = std::move(layout);
    doc["started_at"] = manifest.started_at;
    doc["finished_at"] = manifest.finished_at;
    doc["outputs"] = manifest.outputs;

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("write_manifest: cannot open " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw ConfigError("write_manifest: write failed for " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("read_manifest: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("read_manifest: " + path.string() + ": " + e.what());
    }
    RunManifest m;
    try {
        m.config_echo = doc.at("config").dump(2);
        m.build_id = doc.at("build_id").get<std::string>();
        for (const auto& entry : doc.at("seeds"))
            m.seeds.emplace_back(entry.at("name").get<std::string>(),
                                 entry.at("value").get<std::uint64_t>());
        for (const auto& shape : doc.at("model_layout"))
            m.model_layout.push_back(shape.get<std::vector<std::size_t>>());
        m.started_at = doc.at("started_at").get<std::string>();
        m.finished_at = doc.at("finished_at").get<std::string>();
        m.outputs = doc.at("outputs").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError("read_manifest: " + path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace fedism
