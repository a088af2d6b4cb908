#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fedism/engine.hpp"

namespace fedism {

/// Everything needed to re-run and audit a run: config echo, build id,
/// effective seeds, timestamps and the files the run produced.
struct RunManifest {
    std::string config_echo;  // JSON text; re-parses to the executed config
    std::string build_id;
    std::vector<std::pair<std::string, std::uint64_t>> seeds;
    std::vector<std::vector<std::size_t>> model_layout;  // {rows, cols} per tensor
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};

/// One row per (round, client), rounds ascending then clients ascending.
/// Header: t,rho,client_id,n,base_loss,sharpness,perturbed_loss,w_raw,w_smooth
void write_rounds(const std::vector<RoundRecord>& records, const std::filesystem::path& path);
std::vector<RoundRecord> read_rounds(const std::filesystem::path& path);

/// One row per evaluated round.
/// Header: t,acc_clean,auc_clean,acc_corr,auc_corr,acc_avg,auc_avg,client_std_acc,client_std_auc
void write_eval(const std::vector<std::pair<int, EvalReport>>& reports,
                const std::filesystem::path& path);
std::vector<std::pair<int, EvalReport>> read_eval(const std::filesystem::path& path);

std::vector<std::pair<int, EvalReport>> eval_series(const std::vector<RoundRecord>& records);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Shortest decimal that round-trips back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

}  // namespace fedism
