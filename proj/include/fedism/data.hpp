#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "fedism/common.hpp"

namespace fedism {

/// Synthetic Gaussian-blob classification data.
/// Class means sit on scaled coordinate axes so every pair of means is
/// exactly `class_separation` apart; per-class covariance is the identity.
struct DatasetSpec {
    int num_classes = 2;
    int feature_dim = 2;
    int samples_per_class = 100;
    double class_separation = 4.0;
    std::uint64_t seed = 0;
};

enum class CorruptionKind { additive_gaussian, smoothing };

/// severity is the noise std for additive_gaussian and the half-width
/// (rounded) of the box kernel for smoothing. severity = 0 is the identity.
struct CorruptionSpec {
    CorruptionKind kind = CorruptionKind::additive_gaussian;
    double severity = 0.0;
    std::uint64_t seed = 0;
};

struct PartitionSpec {
    int num_clients = 2;
    double dirichlet_alpha = 1.0;
    int corrupted_client_count = 0;
    CorruptionSpec corruption;
    std::uint64_t seed = 0;
};

struct Dataset {
    int feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;  // row-major size() x feature_dim
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    const double* row(std::size_t i) const { return features.data() + i * static_cast<std::size_t>(feature_dim); }
};

enum class Quality { clean, corrupted };

struct ClientDataset {
    int client_id = 0;
    Dataset data;
    Quality quality = Quality::clean;
};

/// Draw `samples_per_class` points per class around axis-aligned means.
/// Pure function of the spec; identical specs yield identical bits.
Dataset generate(const DatasetSpec& spec);

/// Split a dataset across clients with per-class Dirichlet(alpha) label skew,
/// tag `corrupted_client_count` clients (seed-derived choice) and corrupt
/// their features in place. Shards are disjoint and cover the input; a draw
/// that leaves any client empty is retried up to 100 times.
std::vector<ClientDataset> partition(const Dataset& dataset, const PartitionSpec& part);

/// Apply the corruption to a feature matrix (row-major, n x feature_dim).
std::vector<double> corrupt(const std::vector<double>& features, int feature_dim,
                            const CorruptionSpec& spec);

/// Clean copy plus a corrupted copy built with the same corruption settings
/// that were applied to corrupted clients' training shards.
std::pair<Dataset, Dataset> make_test_pair(const Dataset& test, const CorruptionSpec& spec);

/// Comma-separated rows: feature_dim floats then an integer label, no header.
Dataset load_csv(const std::filesystem::path& path);

/// Writer for the same format; floats as shortest round-trip decimals.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace fedism
