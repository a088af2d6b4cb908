#include "fedism/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace fedism {
namespace {

void validate(const DatasetSpec& spec) {
    if (spec.num_classes < 2) throw ConfigError("dataset: num_classes must be >= 2");
    if (spec.feature_dim < 1) throw ConfigError("dataset: feature_dim must be >= 1");
    if (spec.samples_per_class < 1) throw ConfigError("dataset: samples_per_class must be >= 1");
    if (!(spec.class_separation > 0.0)) throw ConfigError("dataset: class_separation must be > 0");
    if (spec.feature_dim < spec.num_classes)
        throw ConfigError("dataset: feature_dim must be >= num_classes for axis-aligned class means");
}

void validate(const PartitionSpec& part) {
    if (part.num_clients < 2) throw ConfigError("partition: num_clients must be >= 2");
    if (!(part.dirichlet_alpha > 0.0)) throw ConfigError("partition: dirichlet_alpha must be > 0");
    if (part.corrupted_client_count < 0 || part.corrupted_client_count > part.num_clients)
        throw ConfigError("partition: corrupted_client_count must be in [0, num_clients]");
    if (part.corruption.severity < 0.0) throw ConfigError("corruption: severity must be >= 0");
}

/// Largest-remainder rounding of proportions to integer counts summing to n.
std::vector<int> proportion_counts(const std::vector<double>& p, int n) {
    const int k = static_cast<int>(p.size());
    std::vector<int> counts(k, 0);
    std::vector<std::pair<double, int>> rema(k);
    int assigned = 0;
    for (int i = 0; i < k; ++i) {
        const double exact = p[i] * n;
        counts[i] = static_cast<int>(std::floor(exact));
        assigned += counts[i];
        rema[i] = {exact - counts[i], i};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;  // deterministic tie break
    });
    for (int i = 0; i < n - assigned; ++i) counts[rema[i % k].second] += 1;
    return counts;
}

}  // namespace

Dataset generate(const DatasetSpec& spec) {
    validate(spec);
    Dataset out;
    out.feature_dim = spec.feature_dim;
    out.num_classes = spec.num_classes;
    const std::size_t n = static_cast<std::size_t>(spec.num_classes) * spec.samples_per_class;
    out.features.resize(n * spec.feature_dim);
    out.labels.resize(n);

    // Means at (sep / sqrt(2)) * e_c: every pair of means is exactly
    // class_separation apart.
    const double mean_scale = spec.class_separation / std::sqrt(2.0);

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::size_t row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int s = 0; s < spec.samples_per_class; ++s, ++row) {
            double* x = out.features.data() + row * spec.feature_dim;
            for (int d = 0; d < spec.feature_dim; ++d) x[d] = unit(rng);
            x[c] += mean_scale;
            out.labels[row] = c;
        }
    }
    return out;
}

std::vector<double> corrupt(const std::vector<double>& features, int feature_dim,
                            const CorruptionSpec& spec) {
    if (spec.severity < 0.0) throw ConfigError("corruption: severity must be >= 0");
    std::vector<double> out = features;
    if (spec.severity == 0.0 || features.empty()) return out;

    if (spec.kind == CorruptionKind::additive_gaussian) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.severity);
        for (double& v : out) v += noise(rng);
        return out;
    }

    // Box smoothing along each feature row, half-width from severity.
    // Edges truncate the window and renormalize, so constant rows pass
    // through unchanged.
    const int half = static_cast<int>(std::lround(spec.severity));
    if (half == 0) return out;
    const std::size_t rows = features.size() / feature_dim;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = features.data() + r * feature_dim;
        double* dst = out.data() + r * feature_dim;
        for (int i = 0; i < feature_dim; ++i) {
            const int lo = std::max(0, i - half);
            const int hi = std::min(feature_dim - 1, i + half);
            double sum = 0.0;
            for (int j = lo; j <= hi; ++j) sum += src[j];
            dst[i] = sum / (hi - lo + 1);
        }
    }
    return out;
}

std::vector<ClientDataset> partition(const Dataset& dataset, const PartitionSpec& part) {
    validate(part);
    const std::size_t n = dataset.size();
    if (n == 0) throw ConfigError("partition: dataset is empty");
    if (static_cast<std::size_t>(part.num_clients) > n)
        throw ConfigError("partition: more clients than samples");

    const int k = part.num_clients;
    const int c = dataset.num_classes;

    // Indices per class, shuffled once up front.
    std::mt19937_64 rng(part.seed);
    std::vector<std::vector<std::size_t>> by_class(c);
    for (std::size_t i = 0; i < n; ++i) by_class[dataset.labels[i]].push_back(i);
    for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);

    std::gamma_distribution<double> gamma(part.dirichlet_alpha, 1.0);
    std::vector<std::vector<int>> counts;  // [class][client]
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
        counts.assign(c, {});
        std::vector<int> per_client(k, 0);
        bool degenerate = false;
        for (int cls = 0; cls < c && !degenerate; ++cls) {
            std::vector<double> p(k);
            double total = 0.0;
            for (int j = 0; j < k; ++j) {
                p[j] = gamma(rng);
                total += p[j];
            }
            if (!(total > 0.0) || !std::isfinite(total)) {  // tiny alpha can underflow to 0
                degenerate = true;
                break;
            }
            for (double& v : p) v /= total;
            counts[cls] = proportion_counts(p, static_cast<int>(by_class[cls].size()));
            for (int j = 0; j < k; ++j) per_client[j] += counts[cls][j];
        }
        ok = !degenerate &&
             std::all_of(per_client.begin(), per_client.end(), [](int v) { return v >= 1; });
    }
    if (!ok) throw PartitionError("partition: no draw left every client non-empty after 100 retries");

    std::vector<ClientDataset> clients(k);
    for (int j = 0; j < k; ++j) {
        clients[j].client_id = j;
        clients[j].data.feature_dim = dataset.feature_dim;
        clients[j].data.num_classes = dataset.num_classes;
    }
    for (int cls = 0; cls < c; ++cls) {
        std::size_t cursor = 0;
        for (int j = 0; j < k; ++j) {
            for (int s = 0; s < counts[cls][j]; ++s) {
                const std::size_t i = by_class[cls][cursor++];
                const double* x = dataset.row(i);
                clients[j].data.features.insert(clients[j].data.features.end(), x,
                                                x + dataset.feature_dim);
                clients[j].data.labels.push_back(dataset.labels[i]);
            }
        }
    }

    // Corrupted clients: head of a seed-derived permutation.
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < part.corrupted_client_count; ++i) {
        ClientDataset& cd = clients[order[i]];
        cd.quality = Quality::corrupted;
        CorruptionSpec per_client = part.corruption;
        per_client.seed = seed_stream(part.corruption.seed, static_cast<std::uint64_t>(cd.client_id));
        cd.data.features = corrupt(cd.data.features, dataset.feature_dim, per_client);
    }
    return clients;
}

std::pair<Dataset, Dataset> make_test_pair(const Dataset& test, const CorruptionSpec& spec) {
    if (test.size() == 0) throw ConfigError("make_test_pair: test dataset is empty");
    Dataset corrupted = test;
    CorruptionSpec test_spec = spec;
    test_spec.seed = seed_stream(spec.seed, 0x7e57u);  // distinct from client streams
    corrupted.features = corrupt(test.features, test.feature_dim, test_spec);
    return {test, corrupted};
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_csv: cannot open " + path.string());

    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    int width = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (width < 0) {
            width = static_cast<int>(cells.size());
            if (width < 2)
                throw ConfigError("load_csv: line " + std::to_string(lineno) +
                                  ": need at least one feature and a label");
            out.feature_dim = width - 1;
        } else if (static_cast<int>(cells.size()) != width) {
            throw ConfigError("load_csv: line " + std::to_string(lineno) + ": expected " +
                              std::to_string(width) + " columns, got " +
                              std::to_string(cells.size()));
        }
        for (int d = 0; d < width - 1; ++d) {
            double v = 0.0;
            const char* b = cells[d].data();
            const char* e = b + cells[d].size();
            auto [p, ec] = std::from_chars(b, e, v);
            if (ec != std::errc() || p != e)
                throw ConfigError("load_csv: line " + std::to_string(lineno) + ": column " +
                                  std::to_string(d + 1) + " is not a number: '" + cells[d] + "'");
            out.features.push_back(v);
        }
        int label = 0;
        {
            const std::string& cell = cells[width - 1];
            const char* b = cell.data();
            const char* e = b + cell.size();
            auto [p, ec] = std::from_chars(b, e, label);
            if (ec != std::errc() || p != e || label < 0)
                throw ConfigError("load_csv: line " + std::to_string(lineno) +
                                  ": label is not a non-negative integer: '" + cell + "'");
        }
        out.labels.push_back(label);
        out.num_classes = std::max(out.num_classes, label + 1);
    }
    if (out.labels.empty()) throw ConfigError("load_csv: no data rows in " + path.string());
    return out;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw ConfigError("save_csv: cannot open " + path.string());
    char buf[64];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const double* x = dataset.row(i);
        for (int d = 0; d < dataset.feature_dim; ++d) {
            auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x[d]);
            outf.write(buf, p - buf);
            outf.put(',');
        }
        outf << dataset.labels[i] << '\n';
    }
}

}  // namespace fedism
