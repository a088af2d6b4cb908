#include "fedism/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fedism {
namespace {

double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / v.size());
}

/// Softmax probabilities per row, in place over logits.
void softmax_rows(std::vector<double>& logits, std::size_t n, int c) {
    for (std::size_t i = 0; i < n; ++i) {
        double* z = logits.data() + i * c;
        double zmax = z[0];
        for (int j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            z[j] = std::exp(z[j] - zmax);
            sum += z[j];
        }
        for (int j = 0; j < c; ++j) z[j] /= sum;
    }
}

}  // namespace

double accuracy(const Model& model, const ParamVector& theta, const Dataset& test,
                const LogitAdjustment& adj) {
    if (test.size() == 0) throw ConfigError("accuracy: empty test set");
    std::vector<double> logits = model.forward(theta, full_batch(test));
    const int c = model.spec().num_classes;
    std::vector<double> shift;
    if (adj.enabled) {
        shift.resize(c);
        for (int j = 0; j < c; ++j) shift[j] = adj.temperature * std::log(adj.class_prior[j]);
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        double* z = logits.data() + i * c;
        if (!shift.empty())
            for (int j = 0; j < c; ++j) z[j] += shift[j];
        int best = 0;
        for (int j = 1; j < c; ++j)
            if (z[j] > z[best]) best = j;
        if (best == test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

double rank_auc(std::span<const double> scores, std::span<const int> positive) {
    if (scores.size() != positive.size()) throw ConfigError("rank_auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int p : positive) n_pos += p ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("rank_auc: needs both positive and negative samples");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tied blocks; rank sum of positives gives the
    // Mann-Whitney U with half credit per tied pair.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
        for (std::size_t k = i; k < j; ++k)
            if (positive[order[k]]) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double macro_auc(const Model& model, const ParamVector& theta, const Dataset& test) {
    if (test.size() == 0) throw ConfigError("macro_auc: empty test set");
    const int c = model.spec().num_classes;
    std::vector<double> probs = model.forward(theta, full_batch(test));
    softmax_rows(probs, test.size(), c);

    std::vector<bool> present(c, false);
    for (int y : test.labels) present[y] = true;
    if (std::count(present.begin(), present.end(), true) < 2)
        throw UndefinedMetricError("macro_auc: fewer than two classes present");

    std::vector<double> scores(test.size());
    std::vector<int> positive(test.size());
    double total = 0.0;
    int classes = 0;
    for (int cls = 0; cls < c; ++cls) {
        if (!present[cls]) continue;
        for (std::size_t i = 0; i < test.size(); ++i) {
            scores[i] = probs[i * c + cls];
            positive[i] = test.labels[i] == cls ? 1 : 0;
        }
        total += rank_auc(scores, positive);
        ++classes;
    }
    return total / classes;
}

EvalReport evaluate(const Model& model, const ParamVector& theta, const Dataset& clean_test,
                    const Dataset& corrupted_test, std::span<const Quality> client_attributes,
                    const LogitAdjustment& adj) {
    EvalReport r;
    r.acc_clean = accuracy(model, theta, clean_test, adj);
    r.acc_corrupted = accuracy(model, theta, corrupted_test, adj);
    r.auc_clean = macro_auc(model, theta, clean_test);
    r.auc_corrupted = macro_auc(model, theta, corrupted_test);
    r.acc_avg = 0.5 * (r.acc_clean + r.acc_corrupted);
    r.auc_avg = 0.5 * (r.auc_clean + r.auc_corrupted);
    r.per_client_acc.reserve(client_attributes.size());
    r.per_client_auc.reserve(client_attributes.size());
    for (Quality q : client_attributes) {
        r.per_client_acc.push_back(q == Quality::clean ? r.acc_clean : r.acc_corrupted);
        r.per_client_auc.push_back(q == Quality::clean ? r.auc_clean : r.auc_corrupted);
    }
    r.client_std_acc = population_std(r.per_client_acc);
    r.client_std_auc = population_std(r.per_client_auc);
    return r;
}

std::vector<double> landscape_slice(const Model& model, const ParamVector& theta,
                                    const Dataset& test, const ParamVector& d1,
                                    const ParamVector& d2, const GridSpec& grid) {
    if (grid.points_per_axis < 1 || grid.points_per_axis % 2 == 0)
        throw ConfigError("landscape_slice: points_per_axis must be odd and >= 1");
    if (!(grid.half_width > 0.0)) throw ConfigError("landscape_slice: half_width must be > 0");
    const int p = grid.points_per_axis;
    const int center = (p - 1) / 2;
    const double step = center > 0 ? grid.half_width / center : 0.0;

    const DataBatch batch = full_batch(test);
    const LogitAdjustment no_adj = LogitAdjustment::disabled();
    std::vector<double> losses(static_cast<std::size_t>(p) * p);
    for (int ia = 0; ia < p; ++ia) {
        const double a = (ia - center) * step;
        for (int ib = 0; ib < p; ++ib) {
            const double b = (ib - center) * step;
            ParamVector shifted = theta;
            if (a != 0.0) add_scaled(shifted, a, d1);
            if (b != 0.0) add_scaled(shifted, b, d2);
            losses[static_cast<std::size_t>(ia) * p + ib] = model.loss(shifted, batch, no_adj);
        }
    }
    return losses;
}

std::pair<ParamVector, ParamVector> random_directions(const ParamLayout& layout,
                                                      std::uint64_t seed) {
    const std::size_t n = layout.total();
    if (n < 2) throw ConfigError("random_directions: need at least 2 parameters");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < 32; ++attempt) {
        ParamVector d1{layout, std::vector<double>(n)};
        ParamVector d2{layout, std::vector<double>(n)};
        for (double& v : d1.values) v = unit(rng);
        for (double& v : d2.values) v = unit(rng);
        const double n1 = norm2(d1);
        if (n1 <= 1e-12) continue;
        for (double& v : d1.values) v /= n1;
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += d1.values[i] * d2.values[i];
        add_scaled(d2, -dot, d1);
        const double n2 = norm2(d2);
        if (n2 <= 1e-12) continue;
        for (double& v : d2.values) v /= n2;
        return {std::move(d1), std::move(d2)};
    }
    throw ConfigError("random_directions: degenerate draws");
}

}  // namespace fedism
