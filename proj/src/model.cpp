#include "fedism/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace fedism {
namespace {

ParamLayout make_layout(const ModelSpec& spec) {
    const auto d = static_cast<std::size_t>(spec.feature_dim);
    const auto c = static_cast<std::size_t>(spec.num_classes);
    const auto h = static_cast<std::size_t>(spec.hidden_units);
    ParamLayout layout;
    if (spec.arch == Arch::softmax_linear) {
        layout.shapes = {{c, d}, {c, 1}};
    } else {
        layout.shapes = {{h, d}, {h, 1}, {c, h}, {c, 1}};
    }
    return layout;
}

std::vector<double> logit_shift(const LogitAdjustment& adj, int num_classes) {
    std::vector<double> shift;
    if (!adj.enabled) return shift;
    shift.resize(num_classes);
    for (int c = 0; c < num_classes; ++c)
        shift[c] = adj.temperature * std::log(adj.class_prior[c]);
    return shift;
}

/// Row-wise softmax in place with max subtraction; returns mean CE loss
/// against labels, optionally with a precomputed logit shift.
double softmax_ce_inplace(std::vector<double>& logits, std::span<const int> labels, int num_classes,
                          const std::vector<double>& shift) {
    const std::size_t n = labels.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double* z = logits.data() + i * num_classes;
        if (!shift.empty())
            for (int c = 0; c < num_classes; ++c) z[c] += shift[c];
        double zmax = z[0];
        for (int c = 1; c < num_classes; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            z[c] = std::exp(z[c] - zmax);
            sum += z[c];
        }
        for (int c = 0; c < num_classes; ++c) z[c] /= sum;
        total += -std::log(std::max(z[labels[i]], 1e-300));
    }
    return total / static_cast<double>(n);
}

}  // namespace

bool ParamVector::finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void add_scaled(ParamVector& y, double a, const ParamVector& x) {
    if (y.layout != x.layout || y.values.size() != x.values.size())
        throw ConfigError("add_scaled: parameter layouts differ");
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

double norm2(const ParamVector& v) {
    double s = 0.0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

LogitAdjustment LogitAdjustment::from_label_counts(std::span<const int> labels, int num_classes,
                                                   double temperature) {
    if (num_classes < 2) throw ConfigError("logit adjustment: num_classes must be >= 2");
    LogitAdjustment adj;
    adj.enabled = true;
    adj.temperature = temperature;
    std::vector<double> counts(num_classes, 1.0);  // one pseudo-count floor
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw ConfigError("logit adjustment: label out of range");
        counts[y] += 1.0;
    }
    const double total = static_cast<double>(labels.size()) + num_classes;
    adj.class_prior.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) adj.class_prior[c] = counts[c] / total;
    return adj;
}

Model::Model(ModelSpec spec) : spec_(spec) {
    if (spec_.feature_dim < 1) throw ConfigError("model: feature_dim must be >= 1");
    if (spec_.num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
    if (spec_.arch == Arch::mlp1 && spec_.hidden_units < 1)
        throw ConfigError("model: mlp1 needs hidden_units >= 1");
    if (spec_.init_scale < 0.0) throw ConfigError("model: init_scale must be >= 0");
    layout_ = make_layout(spec_);
}

ParamVector Model::init() const {
    ParamVector theta{layout_, std::vector<double>(layout_.total(), 0.0)};
    if (spec_.init_scale == 0.0) return theta;
    std::mt19937_64 rng(spec_.init_seed);
    std::size_t off = 0;
    for (const auto& shape : layout_.shapes) {
        const std::size_t count = shape[0] * shape[1];
        if (shape[1] > 1) {  // weight matrix, fan_in = cols
            std::normal_distribution<double> dist(0.0, spec_.init_scale / std::sqrt(static_cast<double>(shape[1])));
            for (std::size_t i = 0; i < count; ++i) theta.values[off + i] = dist(rng);
        }
        off += count;  // biases stay zero
    }
    return theta;
}

void Model::check_batch(const ParamVector& theta, DataBatch batch) const {
    if (theta.layout != layout_) throw ConfigError("model: parameter layout mismatch");
    if (theta.values.size() != layout_.total()) throw ConfigError("model: parameter size mismatch");
    if (batch.size() == 0) throw ConfigError("model: empty batch");
    if (batch.features.size() != batch.size() * static_cast<std::size_t>(spec_.feature_dim))
        throw ConfigError("model: batch feature size mismatch");
    for (int y : batch.labels)
        if (y < 0 || y >= spec_.num_classes) throw ConfigError("model: label out of range");
}

std::vector<double> Model::forward(const ParamVector& theta, DataBatch batch) const {
    check_batch(theta, batch);
    const std::size_t n = batch.size();
    const int d = spec_.feature_dim;
    const int c = spec_.num_classes;
    std::vector<double> logits(n * c, 0.0);

    if (spec_.arch == Arch::softmax_linear) {
        const double* w = theta.values.data();          // c x d
        const double* b = w + static_cast<std::size_t>(c) * d;
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = batch.features.data() + i * d;
            double* z = logits.data() + i * c;
            for (int j = 0; j < c; ++j) {
                double s = b[j];
                const double* wj = w + static_cast<std::size_t>(j) * d;
                for (int e = 0; e < d; ++e) s += wj[e] * x[e];
                z[j] = s;
            }
        }
        return logits;
    }

    const int h = spec_.hidden_units;
    const double* w1 = theta.values.data();                                   // h x d
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;                  // h
    const double* w2 = b1 + h;                                               // c x h
    const double* b2 = w2 + static_cast<std::size_t>(c) * h;                  // c
    std::vector<double> hidden(h);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = batch.features.data() + i * d;
        for (int j = 0; j < h; ++j) {
            double s = b1[j];
            const double* wj = w1 + static_cast<std::size_t>(j) * d;
            for (int e = 0; e < d; ++e) s += wj[e] * x[e];
            hidden[j] = std::tanh(s);
        }
        double* z = logits.data() + i * c;
        for (int j = 0; j < c; ++j) {
            double s = b2[j];
            const double* wj = w2 + static_cast<std::size_t>(j) * h;
            for (int e = 0; e < h; ++e) s += wj[e] * hidden[e];
            z[j] = s;
        }
    }
    return logits;
}

double Model::loss(const ParamVector& theta, DataBatch batch, const LogitAdjustment& adj) const {
    if (adj.enabled && static_cast<int>(adj.class_prior.size()) != spec_.num_classes)
        throw ConfigError("model: adjustment prior size mismatch");
    std::vector<double> logits = forward(theta, batch);
    return softmax_ce_inplace(logits, batch.labels, spec_.num_classes,
                              logit_shift(adj, spec_.num_classes));
}

ParamVector Model::grad(const ParamVector& theta, DataBatch batch, const LogitAdjustment& adj) const {
    if (adj.enabled && static_cast<int>(adj.class_prior.size()) != spec_.num_classes)
        throw ConfigError("model: adjustment prior size mismatch");
    const std::size_t n = batch.size();
    const int d = spec_.feature_dim;
    const int c = spec_.num_classes;

    std::vector<double> probs = forward(theta, batch);
    softmax_ce_inplace(probs, batch.labels, c, logit_shift(adj, c));

    // dL/dz = (softmax - onehot) / n, shared by both architectures.
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double* p = probs.data() + i * c;
        p[batch.labels[i]] -= 1.0;
        for (int j = 0; j < c; ++j) p[j] *= inv_n;
    }

    ParamVector g{layout_, std::vector<double>(layout_.total(), 0.0)};

    if (spec_.arch == Arch::softmax_linear) {
        double* gw = g.values.data();
        double* gb = gw + static_cast<std::size_t>(c) * d;
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = batch.features.data() + i * d;
            const double* dz = probs.data() + i * c;
            for (int j = 0; j < c; ++j) {
                double* gwj = gw + static_cast<std::size_t>(j) * d;
                for (int e = 0; e < d; ++e) gwj[e] += dz[j] * x[e];
                gb[j] += dz[j];
            }
        }
        return g;
    }

    const int h = spec_.hidden_units;
    const double* w1 = theta.values.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    double* gw1 = g.values.data();
    double* gb1 = gw1 + static_cast<std::size_t>(h) * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + static_cast<std::size_t>(c) * h;

    std::vector<double> hidden(h), dh(h);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = batch.features.data() + i * d;
        for (int j = 0; j < h; ++j) {
            double s = b1[j];
            const double* wj = w1 + static_cast<std::size_t>(j) * d;
            for (int e = 0; e < d; ++e) s += wj[e] * x[e];
            hidden[j] = std::tanh(s);
        }
        const double* dz = probs.data() + i * c;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (int j = 0; j < c; ++j) {
            double* gwj = gw2 + static_cast<std::size_t>(j) * h;
            const double* wj = w2 + static_cast<std::size_t>(j) * h;
            for (int e = 0; e < h; ++e) {
                gwj[e] += dz[j] * hidden[e];
                dh[e] += dz[j] * wj[e];
            }
            gb2[j] += dz[j];
        }
        for (int j = 0; j < h; ++j) {
            const double da = dh[j] * (1.0 - hidden[j] * hidden[j]);
            double* gwj = gw1 + static_cast<std::size_t>(j) * d;
            for (int e = 0; e < d; ++e) gwj[e] += da * x[e];
            gb1[j] += da;
        }
    }
    return g;
}

ParamVector Model::sgd_step(const ParamVector& theta, DataBatch batch, double lr,
                            const LogitAdjustment& adj) const {
    ParamVector g = grad(theta, batch, adj);
    ParamVector next = theta;
    add_scaled(next, -lr, g);
    if (!next.finite()) throw DivergenceError("sgd step produced non-finite parameters");
    return next;
}

void save_checkpoint(const ParamVector& params, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little && sizeof(double) == 8);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("save_checkpoint: cannot open " + path.string());
    const std::uint64_t count = params.values.size();
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(params.values.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) throw ConfigError("save_checkpoint: write failed for " + path.string());
}

ParamVector load_checkpoint(const std::filesystem::path& path, const ParamLayout& layout) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("load_checkpoint: cannot open " + path.string());
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in) throw ConfigError("load_checkpoint: truncated header in " + path.string());
    if (count != layout.total())
        throw ConfigError("load_checkpoint: " + path.string() + " holds " + std::to_string(count) +
                          " values, layout expects " + std::to_string(layout.total()));
    ParamVector params{layout, std::vector<double>(count)};
    in.read(reinterpret_cast<char*>(params.values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw ConfigError("load_checkpoint: truncated payload in " + path.string());
    return params;
}

}  // namespace fedism
