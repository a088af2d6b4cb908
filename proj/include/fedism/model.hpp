#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedism/common.hpp"
#include "fedism/data.hpp"

namespace fedism {

enum class Arch { softmax_linear, mlp1 };

struct ModelSpec {
    Arch arch = Arch::softmax_linear;
    int feature_dim = 0;
    int num_classes = 0;
    int hidden_units = 0;  // mlp1 only
    std::uint64_t init_seed = 0;
    double init_scale = 0.1;  // 0 gives all-zero parameters
};

/// Per-tensor {rows, cols} shapes; cols = 1 for bias vectors.
struct ParamLayout {
    std::vector<std::array<std::size_t, 2>> shapes;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& s : shapes) n += s[0] * s[1];
        return n;
    }
    bool operator==(const ParamLayout&) const = default;
};

/// Flat parameter vector; the theta passed between clients and server.
/// Value type, cheap to copy at this scale, safe to share across threads.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool finite() const;
};

/// y += a * x. Layout mismatch throws.
void add_scaled(ParamVector& y, double a, const ParamVector& x);
double norm2(const ParamVector& v);

/// Label-skew correction: when enabled, logits are shifted by
/// temperature * log(class_prior) before the softmax. class_prior is a
/// probability vector built from local label counts with a floor of one
/// pseudo-count per class, so every entry is strictly positive.
struct LogitAdjustment {
    bool enabled = false;
    std::vector<double> class_prior;
    double temperature = 1.0;

    static LogitAdjustment disabled() { return {}; }
    static LogitAdjustment from_label_counts(std::span<const int> labels, int num_classes,
                                             double temperature = 1.0);
};

/// Mini-batch view; features are row-major count x feature_dim.
struct DataBatch {
    std::span<const double> features;
    std::span<const int> labels;

    std::size_t size() const { return labels.size(); }
};

inline DataBatch full_batch(const Dataset& d) {
    return {std::span<const double>(d.features), std::span<const int>(d.labels)};
}

/// Small differentiable classifiers with analytic gradients.
/// softmax_linear: logits = W x + b. mlp1: tanh hidden layer.
/// Losses are mean cross-entropy so magnitudes do not depend on batch size.
class Model {
public:
    explicit Model(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    const ParamLayout& layout() const { return layout_; }

    /// Weights i.i.d. N(0, init_scale^2 / fan_in), biases zero.
    ParamVector init() const;

    /// Logits, row-major batch.size() x num_classes. No adjustment applied.
    std::vector<double> forward(const ParamVector& theta, DataBatch batch) const;

    double loss(const ParamVector& theta, DataBatch batch, const LogitAdjustment& adj) const;

    /// Exact analytic gradient of `loss`.
    ParamVector grad(const ParamVector& theta, DataBatch batch, const LogitAdjustment& adj) const;

    /// theta - lr * grad(theta). Throws DivergenceError on non-finite result.
    ParamVector sgd_step(const ParamVector& theta, DataBatch batch, double lr,
                         const LogitAdjustment& adj) const;

private:
    void check_batch(const ParamVector& theta, DataBatch batch) const;

    ModelSpec spec_;
    ParamLayout layout_;
};

/// Checkpoint format: 8-byte little-endian count, then count little-endian
/// IEEE-754 doubles. The layout travels separately (run manifest).
void save_checkpoint(const ParamVector& params, const std::filesystem::path& path);
ParamVector load_checkpoint(const std::filesystem::path& path, const ParamLayout& layout);

}  // namespace fedism
