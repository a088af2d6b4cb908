#include "fedism/sharpness.hpp"

#include <cmath>

namespace fedism {
namespace {

void check_finite(const StateAssessment& a) {
    if (!std::isfinite(a.base_loss) || !std::isfinite(a.perturbed_loss))
        throw DivergenceError("non-finite loss during state assessment");
}

}  // namespace

ParamVector optimal_perturbation(const ParamVector& grad, double rho) {
    if (rho < 0.0) throw ConfigError("optimal_perturbation: rho must be >= 0");
    ParamVector eps{grad.layout, std::vector<double>(grad.values.size(), 0.0)};
    if (rho == 0.0) return eps;
    const double gnorm = norm2(grad);
    if (gnorm <= kGradNormEps) return eps;
    const double scale = rho / gnorm;
    for (std::size_t i = 0; i < grad.values.size(); ++i) eps.values[i] = scale * grad.values[i];
    return eps;
}

StateAssessment assess(const Model& model, const ParamVector& theta, DataBatch batch,
                       double rho, const LogitAdjustment& adj) {
    StateAssessment out;
    out.rho = rho;
    out.base_loss = model.loss(theta, batch, adj);
    if (rho == 0.0) {
        out.sharpness = 0.0;
        out.perturbed_loss = out.base_loss;
        check_finite(out);
        return out;
    }
    const ParamVector g = model.grad(theta, batch, adj);
    ParamVector shifted = theta;
    add_scaled(shifted, 1.0, optimal_perturbation(g, rho));
    out.perturbed_loss = model.loss(shifted, batch, adj);
    out.sharpness = out.perturbed_loss - out.base_loss;
    check_finite(out);
    return out;
}

ParamVector salt_step(const Model& model, const ParamVector& theta, DataBatch batch,
                      double lr, double rho, const LogitAdjustment& adj, double gsam_alpha) {
    // rho = 0 adds an exact zero perturbation, so the update reduces to the
    // plain gradient step bit for bit.
    const ParamVector g = model.grad(theta, batch, adj);
    ParamVector shifted = theta;
    add_scaled(shifted, 1.0, optimal_perturbation(g, rho));
    const ParamVector gp = model.grad(shifted, batch, adj);

    ParamVector next = theta;
    add_scaled(next, -lr, gp);
    if (gsam_alpha != 0.0) {
        const double gp_norm = norm2(gp);
        if (gp_norm > kGradNormEps) {
            double dot = 0.0;
            for (std::size_t i = 0; i < g.values.size(); ++i) dot += g.values[i] * gp.values[i];
            const double proj = dot / (gp_norm * gp_norm);
            ParamVector orth = g;
            add_scaled(orth, -proj, gp);
            add_scaled(next, lr * gsam_alpha, orth);
        }
    }
    if (!next.finite()) throw DivergenceError("salt step produced non-finite parameters");
    return next;
}

StateAssessment client_assessment(const Model& model, const ParamVector& theta,
                                  const Dataset& shard, double rho,
                                  const LogitAdjustment& adj, int batch_size) {
    if (shard.size() == 0) throw ConfigError("client_assessment: empty shard");
    if (batch_size < 1) throw ConfigError("client_assessment: batch_size must be >= 1");

    const std::size_t n = shard.size();
    const std::size_t d = static_cast<std::size_t>(shard.feature_dim);
    const std::size_t step = static_cast<std::size_t>(batch_size);

    StateAssessment out;
    out.rho = rho;

    ParamVector mean_grad{model.layout(), std::vector<double>(model.layout().total(), 0.0)};
    double base = 0.0;
    for (std::size_t start = 0; start < n; start += step) {
        const std::size_t count = std::min(step, n - start);
        DataBatch batch{{shard.features.data() + start * d, count * d},
                        {shard.labels.data() + start, count}};
        const double wt = static_cast<double>(count) / static_cast<double>(n);
        base += wt * model.loss(theta, batch, adj);
        add_scaled(mean_grad, wt, model.grad(theta, batch, adj));
    }
    out.base_loss = base;
    if (rho == 0.0) {
        out.sharpness = 0.0;
        out.perturbed_loss = base;
        check_finite(out);
        return out;
    }

    ParamVector shifted = theta;
    add_scaled(shifted, 1.0, optimal_perturbation(mean_grad, rho));
    double perturbed = 0.0;
    for (std::size_t start = 0; start < n; start += step) {
        const std::size_t count = std::min(step, n - start);
        DataBatch batch{{shard.features.data() + start * d, count * d},
                        {shard.labels.data() + start, count}};
        perturbed += static_cast<double>(count) / static_cast<double>(n) *
                     model.loss(shifted, batch, adj);
    }
    out.perturbed_loss = perturbed;
    out.sharpness = perturbed - base;
    check_finite(out);
    return out;
}

}  // namespace fedism
