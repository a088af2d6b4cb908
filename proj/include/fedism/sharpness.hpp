#pragma once

#include "fedism/model.hpp"

namespace fedism {

/// Loss-surface state of a model at search distance rho:
/// perturbed_loss = base_loss + sharpness by construction, and rho = 0
/// collapses to sharpness = 0, perturbed_loss = base_loss exactly.
struct StateAssessment {
    double rho = 0.0;
    double sharpness = 0.0;
    double perturbed_loss = 0.0;
    double base_loss = 0.0;
};

/// Guard below which a gradient counts as zero and the perturbation
/// degenerates to the zero vector (the analytically consistent limit).
inline constexpr double kGradNormEps = 1e-12;

/// rho * g / ||g||2, or zero when rho = 0 or ||g||2 <= kGradNormEps.
ParamVector optimal_perturbation(const ParamVector& grad, double rho);

/// First-order sharpness estimate on one batch: perturb along the batch
/// gradient, re-evaluate the loss, report the difference.
StateAssessment assess(const Model& model, const ParamVector& theta, DataBatch batch,
                       double rho, const LogitAdjustment& adj);

/// One sharpness-aware local training step: descend the gradient taken at
/// theta + optimal_perturbation. gsam_alpha > 0 additionally ascends along
/// the component of the unperturbed gradient orthogonal to the perturbed
/// one; gsam_alpha = 0 is the plain two-step update.
ParamVector salt_step(const Model& model, const ParamVector& theta, DataBatch batch,
                      double lr, double rho, const LogitAdjustment& adj,
                      double gsam_alpha = 0.0);

/// Whole-shard assessment: sample-weighted mean loss and mean gradient over
/// mini-batches, one perturbation from the mean gradient, then the perturbed
/// loss in a second pass. Result does not depend on batch_size.
StateAssessment client_assessment(const Model& model, const ParamVector& theta,
                                  const Dataset& shard, double rho,
                                  const LogitAdjustment& adj, int batch_size);

}  // namespace fedism
