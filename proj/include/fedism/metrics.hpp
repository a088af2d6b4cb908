#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fedism/model.hpp"

namespace fedism {

/// Clean / corrupted / average metrics plus the per-client breakdown used
/// for the fairness std. Each client is scored on the full test set that
/// matches its quality attribute.
struct EvalReport {
    double acc_clean = 0.0, auc_clean = 0.0;
    double acc_corrupted = 0.0, auc_corrupted = 0.0;
    double acc_avg = 0.0, auc_avg = 0.0;
    std::vector<double> per_client_acc;
    std::vector<double> per_client_auc;
    double client_std_acc = 0.0;
    double client_std_auc = 0.0;
};

/// Fraction of argmax-correct predictions; ties go to the lowest class index.
double accuracy(const Model& model, const ParamVector& theta, const Dataset& test,
                const LogitAdjustment& adj);

/// Mann-Whitney rank AUC of scores against binary labels; tied scores earn
/// half credit. Exposed for the monotone-transform property tests.
double rank_auc(std::span<const double> scores, std::span<const int> positive);

/// One-vs-rest AUC per class present in the labels, macro-averaged.
/// Throws UndefinedMetricError when fewer than two classes are present.
double macro_auc(const Model& model, const ParamVector& theta, const Dataset& test);

EvalReport evaluate(const Model& model, const ParamVector& theta, const Dataset& clean_test,
                    const Dataset& corrupted_test, std::span<const Quality> client_attributes,
                    const LogitAdjustment& adj);

/// Symmetric grid around theta: points_per_axis odd so the center cell is
/// the unperturbed loss.
struct GridSpec {
    double half_width = 0.1;
    int points_per_axis = 9;
};

/// Loss at theta + a*d1 + b*d2 over the grid, row-major (a index major).
std::vector<double> landscape_slice(const Model& model, const ParamVector& theta,
                                    const Dataset& test, const ParamVector& d1,
                                    const ParamVector& d2, const GridSpec& grid);

/// Two random Gaussian directions, orthonormalized.
std::pair<ParamVector, ParamVector> random_directions(const ParamLayout& layout,
                                                      std::uint64_t seed);

}  // namespace fedism
