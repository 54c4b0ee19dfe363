#pragma once

#include "fastglz/types.hpp"

namespace fastglz {

/// Solution of one problem of a batch.
struct FitResult {
    SparseVector weights;       ///< length p
    double objective = 0.0;     ///< loss + l1/group penalty + lambda2 * ||w||^2
    Index iterations = 0;       ///< Newton steps (ridge) or ADMM cycles at this penalty
    bool converged = false;
    Index active_size = 0;      ///< number of nonzero weights
    double kkt_residual = 0.0;  ///< worst optimality violation, absolute
    bool saturated = false;     ///< a Poisson predictor hit the exponent cap
};

}  // namespace fastglz
