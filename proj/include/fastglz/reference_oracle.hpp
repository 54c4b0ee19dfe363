#pragma once

#include <vector>

#include "fastglz/glz_family.hpp"
#include "fastglz/types.hpp"

// Plain full-space solvers used as ground truth for the batched machinery.
// Nothing here touches the QR reduction, the template splitting or the
// memory-reduced ADMM state.
namespace fastglz::oracle {

struct OracleConfig {
    double tol = 1e-10;
    Index max_iters = 200000;
    double shrink = 0.5;        ///< backtracking factor
    double initial_step = 1.0;  ///< first trial step of the line search

    void validate() const;
};

/// Solves (X diag(r) X^T + 2c I) w = X b + extra by a dense factorization,
/// with r and b taken from `lin`. `extra` may be empty. c = 0 with a singular
/// system raises NumericalError.
Vector dense_ridge_solve(const Matrix& X, const Linearization& lin, double c,
                         const Vector& extra = Vector());

/// Full-space Newton for loss(X^T w) + lambda2 ||w||^2, each step solved
/// with dense_ridge_solve, until the gradient max-norm is below tol * scale.
Vector dense_irls_fit(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                      double lambda2, const OracleConfig& config = {});

struct ProxGradResult {
    Vector w;
    double objective = 0.0;
    Index iterations = 0;
};

/// Accelerated proximal gradient (FISTA with backtracking and adaptive
/// restart) for loss(X^T w) + lambda1 * sum_b ||w_b|| + lambda2 ||w||^2.
/// `groups` lists the non-singleton blocks; empty means plain l1. Stops once
/// the optimality residual is below tol * max(1, ||X e(0)||_inf).
ProxGradResult prox_grad_fit(const Matrix& X, const GlzFamily& family, const Vector& d,
                             const Vector& y, double lambda1, double lambda2,
                             const OracleConfig& config = {},
                             const std::vector<std::vector<Index>>& groups = {},
                             const Vector& warm_start = Vector());

/// max over zero blocks of (||g_b|| - lambda1)_+ together with the
/// subgradient residual over nonzero blocks, g the loss gradient at w.
double optimality_residual(const Matrix& X, const GlzFamily& family, const Vector& d,
                           const Vector& y, const Vector& w, double lambda1, double lambda2,
                           const std::vector<std::vector<Index>>& groups = {});

struct TextbookAdmmConfig {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double mu = 1.0;
    double newton_tol = 1e-13;
    Index max_newton = 100;
};

/// State after one cycle of the unmodified augmented-Lagrangian steps.
struct TextbookIterate {
    Vector w;
    Vector v;
    Vector multiplier_mid;  ///< after the first multiplier update
    Vector multiplier;      ///< after the second multiplier update
};

/// Runs n_cycles of: w <- argmin_w L(w, v); m <- m - (w - v)/mu;
/// v <- argmin_v L(w, v); m <- m - (w - v)/mu, where
/// L = loss + lambda2 ||w||^2 + lambda1 ||v||_1 - m^T (w - v) + ||w - v||^2 / (2 mu).
/// The w-minimization is a dense Newton solve to newton_tol.
std::vector<TextbookIterate> textbook_admm_steps(const Matrix& X, const GlzFamily& family,
                                                 const Vector& d, const Vector& y,
                                                 const TextbookAdmmConfig& config, Index n_cycles,
                                                 const Vector& w0, const Vector& v0,
                                                 const Vector& multiplier0);

}  // namespace fastglz::oracle
