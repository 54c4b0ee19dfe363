#pragma once

#include <vector>

#include <Eigen/Cholesky>

#include "fastglz/fit_result.hpp"
#include "fastglz/glz_family.hpp"
#include "fastglz/problem_family.hpp"
#include "fastglz/types.hpp"

namespace fastglz {

/// X = Q Z with Q (p x r) orthonormal and Z (r x n), r = min(p, n).
/// P_Q = Q Q^T is never formed.
struct QrFactors {
    Matrix Q;
    Matrix Z;

    Index rank() const noexcept { return Q.cols(); }
};

/// Householder QR without pivoting. Rank-deficient X still factors with
/// r = min(p, n); the shift c > 0 of the template keeps the reduced systems
/// definite.
QrFactors thin_qr(const Matrix& X);

/// The shared matrix M = Z diag(r_template) Z^T + c I, factored once and
/// reused for every problem it serves.
class TemplateSystem {
public:
    const Vector& r_template() const noexcept { return r_template_; }
    double shift() const noexcept { return shift_; }
    const Matrix& matrix() const noexcept { return m_; }
    const Eigen::LLT<Matrix>& factor() const noexcept { return llt_; }
    /// M^{-1} Z, r x n.
    const Matrix& minv_z() const noexcept { return minv_z_; }

private:
    friend TemplateSystem build_template_from_diagonal(const Matrix& Z, Vector r_template,
                                                       double shift);
    Vector r_template_;
    double shift_ = 0.0;
    Matrix m_;
    Eigen::LLT<Matrix> llt_;
    Matrix minv_z_;
};

/// Template over the columns of r_cols (n x K, each a curvature diagonal):
/// r_template is their row-wise maximum. Requires c > 0.
TemplateSystem build_template(const Matrix& Z, const Matrix& r_cols, double shift);

/// Template from an explicit diagonal. Accepts shift == 0 for callers whose
/// Z already has full row rank under the weights (frequency-domain GLS);
/// factorization failure raises NumericalError.
TemplateSystem build_template_from_diagonal(const Matrix& Z, Vector r_template, double shift);

/// State of the batched splitting iteration for K reduced systems
///   (Z diag(r_k) Z^T + c I) alpha_k = rhs_k.
/// Right-hand sides are kept in reduced (r-dimensional) form, so additive
/// terms such as Q^T l_k are folded in by the caller.
struct NewtonBatch {
    Matrix alpha;    ///< r x K, initial guess on entry, solution on exit
    Matrix rhs;      ///< r x K
    Matrix r_delta;  ///< n x K, r_template - r_k (non-negative)
    /// Optional per-column relative tolerances; when non-empty they replace
    /// StationaryOptions::tol column by column.
    std::vector<double> tolerances;
    Index iterations_used = 0;      ///< max over columns
    std::vector<Index> iterations;  ///< per column
    std::vector<double> residuals;  ///< per column relative residual at exit
};

/// Fills r_delta from the template and the per-problem diagonals.
Matrix residual_diagonals(const TemplateSystem& t, const Matrix& r_cols);

struct StationaryOptions {
    double tol = 1e-9;
    Index max_iters = 500;
    int threads = 1;
};

/// Runs alpha <- M^{-1} Z (r_delta_k .* Z^T alpha) + M^{-1} rhs_k for every
/// column until ||G_k alpha_k - rhs_k|| <= tol * ||rhs_k||. Columns are
/// processed independently with a fixed accumulation order, so a column's
/// result does not depend on which other columns share the batch or on the
/// thread count. Throws ConvergenceError (with per-column residuals) when
/// max_iters is exhausted.
void stationary_solve_batch(const TemplateSystem& t, const Matrix& Z, NewtonBatch& batch,
                            const StationaryOptions& options = {});

/// Power-iteration estimate of the spectral radius of M^{-1} Z diag(r_template - r_k) Z^T.
double spectral_radius_estimate(const TemplateSystem& t, const Matrix& Z, const Vector& r_k,
                                Index iters = 200);

/// Options for the batched Newton minimisation of
///   F_k(alpha) = loss_k(Z^T alpha) + (shift / 2) ||alpha||^2 - beta_k^T alpha.
struct ReducedNewtonOptions {
    double shift = 0.0;
    double newton_tol = 1e-9;  ///< on ||grad F_k|| relative to max(1, scale_k)
    Index max_newton = 20;
    StationaryOptions solve;
};

struct ReducedNewtonReport {
    std::vector<Index> steps;      ///< Newton steps taken, per listed problem
    std::vector<double> gradient;  ///< final ||grad F_k||
    bool saturated = false;
};

/// Minimises F_k for the problems listed in `which` (indices into the columns
/// of alpha / beta / problems). All listed problems share one template per
/// relinearization. `beta` may be empty (treated as zero). `eta_lin`, when
/// non-null, receives the linear predictor of each problem's last full
/// Newton solve. Throws ConvergenceError if a problem exceeds max_newton.
ReducedNewtonReport reduced_newton_batch(const GlzFamily& family, const Matrix& Z,
                                         const ProblemFamily& problems,
                                         const std::vector<Index>& which, Matrix& alpha,
                                         const Matrix& beta, const std::vector<double>& scale,
                                         const ReducedNewtonOptions& options,
                                         Matrix* eta_lin = nullptr);

struct RidgeConfig {
    double lambda2 = 1.0;
    double newton_tol = 1e-9;
    Index max_newton = 50;
    StationaryOptions solve;
};

/// Elastic net with lambda1 = 0 for every problem: minimises
/// loss_k(X^T w) + lambda2 ||w||^2 with w = Q alpha. Weights are dense.
std::vector<FitResult> ridge_irls_fit(const Matrix& X, const GlzFamily& family,
                                      const ProblemFamily& problems, const RidgeConfig& config);

/// Same as above with a precomputed factorization of X.
std::vector<FitResult> ridge_irls_fit(const QrFactors& qr, const GlzFamily& family,
                                      const ProblemFamily& problems, const RidgeConfig& config);

}  // namespace fastglz
