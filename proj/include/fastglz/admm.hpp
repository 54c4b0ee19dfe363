#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fastglz/fit_result.hpp"
#include "fastglz/glz_family.hpp"
#include "fastglz/penalty.hpp"
#include "fastglz/problem_family.hpp"
#include "fastglz/simnewton.hpp"
#include "fastglz/types.hpp"

namespace fastglz {

struct AdmmConfig {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    /// Augmented-Lagrangian penalty. Defaults to 1 / max(lambda2, lambda1, 1e-3).
    std::optional<double> mu;
    /// Cap on |A_k|; 0 means p.
    Index s_max = 0;
    double outer_tol = 1e-7;   ///< relative objective change between cycles
    Index max_outer = 20000;
    double feas_tol = 1e-7;    ///< max |w_j - v_j| on A_k, relative to 1 + ||w||_inf
    double kkt_tol = 1e-6;
    double newton_tol = 1e-9;
    Index max_newton = 20;
    StationaryOptions solve;
    /// Disjoint feature groups for the group lasso; empty means plain l1.
    std::vector<std::vector<Index>> groups;
    /// When false every feature is active from the start (requires s_max >= p).
    bool screening = true;
    int threads = 1;

    double effective_mu() const;
    double rho() const { return lambda2 + 1.0 / (2.0 * effective_mu()); }
    /// Throws ValidationError on out-of-range values.
    void validate() const;
};

/// Optimality summary of one weight vector. For blocks with w_b = 0 the
/// gradient norm must not exceed lambda1; for the others the subgradient
/// equation g_b + 2 lambda2 w_b + lambda1 w_b / ||w_b|| = 0 must hold.
struct KktReport {
    double max_inactive_gradient = 0.0;  ///< max ||g_b|| over zero blocks
    double max_active_residual = 0.0;    ///< max subgradient residual over nonzero blocks
    double scale = 1.0;                  ///< max(1, ||grad loss(0)||_inf)

    bool satisfied(double lambda1, double tol) const {
        return max_inactive_gradient <= lambda1 * (1.0 + tol) && max_active_residual <= tol * scale;
    }
    /// max(active residual, excess of the inactive gradient over lambda1).
    double residual(double lambda1) const;
};

KktReport kkt_from_gradient(const Vector& loss_gradient, const Vector& w, double lambda1,
                            double lambda2, const BlockStructure& blocks);

/// Full KKT check of Eq. J(w) = loss(X^T w) + lambda1 * g(w) + lambda2 ||w||^2.
/// `scale` is computed from the gradient of the loss at zero.
KktReport kkt_report(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                     const Vector& w, double lambda1, double lambda2, const BlockStructure& blocks);

/// loss(X^T w) + penalty(w) + lambda2 ||w||^2.
double objective_value(const Matrix& X, const Vector& w, const GlzFamily& family,
                       const Vector& d, const Vector& y, double lambda1, double lambda2,
                       const BlockStructure& blocks);
double objective_value(const Matrix& X, const SparseVector& w, const GlzFamily& family,
                       const Vector& d, const Vector& y, const AdmmConfig& config);

/// Sequential strong rule for one problem. Keeps the support of w_prev and
/// adds blocks whose loss-gradient norm at w_prev exceeds
/// 2 * lambda1_new - lambda1_prev, largest first (ties by index), until s_max
/// features are used. Throws CapacityError if the support alone exceeds s_max.
/// Returns ascending feature indices.
std::vector<Index> strong_rule_screen(const Matrix& X, const GlzFamily& family, const Vector& d,
                                      const Vector& y, double lambda1_new, double lambda1_prev,
                                      const Vector& w_prev, Index s_max,
                                      const BlockStructure& blocks);

/// Peak bytes of the solver state for p features, n trials, active-set cap
/// s_max and K problems. Throws ValidationError on overflow.
std::uint64_t estimate_memory(std::uint64_t p, std::uint64_t n, std::uint64_t s_max,
                              std::uint64_t K);

/// Per-problem ADMM state outside the reduced coordinates (alpha_k = Q^T w_k
/// and beta_k = Q^T l_k live as columns of AdmmBatch::alpha() / beta()):
/// l_k and v_k restricted to the active set A_k.
struct AdmmProblemState {
    std::vector<Index> active;  ///< ascending feature indices
    std::vector<Index> block_ptr;  ///< CSR over the blocks of A_k ...
    std::vector<Index> block_pos;  ///< ... holding positions into `active`
    Vector l_active;            ///< aligned with `active`
    Vector v_active;            ///< aligned with `active`
    double objective = 0.0;
    double prev_objective = 0.0;
    double feasibility = 0.0;   ///< last max |w_j - v_j| over A_k
    bool has_prev = false;
    bool converged = false;
    bool saturated = false;
    Index cycles = 0;
    double kkt_residual = 0.0;
};

/// Owns the shared factorization and the per-problem states of one batch fit.
/// Not thread-safe; distinct batches are independent.
class AdmmBatch {
public:
    AdmmBatch(const Matrix& X, GlzFamily family, ProblemFamily problems, AdmmConfig config);

    Index features() const noexcept { return p_; }
    Index trials() const noexcept { return n_; }
    Index problems() const noexcept { return problems_.problems(); }
    const QrFactors& qr() const noexcept { return qr_; }
    const AdmmConfig& config() const noexcept { return config_; }
    const BlockStructure& blocks() const noexcept { return blocks_; }
    const ProblemFamily& problem_family() const noexcept { return problems_; }
    const AdmmProblemState& state(Index k) const { return states_.at(static_cast<std::size_t>(k)); }
    const Matrix& alpha() const noexcept { return alpha_; }
    const Matrix& beta() const noexcept { return beta_; }

    /// Per-problem max_j |d loss_k / d w_j| at w = 0.
    const std::vector<double>& null_gradient_max() const noexcept { return null_grad_max_; }

    /// Zero state (w = v = l = 0). Active sets come from the basic strong rule
    /// against each problem's own lambda_max, or all features if screening is off.
    void initialize();

    /// Changes lambda1, lambda2 and mu, keeping (v, multipliers) fixed, and
    /// marks every problem open again.
    void set_penalty(double lambda1, double lambda2, std::optional<double> mu = std::nullopt);

    /// Sequential strong rule against the current v for every problem, growing
    /// active sets as needed.
    void screen_sequential(double lambda1_prev);

    /// One ADMM cycle for the given problems (all open problems if empty).
    void cycle(const std::vector<Index>& which = {});

    /// Cycles until every problem converges or max_outer is reached.
    void solve();

    /// KKT check of the current v_k. Inactive violators are added to A_k (with a
    /// multiplier restart) and returned; an empty result for a problem whose
    /// active residual is within tolerance means it is optimal.
    std::vector<std::vector<Index>> kkt_check_and_expand(const std::vector<Index>& which);

    std::vector<FitResult> results() const;
    Vector weights_dense(Index k) const;

    /// Small-scale diagnostics: when enabled, the full l_k and the full w_k of
    /// the last w-step are kept alongside the reduced state.
    void enable_shadow(bool on);
    const Matrix& shadow_l() const noexcept { return shadow_l_; }
    const Matrix& shadow_w() const noexcept { return shadow_w_; }
    /// Linear predictor of each problem's last full Newton solve.
    const Matrix& eta_lin() const noexcept { return eta_lin_; }

private:
    void w_step(const std::vector<Index>& which);
    void update_after_w(Index k);
    void restart_with_gradient(Index k, const std::vector<Index>& new_active, const Vector& grad);
    void set_active(Index k, std::vector<Index> active, Vector l_active, Vector v_active);
    Vector eta_of_v(Index k) const;
    Matrix loss_gradients(const std::vector<Index>& which) const;
    double problem_objective(Index k) const;
    void check_capacity(std::size_t size) const;

    GlzFamily family_;
    ProblemFamily problems_;
    AdmmConfig config_;
    BlockStructure blocks_;
    Index p_ = 0;
    Index n_ = 0;
    Index s_max_ = 0;
    double mu_ = 1.0;
    double rho_ = 1.0;
    Matrix xt_;  ///< X^T (n x p), so row j of X is a contiguous column
    QrFactors qr_;
    Matrix qt_;  ///< Q^T (r x p)
    std::vector<AdmmProblemState> states_;
    Matrix alpha_;  ///< r x K
    Matrix beta_;   ///< r x K
    std::vector<double> scale_;         ///< ||Z e_k(0)||, Newton tolerance scale
    std::vector<double> kkt_scale_;     ///< max(1, ||X e_k(0)||_inf)
    std::vector<double> null_grad_max_;
    Matrix null_grad_;                  ///< X e_k(0), p x K
    Matrix eta_lin_;
    bool shadow_ = false;
    Matrix shadow_l_;
    Matrix shadow_w_;
};

/// Screening, ADMM cycles and KKT expansion for every problem at one
/// (lambda1, lambda2). Problems that do not converge within max_outer come
/// back with converged = false.
std::vector<FitResult> fastglz_fit(const Matrix& X, const GlzFamily& family,
                                   const ProblemFamily& problems, const AdmmConfig& config);

}  // namespace fastglz
