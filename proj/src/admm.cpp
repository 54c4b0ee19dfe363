#include "fastglz/admm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fastglz/error.hpp"
#include "parallel.hpp"

namespace fastglz {

namespace {

double block_norm(const Vector& g, std::span<const Index> members) {
    if (members.size() == 1) return std::abs(g[members[0]]);
    double sq = 0.0;
    for (Index j : members) sq += g[j] * g[j];
    return std::sqrt(sq);
}

// Strong-rule selection on a precomputed loss gradient. `support` holds the
// features that must stay (ascending).
std::vector<Index> screen_from_gradient(const Vector& grad, const std::vector<Index>& support,
                                        double lambda1_new, double lambda1_prev, Index s_max,
                                        const BlockStructure& blocks) {
    std::vector<char> required(static_cast<std::size_t>(blocks.blocks()), 0);
    Index used = 0;
    for (Index j : support) {
        const Index b = blocks.block_of(j);
        if (!required[static_cast<std::size_t>(b)]) {
            required[static_cast<std::size_t>(b)] = 1;
            used += static_cast<Index>(blocks.members(b).size());
        }
    }
    if (used > s_max) {
        throw CapacityError("current support has " + std::to_string(used) +
                            " features, more than s_max = " + std::to_string(s_max) +
                            "; raise s_max or lambda1");
    }

    const double threshold = 2.0 * lambda1_new - lambda1_prev;
    std::vector<std::pair<double, Index>> candidates;
    for (Index b = 0; b < blocks.blocks(); ++b) {
        if (required[static_cast<std::size_t>(b)]) continue;
        const double norm = block_norm(grad, blocks.members(b));
        if (norm > threshold) candidates.emplace_back(norm, b);
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (const auto& [norm, b] : candidates) {
        const auto size = static_cast<Index>(blocks.members(b).size());
        if (used + size > s_max) break;
        required[static_cast<std::size_t>(b)] = 1;
        used += size;
    }

    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(used));
    for (Index b = 0; b < blocks.blocks(); ++b) {
        if (!required[static_cast<std::size_t>(b)]) continue;
        for (Index j : blocks.members(b)) out.push_back(j);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

double AdmmConfig::effective_mu() const {
    if (mu) return *mu;
    return 1.0 / std::max({lambda2, lambda1, 1e-3});
}

void AdmmConfig::validate() const {
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) throw ValidationError("lambda1 must be >= 0");
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) throw ValidationError("lambda2 must be >= 0");
    if (mu && !(*mu > 0.0 && std::isfinite(*mu))) throw ValidationError("mu must be > 0");
    if (s_max < 0) throw ValidationError("s_max must be >= 0");
    if (!(outer_tol > 0.0) || !(feas_tol > 0.0) || !(kkt_tol > 0.0) || !(newton_tol > 0.0)) {
        throw ValidationError("tolerances must be positive");
    }
    if (max_outer < 1 || max_newton < 1) throw ValidationError("iteration limits must be >= 1");
    if (threads < 1) throw ValidationError("thread count must be >= 1");
}

double KktReport::residual(double lambda1) const {
    return std::max(max_active_residual, std::max(0.0, max_inactive_gradient - lambda1));
}

KktReport kkt_from_gradient(const Vector& loss_gradient, const Vector& w, double lambda1,
                            double lambda2, const BlockStructure& blocks) {
    KktReport report;
    if (blocks.all_singletons()) {
        for (Index j = 0; j < w.size(); ++j) {
            const double g = loss_gradient[j];
            if (w[j] == 0.0) {
                report.max_inactive_gradient = std::max(report.max_inactive_gradient, std::abs(g));
            } else {
                const double sign = w[j] > 0.0 ? 1.0 : -1.0;
                const double res = std::abs(g + 2.0 * lambda2 * w[j] + lambda1 * sign);
                report.max_active_residual = std::max(report.max_active_residual, res);
            }
        }
        return report;
    }
    for (Index b = 0; b < blocks.blocks(); ++b) {
        const auto members = blocks.members(b);
        const double wnorm = block_norm(w, members);
        if (wnorm == 0.0) {
            report.max_inactive_gradient =
                std::max(report.max_inactive_gradient, block_norm(loss_gradient, members));
            continue;
        }
        double sq = 0.0;
        for (Index j : members) {
            const double res = loss_gradient[j] + 2.0 * lambda2 * w[j] + lambda1 * w[j] / wnorm;
            sq += res * res;
        }
        report.max_active_residual = std::max(report.max_active_residual, std::sqrt(sq));
    }
    return report;
}

KktReport kkt_report(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                     const Vector& w, double lambda1, double lambda2, const BlockStructure& blocks) {
    const Vector eta = X.transpose() * w;
    const Vector grad = X * loss_gradient_eta(family, eta, d, y);
    KktReport report = kkt_from_gradient(grad, w, lambda1, lambda2, blocks);
    const Vector grad0 = X * loss_gradient_eta(family, Vector::Zero(X.cols()), d, y);
    report.scale = std::max(1.0, grad0.cwiseAbs().maxCoeff());
    return report;
}

double objective_value(const Matrix& X, const Vector& w, const GlzFamily& family,
                       const Vector& d, const Vector& y, double lambda1, double lambda2,
                       const BlockStructure& blocks) {
    if (w.size() != X.rows()) throw DimensionError("weight vector does not match X");
    const Vector eta = X.transpose() * w;
    return negloglik(family, eta, d, y) + blocks.penalty(w, lambda1) + lambda2 * w.squaredNorm();
}

double objective_value(const Matrix& X, const SparseVector& w, const GlzFamily& family,
                       const Vector& d, const Vector& y, const AdmmConfig& config) {
    const BlockStructure blocks = config.groups.empty()
                                      ? BlockStructure::singletons(X.rows())
                                      : BlockStructure::from_groups(X.rows(), config.groups);
    return objective_value(X, Vector(w), family, d, y, config.lambda1, config.lambda2, blocks);
}

std::vector<Index> strong_rule_screen(const Matrix& X, const GlzFamily& family, const Vector& d,
                                      const Vector& y, double lambda1_new, double lambda1_prev,
                                      const Vector& w_prev, Index s_max,
                                      const BlockStructure& blocks) {
    if (lambda1_new > lambda1_prev) {
        throw ValidationError("strong rule expects lambda1_new <= lambda1_prev");
    }
    const Vector eta = X.transpose() * w_prev;
    const Vector grad = X * loss_gradient_eta(family, eta, d, y);
    std::vector<Index> support;
    for (Index j = 0; j < w_prev.size(); ++j) {
        if (w_prev[j] != 0.0) support.push_back(j);
    }
    return screen_from_gradient(grad, support, lambda1_new, lambda1_prev, s_max, blocks);
}

std::uint64_t estimate_memory(std::uint64_t p, std::uint64_t n, std::uint64_t s_max,
                              std::uint64_t K) {
    if (p == 0 || n == 0) throw ValidationError("p and n must be >= 1");
    auto mul = [](std::uint64_t a, std::uint64_t b) {
        std::uint64_t out;
        if (__builtin_mul_overflow(a, b, &out)) throw ValidationError("memory estimate overflows");
        return out;
    };
    auto add = [](std::uint64_t a, std::uint64_t b) {
        std::uint64_t out;
        if (__builtin_add_overflow(a, b, &out)) throw ValidationError("memory estimate overflows");
        return out;
    };
    const std::uint64_t m = std::min(p, n);
    const std::uint64_t per_problem = add(add(add(mul(64, s_max), mul(40, n)), mul(32, m)), 40);
    std::uint64_t total = mul(per_problem, K);
    total = add(total, mul(mul(8, p), n));
    total = add(total, mul(mul(24, n), m));
    total = add(total, mul(mul(16, m), m));
    return total;
}

// ---------------------------------------------------------------------------

AdmmBatch::AdmmBatch(const Matrix& X, GlzFamily family, ProblemFamily problems, AdmmConfig config)
    : family_(std::move(family)), problems_(std::move(problems)), config_(std::move(config)) {
    config_.validate();
    validate_problem_family(problems_, family_);
    if (X.cols() != problems_.trials()) {
        throw DimensionError("data matrix has " + std::to_string(X.cols()) + " trials, family has " +
                             std::to_string(problems_.trials()));
    }
    p_ = X.rows();
    n_ = X.cols();
    blocks_ = config_.groups.empty() ? BlockStructure::singletons(p_)
                                     : BlockStructure::from_groups(p_, config_.groups);
    s_max_ = config_.s_max == 0 ? p_ : std::min(config_.s_max, p_);
    if (!config_.screening && s_max_ < p_) {
        throw ValidationError("screening disabled requires s_max >= p");
    }
    mu_ = config_.effective_mu();
    rho_ = config_.rho();

    xt_ = X.transpose();
    qr_ = thin_qr(X);
    qt_ = qr_.Q.transpose();

    const Index K = problems_.problems();
    Matrix e0(n_, K);
    for (Index k = 0; k < K; ++k) {
        e0.col(k) = loss_gradient_eta(family_, Vector::Zero(n_), problems_.weights.col(k),
                                      problems_.responses.col(k));
    }
    // Column by column (matrix-vector products), so a problem's numbers never
    // depend on its position in the batch or on the batch width.
    null_grad_.resize(p_, K);
    for (Index k = 0; k < K; ++k) null_grad_.col(k).noalias() = xt_.transpose() * e0.col(k);
    scale_.resize(static_cast<std::size_t>(K));
    kkt_scale_.resize(static_cast<std::size_t>(K));
    null_grad_max_.resize(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        scale_[sk] = (qr_.Z * e0.col(k)).norm();
        kkt_scale_[sk] = std::max(1.0, null_grad_.col(k).cwiseAbs().maxCoeff());
        double mx = 0.0;
        const Vector g = null_grad_.col(k);
        for (Index b = 0; b < blocks_.blocks(); ++b) mx = std::max(mx, block_norm(g, blocks_.members(b)));
        null_grad_max_[sk] = mx;
    }
    eta_lin_ = Matrix::Zero(n_, K);
    initialize();
}

void AdmmBatch::check_capacity(std::size_t size) const {
    if (static_cast<Index>(size) > s_max_) {
        throw CapacityError("active set needs " + std::to_string(size) + " features, more than s_max = " +
                            std::to_string(s_max_) + "; raise s_max or lambda1");
    }
}

void AdmmBatch::set_active(Index k, std::vector<Index> active, Vector l_active, Vector v_active) {
    AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
    st.active = std::move(active);
    st.l_active = std::move(l_active);
    st.v_active = std::move(v_active);
    st.block_ptr.assign(1, 0);
    st.block_pos.clear();
    // Group positions of A_k by block; blocks are whole, so every member of a
    // block that appears is present.
    std::vector<Index> seen;
    for (std::size_t pos = 0; pos < st.active.size(); ++pos) {
        const Index b = blocks_.block_of(st.active[pos]);
        if (blocks_.members(b).size() == 1) {
            st.block_pos.push_back(static_cast<Index>(pos));
            st.block_ptr.push_back(static_cast<Index>(st.block_pos.size()));
            continue;
        }
        if (std::find(seen.begin(), seen.end(), b) != seen.end()) continue;
        seen.push_back(b);
        for (Index j : blocks_.members(b)) {
            const auto it = std::lower_bound(st.active.begin(), st.active.end(), j);
            if (it == st.active.end() || *it != j) {
                throw ValidationError("active set splits a feature group");
            }
            st.block_pos.push_back(static_cast<Index>(it - st.active.begin()));
        }
        st.block_ptr.push_back(static_cast<Index>(st.block_pos.size()));
    }
}

void AdmmBatch::initialize() {
    const Index K = problems_.problems();
    const Index r = qr_.rank();
    states_.assign(static_cast<std::size_t>(K), AdmmProblemState{});
    alpha_ = Matrix::Zero(r, K);
    beta_ = Matrix::Zero(r, K);
    for (Index k = 0; k < K; ++k) {
        std::vector<Index> active;
        if (config_.screening) {
            active = screen_from_gradient(null_grad_.col(k), {}, config_.lambda1,
                                          null_grad_max_[static_cast<std::size_t>(k)], s_max_, blocks_);
        } else {
            active.resize(static_cast<std::size_t>(p_));
            std::iota(active.begin(), active.end(), Index{0});
        }
        const auto s = static_cast<Index>(active.size());
        set_active(k, std::move(active), Vector::Zero(s), Vector::Zero(s));
    }
    if (shadow_) {
        shadow_l_ = Matrix::Zero(p_, K);
        shadow_w_ = Matrix::Zero(p_, K);
    }
}

void AdmmBatch::enable_shadow(bool on) {
    shadow_ = on;
    if (!on) {
        shadow_l_.resize(0, 0);
        shadow_w_.resize(0, 0);
        return;
    }
    // Materialize l_k from the stored pieces. Only valid while the implicit
    // off-A_k part of l_k is zero, i.e. right after initialize().
    const Index K = problems_.problems();
    shadow_l_ = Matrix::Zero(p_, K);
    shadow_w_ = Matrix::Zero(p_, K);
    for (Index k = 0; k < K; ++k) {
        const AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < st.active.size(); ++i) {
            shadow_l_(st.active[i], k) = st.l_active[static_cast<Index>(i)];
        }
    }
}

void AdmmBatch::set_penalty(double lambda1, double lambda2, std::optional<double> mu) {
    AdmmConfig next = config_;
    next.lambda1 = lambda1;
    next.lambda2 = lambda2;
    next.mu = mu;
    next.validate();
    const double mu_new = next.effective_mu();
    const double delta = 1.0 / mu_new - 1.0 / mu_;
    // Multipliers and v are kept, so l = multiplier + v / mu shifts with mu.
    for (Index k = 0; k < problems_.problems(); ++k) {
        AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        if (delta != 0.0) {
            for (std::size_t i = 0; i < st.active.size(); ++i) {
                const double v = st.v_active[static_cast<Index>(i)];
                if (v == 0.0) continue;
                st.l_active[static_cast<Index>(i)] += delta * v;
                beta_.col(k) += (delta * v) * qt_.col(st.active[i]);
                if (shadow_) shadow_l_(st.active[i], k) += delta * v;
            }
        }
        st.converged = false;
        st.has_prev = false;
        st.cycles = 0;
    }
    config_ = std::move(next);
    mu_ = mu_new;
    rho_ = config_.rho();
}

Vector AdmmBatch::eta_of_v(Index k) const {
    const AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
    Vector eta = Vector::Zero(n_);
    for (std::size_t i = 0; i < st.active.size(); ++i) {
        const double v = st.v_active[static_cast<Index>(i)];
        if (v != 0.0) eta.noalias() += v * xt_.col(st.active[i]);
    }
    return eta;
}

Matrix AdmmBatch::loss_gradients(const std::vector<Index>& which) const {
    const auto m = static_cast<Index>(which.size());
    Matrix G(p_, m);
    detail::parallel_for(m, config_.threads, [&](Index c) {
        const Index k = which[static_cast<std::size_t>(c)];
        const Vector e = loss_gradient_eta(family_, eta_of_v(k), problems_.weights.col(k),
                                           problems_.responses.col(k));
        G.col(c).noalias() = xt_.transpose() * e;
    });
    return G;
}

double AdmmBatch::problem_objective(Index k) const {
    const AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
    const double loss = negloglik(family_, eta_of_v(k), problems_.weights.col(k),
                                  problems_.responses.col(k));
    double pen = 0.0;
    for (std::size_t b = 0; b + 1 < st.block_ptr.size(); ++b) {
        double sq = 0.0;
        for (Index q = st.block_ptr[b]; q < st.block_ptr[b + 1]; ++q) {
            const double v = st.v_active[st.block_pos[static_cast<std::size_t>(q)]];
            sq += v * v;
        }
        pen += std::sqrt(sq);
    }
    return loss + config_.lambda1 * pen + config_.lambda2 * st.v_active.squaredNorm();
}

void AdmmBatch::w_step(const std::vector<Index>& which) {
    if (which.empty()) return;
    ReducedNewtonOptions opts;
    opts.shift = 2.0 * rho_;
    opts.newton_tol = config_.newton_tol;
    opts.max_newton = config_.max_newton;
    opts.solve = config_.solve;
    opts.solve.threads = config_.threads;
    const ReducedNewtonReport report =
        reduced_newton_batch(family_, qr_.Z, problems_, which, alpha_, beta_, scale_, opts, &eta_lin_);
    if (report.saturated) {
        for (Index k : which) states_[static_cast<std::size_t>(k)].saturated = true;
    }
}

void AdmmBatch::update_after_w(Index k) {
    AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
    const auto s = static_cast<Index>(st.active.size());
    auto alpha = alpha_.col(k);
    auto beta = beta_.col(k);
    const double two_rho = 2.0 * rho_;
    const double step = 2.0 / mu_;
    const double decay = 1.0 - 1.0 / (mu_ * rho_);

    // Rows of Q on A_k against alpha and beta.
    Vector qa(s), qb(s);
    for (Index i = 0; i < s; ++i) {
        const auto q = qt_.col(st.active[static_cast<std::size_t>(i)]);
        qa[i] = q.dot(alpha);
        qb[i] = q.dot(beta);
    }
    // w on A_k: Q alpha + (l - Q beta) / (2 rho).
    const Vector w_active = qa + (st.l_active - qb) / two_rho;
    if (shadow_) {
        const Vector qbeta = qr_.Q * beta;
        shadow_w_.col(k) = qr_.Q * alpha + (shadow_l_.col(k) - qbeta) / two_rho;
        const Vector u = beta / two_rho - alpha;
        shadow_l_.col(k) = decay * shadow_l_.col(k) + step * (qr_.Q * u);
    }

    // l <- l - (2/mu) w, evaluated on A_k only; beta follows exactly.
    st.l_active = decay * st.l_active + step * (qb / two_rho - qa);
    beta -= step * alpha;

    // v <- prox(l) on A_k.
    for (std::size_t b = 0; b + 1 < st.block_ptr.size(); ++b) {
        const Index begin = st.block_ptr[b];
        const Index size = st.block_ptr[b + 1] - begin;
        if (size == 1) {
            const Index pos = st.block_pos[static_cast<std::size_t>(begin)];
            st.v_active[pos] = -mu_ * soft_threshold(st.l_active[pos], config_.lambda1);
            continue;
        }
        Vector lb(size);
        for (Index q = 0; q < size; ++q) lb[q] = st.l_active[st.block_pos[static_cast<std::size_t>(begin + q)]];
        const Vector vb = group_prox(lb, config_.lambda1, mu_);
        for (Index q = 0; q < size; ++q) st.v_active[st.block_pos[static_cast<std::size_t>(begin + q)]] = vb[q];
    }

    double feas = 0.0;
    double winf = 0.0;
    for (Index i = 0; i < s; ++i) {
        feas = std::max(feas, std::abs(w_active[i] - st.v_active[i]));
        winf = std::max(winf, std::abs(w_active[i]));
    }
    st.feasibility = feas / (1.0 + winf);

    // l <- l + (2/mu) v; beta <- beta + (2/mu) Q^T v.
    st.l_active += step * st.v_active;
    for (Index i = 0; i < s; ++i) {
        const double v = st.v_active[i];
        if (v == 0.0) continue;
        beta += (step * v) * qt_.col(st.active[static_cast<std::size_t>(i)]);
        if (shadow_) shadow_l_(st.active[static_cast<std::size_t>(i)], k) += step * v;
    }

    st.prev_objective = st.objective;
    st.objective = problem_objective(k);
    ++st.cycles;
}

void AdmmBatch::cycle(const std::vector<Index>& which) {
    std::vector<Index> ks = which;
    if (ks.empty()) {
        for (Index k = 0; k < problems_.problems(); ++k) {
            if (!states_[static_cast<std::size_t>(k)].converged) ks.push_back(k);
        }
    }
    std::vector<Index> nonempty;
    for (Index k : ks) {
        if (!states_[static_cast<std::size_t>(k)].active.empty()) nonempty.push_back(k);
    }
    w_step(nonempty);
    detail::parallel_for(static_cast<Index>(ks.size()), config_.threads, [&](Index c) {
        const Index k = ks[static_cast<std::size_t>(c)];
        AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        if (st.active.empty()) {
            // v_k = 0 is fixed; nothing to iterate until KKT grows A_k.
            st.prev_objective = st.objective;
            st.objective = problem_objective(k);
            st.feasibility = 0.0;
            ++st.cycles;
            return;
        }
        update_after_w(k);
    });
    for (Index k : ks) {
        AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        if (st.active.empty()) st.has_prev = true;
    }
}

void AdmmBatch::restart_with_gradient(Index k, const std::vector<Index>& new_active,
                                      const Vector& grad) {
    // The full l_k is replaced by: the stored values on the old A_k, and the
    // gradient of the smooth part at v_k elsewhere (the multiplier a converged
    // split would carry there). beta_k = Q^T l_k is rebuilt to match.
    AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
    const Vector eta = eta_of_v(k);
    const Vector e = loss_gradient_eta(family_, eta, problems_.weights.col(k), problems_.responses.col(k));
    auto beta = beta_.col(k);
    beta.noalias() = qr_.Z * e;
    for (std::size_t i = 0; i < st.active.size(); ++i) {
        const Index j = st.active[i];
        const double v = st.v_active[static_cast<Index>(i)];
        const double g = grad[j] + 2.0 * config_.lambda2 * v;
        beta += (st.l_active[static_cast<Index>(i)] - g + 2.0 * config_.lambda2 * v) * qt_.col(j);
    }
    if (shadow_) {
        shadow_l_.col(k) = grad;
        for (std::size_t i = 0; i < st.active.size(); ++i) {
            shadow_l_(st.active[i], k) = st.l_active[static_cast<Index>(i)];
        }
    }

    const auto s = static_cast<Index>(new_active.size());
    Vector l_new(s), v_new(s);
    for (Index i = 0; i < s; ++i) {
        const Index j = new_active[static_cast<std::size_t>(i)];
        const auto it = std::lower_bound(st.active.begin(), st.active.end(), j);
        if (it != st.active.end() && *it == j) {
            const auto pos = static_cast<Index>(it - st.active.begin());
            l_new[i] = st.l_active[pos];
            v_new[i] = st.v_active[pos];
        } else {
            l_new[i] = grad[j];
            v_new[i] = 0.0;
        }
    }
    set_active(k, new_active, std::move(l_new), std::move(v_new));
    st.has_prev = false;
    st.converged = false;
}

void AdmmBatch::screen_sequential(double lambda1_prev) {
    const Index K = problems_.problems();
    std::vector<Index> all(static_cast<std::size_t>(K));
    std::iota(all.begin(), all.end(), Index{0});
    const Matrix G = loss_gradients(all);
    for (Index k = 0; k < K; ++k) {
        AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        std::vector<Index> support;
        for (std::size_t i = 0; i < st.active.size(); ++i) {
            if (st.v_active[static_cast<Index>(i)] != 0.0) support.push_back(st.active[i]);
        }
        if (!config_.screening) continue;
        const std::vector<Index> next = screen_from_gradient(G.col(k), support, config_.lambda1,
                                                             lambda1_prev, s_max_, blocks_);
        bool adds = false;
        for (Index j : next) {
            if (!std::binary_search(st.active.begin(), st.active.end(), j)) {
                adds = true;
                break;
            }
        }
        if (adds) {
            restart_with_gradient(k, next, G.col(k));
        } else if (next.size() != st.active.size()) {
            // Pure shrink: dropped features have v_j = 0 and keep their l_j
            // implicitly, so beta_k is unchanged.
            const auto s = static_cast<Index>(next.size());
            Vector l_new(s), v_new(s);
            for (Index i = 0; i < s; ++i) {
                const auto it = std::lower_bound(st.active.begin(), st.active.end(), next[static_cast<std::size_t>(i)]);
                const auto pos = static_cast<Index>(it - st.active.begin());
                l_new[i] = st.l_active[pos];
                v_new[i] = st.v_active[pos];
            }
            set_active(k, next, std::move(l_new), std::move(v_new));
        }
    }
}

std::vector<std::vector<Index>> AdmmBatch::kkt_check_and_expand(const std::vector<Index>& which) {
    std::vector<std::vector<Index>> violations(which.size());
    if (which.empty()) return violations;
    const Matrix G = loss_gradients(which);
    const double limit = config_.lambda1 * (1.0 + config_.kkt_tol);
    for (std::size_t c = 0; c < which.size(); ++c) {
        const Index k = which[c];
        AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        const Vector g = G.col(static_cast<Index>(c));
        const KktReport report = kkt_from_gradient(g, weights_dense(k), config_.lambda1,
                                                   config_.lambda2, blocks_);
        st.kkt_residual = report.residual(config_.lambda1);

        std::vector<std::pair<double, Index>> outside;
        for (Index b = 0; b < blocks_.blocks(); ++b) {
            const auto members = blocks_.members(b);
            if (std::binary_search(st.active.begin(), st.active.end(), members[0])) continue;
            const double norm = block_norm(g, members);
            if (norm > limit) outside.emplace_back(norm, b);
        }
        if (outside.empty()) {
            if (report.max_active_residual <= config_.kkt_tol * kkt_scale_[static_cast<std::size_t>(k)] &&
                report.max_inactive_gradient <= limit) {
                st.converged = true;
            }
            continue;
        }
        std::stable_sort(outside.begin(), outside.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        std::vector<Index> next = st.active;
        for (const auto& [norm, b] : outside) {
            for (Index j : blocks_.members(b)) {
                next.push_back(j);
                violations[c].push_back(j);
            }
        }
        check_capacity(next.size());
        std::sort(next.begin(), next.end());
        std::sort(violations[c].begin(), violations[c].end());
        restart_with_gradient(k, next, g);
    }
    return violations;
}

void AdmmBatch::solve() {
    for (Index outer = 0; outer < config_.max_outer; ++outer) {
        std::vector<Index> open;
        for (Index k = 0; k < problems_.problems(); ++k) {
            if (!states_[static_cast<std::size_t>(k)].converged) open.push_back(k);
        }
        if (open.empty()) return;
        cycle(open);

        std::vector<Index> candidates;
        for (Index k : open) {
            AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
            const bool had_prev = st.has_prev;
            st.has_prev = true;
            if (!had_prev && !st.active.empty()) continue;
            const double change = std::abs(st.objective - st.prev_objective);
            const bool settled = st.active.empty() ||
                                 change <= config_.outer_tol * std::max(std::abs(st.objective),
                                                                        std::numeric_limits<double>::min());
            if (settled && st.feasibility <= config_.feas_tol) candidates.push_back(k);
        }
        kkt_check_and_expand(candidates);
    }
}

Vector AdmmBatch::weights_dense(Index k) const {
    const AdmmProblemState& st = states_.at(static_cast<std::size_t>(k));
    Vector w = Vector::Zero(p_);
    for (std::size_t i = 0; i < st.active.size(); ++i) w[st.active[i]] = st.v_active[static_cast<Index>(i)];
    return w;
}

std::vector<FitResult> AdmmBatch::results() const {
    const Index K = problems_.problems();
    std::vector<Index> all(static_cast<std::size_t>(K));
    std::iota(all.begin(), all.end(), Index{0});
    const Matrix G = loss_gradients(all);
    std::vector<FitResult> out(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const AdmmProblemState& st = states_[static_cast<std::size_t>(k)];
        FitResult& res = out[static_cast<std::size_t>(k)];
        const Vector w = weights_dense(k);
        res.weights = w.sparseView(0.0, 0.0);
        res.objective = problem_objective(k);
        res.iterations = st.cycles;
        res.converged = st.converged;
        res.active_size = res.weights.nonZeros();
        res.kkt_residual = kkt_from_gradient(G.col(k), w, config_.lambda1, config_.lambda2, blocks_)
                               .residual(config_.lambda1);
        res.saturated = st.saturated;
    }
    return out;
}

std::vector<FitResult> fastglz_fit(const Matrix& X, const GlzFamily& family,
                                   const ProblemFamily& problems, const AdmmConfig& config) {
    AdmmBatch batch(X, family, problems, config);
    batch.solve();
    return batch.results();
}

}  // namespace fastglz
