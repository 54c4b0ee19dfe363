#include "fastglz/reference_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "fastglz/error.hpp"

namespace fastglz::oracle {

namespace {

double soft(double a, double t) {
    return a > t ? a - t : (a < -t ? a + t : 0.0);
}

// Blocks as explicit index lists covering every feature.
std::vector<std::vector<Index>> full_blocks(Index p, const std::vector<std::vector<Index>>& groups) {
    std::vector<char> used(static_cast<std::size_t>(p), 0);
    std::vector<std::vector<Index>> out;
    for (const auto& g : groups) {
        if (g.empty()) throw ValidationError("empty group");
        for (Index j : g) {
            if (j < 0 || j >= p || used[static_cast<std::size_t>(j)]) {
                throw ValidationError("groups must be disjoint and in range");
            }
            used[static_cast<std::size_t>(j)] = 1;
        }
        out.push_back(g);
    }
    for (Index j = 0; j < p; ++j) {
        if (!used[static_cast<std::size_t>(j)]) out.push_back({j});
    }
    return out;
}

double penalty(const Vector& w, const std::vector<std::vector<Index>>& blocks) {
    double total = 0.0;
    for (const auto& b : blocks) {
        double sq = 0.0;
        for (Index j : b) sq += w[j] * w[j];
        total += std::sqrt(sq);
    }
    return total;
}

// Prox of t * lambda1 * sum_b ||z_b||.
Vector block_shrink(const Vector& z, double threshold, const std::vector<std::vector<Index>>& blocks) {
    Vector out(z.size());
    for (const auto& b : blocks) {
        if (b.size() == 1) {
            out[b[0]] = soft(z[b[0]], threshold);
            continue;
        }
        double sq = 0.0;
        for (Index j : b) sq += z[j] * z[j];
        const double norm = std::sqrt(sq);
        const double factor = norm > threshold ? 1.0 - threshold / norm : 0.0;
        for (Index j : b) out[j] = factor * z[j];
    }
    return out;
}

double smooth_value(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                    double lambda2, const Vector& w) {
    return negloglik(family, X.transpose() * w, d, y) + lambda2 * w.squaredNorm();
}

Vector smooth_gradient(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                       double lambda2, const Vector& w) {
    return X * loss_gradient_eta(family, X.transpose() * w, d, y) + 2.0 * lambda2 * w;
}

double residual_from_gradient(const Vector& g, const Vector& w, double lambda1, double lambda2,
                              const std::vector<std::vector<Index>>& blocks) {
    double worst = 0.0;
    for (const auto& b : blocks) {
        double wsq = 0.0, gsq = 0.0;
        for (Index j : b) {
            wsq += w[j] * w[j];
            gsq += g[j] * g[j];
        }
        const double wnorm = std::sqrt(wsq);
        if (wnorm == 0.0) {
            worst = std::max(worst, std::sqrt(gsq) - lambda1);
            continue;
        }
        double rsq = 0.0;
        for (Index j : b) {
            const double res = g[j] + 2.0 * lambda2 * w[j] + lambda1 * w[j] / wnorm;
            rsq += res * res;
        }
        worst = std::max(worst, std::sqrt(rsq));
    }
    return worst;
}

}  // namespace

void OracleConfig::validate() const {
    if (!(tol > 0.0)) throw ValidationError("oracle tolerance must be positive");
    if (max_iters < 1) throw ValidationError("oracle needs max_iters >= 1");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("shrink factor must be in (0, 1)");
    if (!(initial_step > 0.0)) throw ValidationError("initial step must be positive");
}

Vector dense_ridge_solve(const Matrix& X, const Linearization& lin, double c, const Vector& extra) {
    const Index p = X.rows();
    if (lin.r.size() != X.cols() || lin.b.size() != X.cols()) {
        throw DimensionError("linearization does not match X");
    }
    if (extra.size() != 0 && extra.size() != p) throw DimensionError("extra term has wrong length");
    if (c < 0.0) throw ValidationError("ridge constant must be >= 0");
    Matrix H = X * lin.r.asDiagonal() * X.transpose();
    H.diagonal().array() += 2.0 * c;
    Vector rhs = X * lin.b;
    if (extra.size() != 0) rhs += extra;
    if (c > 0.0) {
        Eigen::LLT<Matrix> llt(H);
        if (llt.info() == Eigen::Success) return llt.solve(rhs);
    }
    Eigen::FullPivLU<Matrix> lu(H);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw NumericalError("dense ridge system is singular");
    return lu.solve(rhs);
}

Vector dense_irls_fit(const Matrix& X, const GlzFamily& family, const Vector& d, const Vector& y,
                      double lambda2, const OracleConfig& config) {
    config.validate();
    const Index p = X.rows();
    Vector w = Vector::Zero(p);
    const double scale =
        std::max(1.0, (X * loss_gradient_eta(family, Vector::Zero(X.cols()), d, y)).cwiseAbs().maxCoeff());
    for (Index it = 0; it < config.max_iters; ++it) {
        const Vector g = smooth_gradient(X, family, d, y, lambda2, w);
        if (g.cwiseAbs().maxCoeff() <= config.tol * scale) return w;
        const Linearization lin = linearize(family, X.transpose() * w, d, y);
        const Vector target = dense_ridge_solve(X, lin, lambda2);
        const Vector dir = target - w;
        const double f0 = smooth_value(X, family, d, y, lambda2, w);
        const double slope = g.dot(dir);
        double step = 1.0;
        Vector trial = target;
        for (int back = 0; back < 60; ++back) {
            const double f = smooth_value(X, family, d, y, lambda2, trial);
            if (std::isfinite(f) && f <= f0 + 1e-4 * step * slope + 1e-14 * std::max(1.0, std::abs(f0))) break;
            step *= 0.5;
            trial = w + step * dir;
        }
        if ((trial - w).cwiseAbs().maxCoeff() == 0.0) return w;
        w = trial;
    }
    throw ConvergenceError("dense IRLS did not converge", {});
}

double optimality_residual(const Matrix& X, const GlzFamily& family, const Vector& d,
                           const Vector& y, const Vector& w, double lambda1, double lambda2,
                           const std::vector<std::vector<Index>>& groups) {
    const Vector g = X * loss_gradient_eta(family, X.transpose() * w, d, y);
    return residual_from_gradient(g, w, lambda1, lambda2, full_blocks(X.rows(), groups));
}

ProxGradResult prox_grad_fit(const Matrix& X, const GlzFamily& family, const Vector& d,
                             const Vector& y, double lambda1, double lambda2,
                             const OracleConfig& config,
                             const std::vector<std::vector<Index>>& groups,
                             const Vector& warm_start) {
    config.validate();
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ValidationError("penalties must be >= 0");
    const Index p = X.rows();
    const auto blocks = full_blocks(p, groups);
    const double scale =
        std::max(1.0, (X * loss_gradient_eta(family, Vector::Zero(X.cols()), d, y)).cwiseAbs().maxCoeff());

    auto full_objective = [&](const Vector& w) {
        return smooth_value(X, family, d, y, lambda2, w) + lambda1 * penalty(w, blocks);
    };

    Vector w = warm_start.size() == p ? warm_start : Vector::Zero(p);
    Vector z = w;
    double t = 1.0;
    double step = config.initial_step;
    double obj = full_objective(w);

    ProxGradResult out;
    for (Index it = 0; it < config.max_iters; ++it) {
        const Vector gw = X * loss_gradient_eta(family, X.transpose() * w, d, y);
        if (residual_from_gradient(gw, w, lambda1, lambda2, blocks) <= config.tol * scale) {
            out.w = w;
            out.objective = obj;
            out.iterations = it;
            return out;
        }

        const double fz = smooth_value(X, family, d, y, lambda2, z);
        const Vector gz = smooth_gradient(X, family, d, y, lambda2, z);
        Vector next;
        for (;;) {
            next = block_shrink(z - step * gz, step * lambda1, blocks);
            const Vector diff = next - z;
            const double bound = fz + gz.dot(diff) + diff.squaredNorm() / (2.0 * step);
            const double f = smooth_value(X, family, d, y, lambda2, next);
            if (std::isfinite(f) && f <= bound + 1e-13 * std::max(1.0, std::abs(fz))) break;
            step *= config.shrink;
            if (step < 1e-300) throw NumericalError("proximal gradient step underflow");
        }

        const double next_obj = full_objective(next);
        if (next_obj > obj && t > 1.0) {
            // Momentum made things worse: restart from the current iterate.
            t = 1.0;
            z = w;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / t_next) * (next - w);
        w = std::move(next);
        obj = next_obj;
        t = t_next;
    }
    throw ConvergenceError("proximal gradient did not converge in " + std::to_string(config.max_iters) +
                               " iterations",
                           {});
}

std::vector<TextbookIterate> textbook_admm_steps(const Matrix& X, const GlzFamily& family,
                                                 const Vector& d, const Vector& y,
                                                 const TextbookAdmmConfig& config, Index n_cycles,
                                                 const Vector& w0, const Vector& v0,
                                                 const Vector& multiplier0) {
    const Index p = X.rows();
    if (w0.size() != p || v0.size() != p || multiplier0.size() != p) {
        throw DimensionError("initial iterates must have length p");
    }
    if (!(config.mu > 0.0)) throw ValidationError("mu must be positive");
    const double mu = config.mu;
    const double rho = config.lambda2 + 0.5 / mu;

    Vector w = w0, v = v0, m = multiplier0;
    std::vector<TextbookIterate> out;
    out.reserve(static_cast<std::size_t>(n_cycles));

    auto w_objective = [&](const Vector& x) {
        return negloglik(family, X.transpose() * x, d, y) + config.lambda2 * x.squaredNorm() - m.dot(x) +
               (x - v).squaredNorm() / (2.0 * mu);
    };

    for (Index c = 0; c < n_cycles; ++c) {
        // w-step: Newton on the smooth augmented Lagrangian.
        Index it = 0;
        for (;; ++it) {
            const Vector eta = X.transpose() * w;
            const Vector g = X * loss_gradient_eta(family, eta, d, y) + 2.0 * config.lambda2 * w - m +
                             (w - v) / mu;
            if (g.norm() <= config.newton_tol * std::max(1.0, m.norm() + v.norm() / mu)) break;
            if (it == config.max_newton) throw ConvergenceError("textbook w-step did not converge", {g.norm()});
            const Linearization lin = linearize(family, eta, d, y);
            const Vector target = dense_ridge_solve(X, lin, rho, m + v / mu);
            const Vector dir = target - w;
            const double f0 = w_objective(w);
            double step = 1.0;
            Vector trial = target;
            for (int back = 0; back < 60; ++back) {
                const double f = w_objective(trial);
                if (std::isfinite(f) && f <= f0 + 1e-4 * step * g.dot(dir) + 1e-15 * std::max(1.0, std::abs(f0))) {
                    break;
                }
                step *= 0.5;
                trial = w + step * dir;
            }
            if (trial == w) break;
            w = trial;
        }
        TextbookIterate rec;
        m -= (w - v) / mu;
        rec.multiplier_mid = m;
        // v-step: argmin lambda1 ||v||_1 + m^T v + ||w - v||^2 / (2 mu).
        const Vector shifted = w - mu * m;
        for (Index j = 0; j < p; ++j) v[j] = soft(shifted[j], mu * config.lambda1);
        m -= (w - v) / mu;
        rec.w = w;
        rec.v = v;
        rec.multiplier = m;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace fastglz::oracle
