#include "fastglz/simnewton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>

#include "fastglz/error.hpp"
#include "fastglz/random.hpp"
#include "parallel.hpp"

namespace fastglz {

QrFactors thin_qr(const Matrix& X) {
    if (!X.allFinite()) throw ValidationError("data matrix has non-finite entries");
    if (X.rows() == 0 || X.cols() == 0) throw ValidationError("data matrix is empty");
    const Index p = X.rows();
    const Index n = X.cols();
    const Index r = std::min(p, n);

    Eigen::HouseholderQR<Matrix> qr(X);
    QrFactors out;
    out.Q = qr.householderQ() * Matrix::Identity(p, r);
    out.Z = qr.matrixQR().topRows(r);
    for (Index j = 0; j < std::min(r, n); ++j) {
        for (Index i = j + 1; i < r; ++i) out.Z(i, j) = 0.0;
    }
    return out;
}

TemplateSystem build_template_from_diagonal(const Matrix& Z, Vector r_template, double shift) {
    if (r_template.size() != Z.cols()) {
        throw DimensionError("template diagonal has length " + std::to_string(r_template.size()) +
                             ", expected " + std::to_string(Z.cols()));
    }
    if (!std::isfinite(shift) || shift < 0.0 || !r_template.allFinite()) {
        throw NumericalError("template inputs are not finite and non-negative");
    }
    TemplateSystem t;
    t.shift_ = shift;
    t.m_.noalias() = Z * r_template.asDiagonal() * Z.transpose();
    t.m_.diagonal().array() += shift;
    t.llt_.compute(t.m_);
    if (t.llt_.info() != Eigen::Success) {
        throw NumericalError("template matrix is not positive definite");
    }
    // Cholesky can succeed on a matrix that is singular up to rounding.
    const Vector ldiag = t.llt_.matrixLLT().diagonal();
    if (ldiag.size() > 0) {
        const double ratio = ldiag.minCoeff() / ldiag.maxCoeff();
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(ldiag.size());
        if (!(ratio * ratio > floor)) throw NumericalError("template matrix is numerically singular");
    }
    t.minv_z_ = t.llt_.solve(Z);
    if (!t.minv_z_.allFinite()) throw NumericalError("template solve produced non-finite values");
    t.r_template_ = std::move(r_template);
    return t;
}

TemplateSystem build_template(const Matrix& Z, const Matrix& r_cols, double shift) {
    if (!(shift > 0.0)) throw NumericalError("template shift must be positive");
    if (r_cols.cols() == 0) throw ValidationError("template needs at least one problem");
    if (r_cols.rows() != Z.cols()) throw DimensionError("curvature columns do not match Z");
    if ((r_cols.array() < 0.0).any()) throw ValidationError("curvature diagonals must be >= 0");
    return build_template_from_diagonal(Z, r_cols.rowwise().maxCoeff(), shift);
}

Matrix residual_diagonals(const TemplateSystem& t, const Matrix& r_cols) {
    Matrix out = (-r_cols).colwise() + t.r_template();
    if ((out.array() < 0.0).any()) {
        throw ValidationError("a curvature diagonal exceeds the template");
    }
    return out;
}

void stationary_solve_batch(const TemplateSystem& t, const Matrix& Z, NewtonBatch& batch,
                            const StationaryOptions& options) {
    const Index r = Z.rows();
    const Index n = Z.cols();
    const Index K = batch.rhs.cols();
    if (batch.rhs.rows() != r || batch.r_delta.rows() != n || batch.r_delta.cols() != K) {
        throw DimensionError("batch shapes do not match the template");
    }
    if (batch.alpha.rows() != r || batch.alpha.cols() != K) batch.alpha = Matrix::Zero(r, K);
    if (!(options.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
    const bool per_column = !batch.tolerances.empty();
    if (per_column && static_cast<Index>(batch.tolerances.size()) != K) {
        throw DimensionError("one tolerance per column is required");
    }

    batch.iterations.assign(static_cast<std::size_t>(K), 0);
    batch.residuals.assign(static_cast<std::size_t>(K), 0.0);
    const Matrix& minv_z = t.minv_z();
    const double shift = t.shift();

    detail::parallel_for(K, options.threads, [&](Index k) {
        auto alpha = batch.alpha.col(k);
        const auto rhs = batch.rhs.col(k);
        const auto rdelta = batch.r_delta.col(k);
        const double rhs_norm = rhs.norm();
        const auto slot = static_cast<std::size_t>(k);
        const double tol = per_column ? batch.tolerances[slot] : options.tol;
        if (rhs_norm == 0.0) {
            alpha.setZero();
            return;
        }
        const Vector offset = t.factor().solve(rhs);
        const Vector r_k = t.r_template() - rdelta;
        Vector v(n), wv(n), res(r);
        for (Index it = 0;; ++it) {
            v.noalias() = Z.transpose() * alpha;
            res.noalias() = Z * r_k.cwiseProduct(v);
            res.noalias() += shift * alpha;
            res -= rhs;
            const double rel = res.norm() / rhs_norm;
            batch.residuals[slot] = rel;
            batch.iterations[slot] = it;
            if (rel <= tol) return;
            if (it == options.max_iters || !std::isfinite(rel)) return;
            wv = rdelta.cwiseProduct(v);
            alpha.noalias() = minv_z * wv;
            alpha += offset;
        }
    });

    batch.iterations_used = 0;
    bool failed = false;
    for (Index k = 0; k < K; ++k) {
        const auto slot = static_cast<std::size_t>(k);
        batch.iterations_used = std::max(batch.iterations_used, batch.iterations[slot]);
        const double tol = per_column ? batch.tolerances[slot] : options.tol;
        failed = failed || !(batch.residuals[slot] <= tol);
    }
    if (failed) {
        throw ConvergenceError("stationary iteration did not reach tolerance in " +
                                   std::to_string(options.max_iters) + " iterations",
                               batch.residuals);
    }
}

double spectral_radius_estimate(const TemplateSystem& t, const Matrix& Z, const Vector& r_k,
                                Index iters) {
    const Vector rdelta = t.r_template() - r_k;
    if ((rdelta.array() < 0.0).any()) {
        throw ValidationError("curvature diagonal exceeds the template");
    }
    const Index r = Z.rows();
    Rng rng(0x5eedULL);
    Vector x(r);
    for (Index i = 0; i < r; ++i) x[i] = 1.0 + 0.5 * rng.uniform();

    auto apply_n = [&](const Vector& a) -> Vector {
        return Z * rdelta.cwiseProduct(Z.transpose() * a);
    };
    double estimate = 0.0;
    for (Index it = 0; it < std::max<Index>(iters, 1); ++it) {
        const Vector nx = apply_n(x);
        const double num = x.dot(nx);
        const double den = x.dot(t.matrix() * x);
        if (den <= 0.0) break;
        estimate = std::abs(num / den);
        if (nx.norm() == 0.0) return 0.0;
        x = t.factor().solve(nx);
        x /= x.norm();
    }
    return estimate;
}

namespace {

double reduced_objective(const GlzFamily& family, const Matrix& Z, const ProblemFamily& problems,
                         Index k, const Vector& alpha, const Matrix& beta, double shift) {
    const Vector eta = Z.transpose() * alpha;
    double value = negloglik(family, eta, problems.weights.col(k), problems.responses.col(k)) +
                   0.5 * shift * alpha.squaredNorm();
    if (beta.size() != 0) value -= beta.col(k).dot(alpha);
    return value;
}

}  // namespace

ReducedNewtonReport reduced_newton_batch(const GlzFamily& family, const Matrix& Z,
                                         const ProblemFamily& problems,
                                         const std::vector<Index>& which, Matrix& alpha,
                                         const Matrix& beta, const std::vector<double>& scale,
                                         const ReducedNewtonOptions& options, Matrix* eta_lin) {
    const Index n = Z.cols();
    const Index r = Z.rows();
    const auto m = static_cast<Index>(which.size());
    const bool has_beta = beta.size() != 0;
    const int threads = options.solve.threads;

    ReducedNewtonReport report;
    report.steps.assign(which.size(), 0);
    report.gradient.assign(which.size(), 0.0);
    std::vector<char> done(which.size(), 0);
    std::vector<Linearization> lins(which.size());
    std::vector<char> saturated(which.size(), 0);

    for (Index round = 0;; ++round) {
        // Linearize every open problem at its current iterate and test the gradient.
        detail::parallel_for(m, threads, [&](Index j) {
            const auto sj = static_cast<std::size_t>(j);
            if (done[sj]) return;
            const Index k = which[sj];
            const Vector eta = Z.transpose() * alpha.col(k);
            lins[sj] = linearize(family, eta, problems.weights.col(k), problems.responses.col(k));
            saturated[sj] = saturated[sj] || lins[sj].saturated;
            Vector grad = Z * lins[sj].e;
            grad.noalias() += options.shift * alpha.col(k);
            if (has_beta) grad -= beta.col(k);
            report.gradient[sj] = grad.norm();
            const double tol = options.newton_tol * std::max(1.0, scale[static_cast<std::size_t>(k)]);
            if (report.gradient[sj] <= tol) done[sj] = 1;
        });

        std::vector<Index> open;
        for (Index j = 0; j < m; ++j) {
            if (!done[static_cast<std::size_t>(j)]) open.push_back(j);
        }
        if (open.empty()) break;
        if (round == options.max_newton) {
            std::vector<double> residuals;
            for (Index j : open) residuals.push_back(report.gradient[static_cast<std::size_t>(j)]);
            throw ConvergenceError("Newton iteration did not converge for problem " +
                                       std::to_string(which[static_cast<std::size_t>(open[0])]),
                                   residuals);
        }

        const auto kopen = static_cast<Index>(open.size());
        Matrix r_cols(n, kopen);
        NewtonBatch batch;
        batch.alpha.resize(r, kopen);
        batch.rhs.resize(r, kopen);
        for (Index c = 0; c < kopen; ++c) {
            const auto sj = static_cast<std::size_t>(open[static_cast<std::size_t>(c)]);
            const Index k = which[sj];
            r_cols.col(c) = lins[sj].r;
            batch.alpha.col(c) = alpha.col(k);
            batch.rhs.col(c).noalias() = Z * lins[sj].b;
            if (has_beta) batch.rhs.col(c) += beta.col(k);
        }
        // Inexact Newton: each linear solve only needs to be accurate relative
        // to the current gradient, tightening as the gradient shrinks.
        batch.tolerances.resize(static_cast<std::size_t>(kopen));
        for (Index c = 0; c < kopen; ++c) {
            const auto sj = static_cast<std::size_t>(open[static_cast<std::size_t>(c)]);
            const double g = report.gradient[sj];
            const double rel_g = g / std::max(1.0, scale[static_cast<std::size_t>(which[sj])]);
            const double forcing = std::min(0.1, std::sqrt(rel_g));
            const double rhs_norm = batch.rhs.col(c).norm();
            double tol = options.solve.tol;
            if (rhs_norm > 0.0) {
                // The solve tolerance is relative to the right-hand side, which
                // can dwarf the gradient (Poisson); keep the absolute residual
                // below the Newton target so the outer loop can finish.
                const double target = 0.1 * options.newton_tol * std::max(1.0, scale[static_cast<std::size_t>(which[sj])]);
                tol = std::max(std::min(tol, target / rhs_norm), forcing * g / rhs_norm);
            }
            batch.tolerances[static_cast<std::size_t>(c)] = std::min(tol, 0.5);
        }
        const TemplateSystem tmpl = build_template(Z, r_cols, options.shift);
        batch.r_delta = residual_diagonals(tmpl, r_cols);
        try {
            stationary_solve_batch(tmpl, Z, batch, options.solve);
        } catch (const ConvergenceError&) {
            // Keep going with the partial iterates as long as each still
            // points downhill; the line search below takes care of the rest.
            for (Index c = 0; c < kopen; ++c) {
                const auto sj = static_cast<std::size_t>(open[static_cast<std::size_t>(c)]);
                const Index k = which[sj];
                Vector grad = Z * lins[sj].e;
                grad.noalias() += options.shift * alpha.col(k);
                if (has_beta) grad -= beta.col(k);
                if (!(batch.alpha.col(c).allFinite()) || !(grad.dot(batch.alpha.col(c) - alpha.col(k)) < 0.0)) throw;
            }
        }

        // Damped update: Armijo backtracking on F_k along the Newton direction.
        detail::parallel_for(kopen, threads, [&](Index c) {
            const auto sj = static_cast<std::size_t>(open[static_cast<std::size_t>(c)]);
            const Index k = which[sj];
            const Vector current = alpha.col(k);
            const Vector dir = batch.alpha.col(c) - current;
            Vector grad = Z * lins[sj].e;
            grad.noalias() += options.shift * current;
            if (has_beta) grad -= beta.col(k);
            const double slope = grad.dot(dir);
            const double f0 = reduced_objective(family, Z, problems, k, current, beta, options.shift);
            const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));
            double step = 1.0;
            Vector trial = batch.alpha.col(c);
            for (int back = 0; back < 40; ++back) {
                const double f = reduced_objective(family, Z, problems, k, trial, beta, options.shift);
                if (std::isfinite(f) && f <= f0 + 1e-4 * step * slope + slack) break;
                step *= 0.5;
                trial = current + step * dir;
            }
            alpha.col(k) = trial;
            if (eta_lin != nullptr && step == 1.0) eta_lin->col(k) = lins[sj].eta;
            ++report.steps[sj];
        });
    }
    report.saturated = std::any_of(saturated.begin(), saturated.end(), [](char s) { return s != 0; });
    return report;
}

std::vector<FitResult> ridge_irls_fit(const Matrix& X, const GlzFamily& family,
                                      const ProblemFamily& problems, const RidgeConfig& config) {
    if (X.cols() != problems.trials()) {
        throw DimensionError("data matrix has " + std::to_string(X.cols()) + " trials, family has " +
                             std::to_string(problems.trials()));
    }
    return ridge_irls_fit(thin_qr(X), family, problems, config);
}

std::vector<FitResult> ridge_irls_fit(const QrFactors& qr, const GlzFamily& family,
                                      const ProblemFamily& problems, const RidgeConfig& config) {
    if (!(config.lambda2 > 0.0)) throw ValidationError("ridge fit requires lambda2 > 0");
    validate_problem_family(problems, family);
    const Matrix& Z = qr.Z;
    if (Z.cols() != problems.trials()) throw DimensionError("factorization and family disagree on n");
    const Index K = problems.problems();
    const Index r = qr.rank();

    std::vector<double> scale(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const Vector e0 = loss_gradient_eta(family, Vector::Zero(Z.cols()), problems.weights.col(k),
                                            problems.responses.col(k));
        scale[static_cast<std::size_t>(k)] = (Z * e0).norm();
    }
    std::vector<Index> all(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) all[static_cast<std::size_t>(k)] = k;

    Matrix alpha = Matrix::Zero(r, K);
    ReducedNewtonOptions opts;
    opts.shift = 2.0 * config.lambda2;
    opts.newton_tol = config.newton_tol;
    opts.max_newton = config.max_newton;
    opts.solve = config.solve;
    const ReducedNewtonReport report =
        reduced_newton_batch(family, Z, problems, all, alpha, Matrix(), scale, opts);

    std::vector<FitResult> out(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) {
        const Vector w = qr.Q * alpha.col(k);
        const Vector eta = Z.transpose() * alpha.col(k);
        const Vector e = loss_gradient_eta(family, eta, problems.weights.col(k), problems.responses.col(k));
        const Vector grad_reduced = Z * e + 2.0 * config.lambda2 * alpha.col(k);
        FitResult& res = out[static_cast<std::size_t>(k)];
        res.weights = w.sparseView(0.0, 0.0);
        res.objective = negloglik(family, eta, problems.weights.col(k), problems.responses.col(k)) +
                        config.lambda2 * w.squaredNorm();
        res.iterations = report.steps[static_cast<std::size_t>(k)];
        res.converged = true;
        res.active_size = res.weights.nonZeros();
        res.kkt_residual = (qr.Q * grad_reduced).cwiseAbs().maxCoeff();
        res.saturated = report.saturated;
    }
    return out;
}

}  // namespace fastglz
