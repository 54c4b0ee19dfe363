#include "fastglz/regpath.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "fastglz/error.hpp"

namespace fastglz {

void PathConfig::validate() const {
    if (!(alpha_mix > 0.0 && alpha_mix <= 1.0)) {
        throw ValidationError("alpha_mix must lie in (0, 1]; pure ridge has no path head");
    }
    if (explicit_grid) {
        const auto& g = *explicit_grid;
        if (g.empty()) throw ValidationError("explicit lambda grid is empty");
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!(g[i] >= 0.0) || !std::isfinite(g[i])) throw ValidationError("lambda values must be finite and >= 0");
            if (i > 0 && !(g[i] < g[i - 1])) throw ValidationError("lambda grid must be strictly decreasing");
        }
        return;
    }
    if (n_lambda < 1) throw ValidationError("n_lambda must be >= 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
        throw ValidationError("lambda_min_ratio must lie in (0, 1)");
    }
}

double lambda_max(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                  double alpha_mix, const std::vector<std::vector<Index>>& groups) {
    if (!(alpha_mix > 0.0 && alpha_mix <= 1.0)) {
        throw ValidationError("alpha_mix must lie in (0, 1]; pure ridge has no path head");
    }
    validate_problem_family(problems, family);
    if (X.cols() != problems.trials()) throw DimensionError("X and the problem family disagree on n");
    const BlockStructure blocks =
        groups.empty() ? BlockStructure::singletons(X.rows()) : BlockStructure::from_groups(X.rows(), groups);
    const Vector zero = Vector::Zero(X.cols());
    double worst = 0.0;
    for (Index k = 0; k < problems.problems(); ++k) {
        const Vector g = X * loss_gradient_eta(family, zero, problems.weights.col(k), problems.responses.col(k));
        for (Index b = 0; b < blocks.blocks(); ++b) {
            double sq = 0.0;
            for (Index j : blocks.members(b)) sq += g[j] * g[j];
            worst = std::max(worst, std::sqrt(sq));
        }
    }
    return worst / alpha_mix;
}

std::vector<double> lambda_grid(double lambda_max, Index n_lambda, double lambda_min_ratio) {
    if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
        throw ValidationError("lambda_max must be finite and positive; a zero value means the null model is optimal");
    }
    if (n_lambda < 1) throw ValidationError("n_lambda must be >= 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) throw ValidationError("lambda_min_ratio must lie in (0, 1)");
    std::vector<double> grid(static_cast<std::size_t>(n_lambda));
    grid[0] = lambda_max;
    if (n_lambda == 1) return grid;
    const double log_ratio = std::log(lambda_min_ratio);
    for (Index i = 1; i < n_lambda; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n_lambda - 1);
        grid[static_cast<std::size_t>(i)] = lambda_max * std::exp(frac * log_ratio);
    }
    grid.back() = lambda_max * lambda_min_ratio;
    return grid;
}

PathResult fit_path(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                    const PathConfig& path, const AdmmConfig& admm) {
    path.validate();
    admm.validate();
    validate_problem_family(problems, family);
    if (X.cols() != problems.trials()) throw DimensionError("X and the problem family disagree on n");
    PathResult out;
    out.grid = path.explicit_grid
                   ? *path.explicit_grid
                   : lambda_grid(lambda_max(X, family, problems, path.alpha_mix, admm.groups), path.n_lambda,
                                 path.lambda_min_ratio);

    std::unique_ptr<AdmmBatch> batch;
    std::unique_ptr<AdmmBatch> last_good;
    std::optional<double> prev_lambda1;

    for (double lambda : out.grid) {
        PathPoint point;
        point.lambda = lambda;
        point.lambda1 = path.alpha_mix * lambda;
        point.lambda2 = 0.5 * (1.0 - path.alpha_mix) * lambda;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (!batch) {
                // Cold start: either the first point or every point so far failed.
                AdmmConfig config = admm;
                config.lambda1 = point.lambda1;
                config.lambda2 = point.lambda2;
                batch = std::make_unique<AdmmBatch>(X, family, problems, config);
            } else {
                batch->set_penalty(point.lambda1, point.lambda2, admm.mu);
                batch->screen_sequential(*prev_lambda1);
            }
            batch->solve();
            point.results = batch->results();
            double active = 0.0;
            for (const FitResult& r : point.results) active += static_cast<double>(r.active_size);
            point.mean_active = active / static_cast<double>(point.results.size());
            last_good = std::make_unique<AdmmBatch>(*batch);
            prev_lambda1 = point.lambda1;
        } catch (const Error& e) {
            point.failed = true;
            point.error = e.what();
            batch = last_good ? std::make_unique<AdmmBatch>(*last_good) : nullptr;
        }
        point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.points.push_back(std::move(point));
    }
    return out;
}

}  // namespace fastglz
