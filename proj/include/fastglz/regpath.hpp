#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fastglz/admm.hpp"

namespace fastglz {

/// Grid points use lambda1 = alpha_mix * lambda and lambda2 = 0.5 * (1 - alpha_mix) * lambda.
struct PathConfig {
    double alpha_mix = 1.0;
    Index n_lambda = 100;
    double lambda_min_ratio = 0.01;
    /// Strictly decreasing; replaces the log grid when set.
    std::optional<std::vector<double>> explicit_grid;

    void validate() const;
};

struct PathPoint {
    double lambda = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    std::vector<FitResult> results;  ///< one per problem; empty if the point failed
    double mean_active = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct PathResult {
    std::vector<double> grid;
    std::vector<PathPoint> points;
};

/// Smallest lambda at which every problem's solution is zero: the largest
/// block gradient norm of any loss at w = 0, divided by alpha_mix.
double lambda_max(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                  double alpha_mix, const std::vector<std::vector<Index>>& groups = {});

/// Log-spaced from lambda_max down to lambda_max * lambda_min_ratio. A single
/// point is just lambda_max.
std::vector<double> lambda_grid(double lambda_max, Index n_lambda, double lambda_min_ratio);

/// Warm-started sweep from the largest lambda down. lambda1 / lambda2 in
/// `admm` are overwritten per point; mu, tolerances, s_max and groups are
/// kept. When a point throws, the error is recorded, the batch is rolled back
/// to the last good state and the sweep continues.
PathResult fit_path(const Matrix& X, const GlzFamily& family, const ProblemFamily& problems,
                    const PathConfig& path, const AdmmConfig& admm);

}  // namespace fastglz
