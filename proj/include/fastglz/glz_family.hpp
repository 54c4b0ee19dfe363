#pragma once

#include <functional>
#include <string>
#include <string_view>

#include "fastglz/types.hpp"

namespace fastglz {

enum class FamilyKind { LinearGaussian, Logistic, Poisson, Custom };

/// A convex loss L(eta, y) together with its first two derivatives in eta.
/// The second derivative must be non-negative wherever it is evaluated.
struct CustomLoss {
    std::function<double(double, double)> loss;
    std::function<double(double, double)> d1;
    std::function<double(double, double)> d2;
};

/// Exponential-family model p(y|eta) ~ exp(y*eta - b(eta)) under the canonical
/// link, or a generic convex loss. The dispersion 1/a(phi) is expected to be
/// folded into the trial weights by the caller.
class GlzFamily {
public:
    static GlzFamily linear_gaussian() { return GlzFamily(FamilyKind::LinearGaussian); }
    static GlzFamily logistic() { return GlzFamily(FamilyKind::Logistic); }
    static GlzFamily poisson() { return GlzFamily(FamilyKind::Poisson); }
    static GlzFamily custom(CustomLoss loss);

    /// Parses "gaussian" / "linear", "logistic" / "binomial", "poisson".
    static GlzFamily from_name(std::string_view name);

    FamilyKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept;
    bool is_builtin() const noexcept { return kind_ != FamilyKind::Custom; }
    const CustomLoss& custom_loss() const noexcept { return custom_; }

private:
    explicit GlzFamily(FamilyKind kind) : kind_(kind) {}

    FamilyKind kind_;
    CustomLoss custom_;
};

/// Sigmoid output is kept inside (eps, 1 - eps).
inline constexpr double kLogisticEps = 1e-15;
/// Poisson linear predictors are capped here before exponentiation.
inline constexpr double kPoissonEtaCap = 700.0;

struct MeanCurvature {
    double mu;
    double curv;
};

/// Log-partition b(eta). Throws UnsupportedError for custom losses.
double b_value(const GlzFamily& family, double eta);

/// mu = b'(eta) and curv = b''(eta) for built-in families. For custom losses
/// mu holds dL/deta (the residual slope, already including y) and curv holds
/// d2L/deta2.
MeanCurvature mean_and_curvature(const GlzFamily& family, double eta, double y);

/// Per-trial loss -(y*eta - b(eta)), or L(eta, y) for custom losses.
double pointwise_loss(const GlzFamily& family, double eta, double y);

/// Weighted negative log-likelihood -sum_i d_i (y_i eta_i - b(eta_i)).
/// Trials with d_i == 0 are skipped entirely.
double negloglik(const GlzFamily& family, const Vector& eta, const Vector& d, const Vector& y);

/// Quadratic expansion of the weighted loss around a linear predictor.
struct Linearization {
    Vector eta;  ///< expansion point
    Vector e;    ///< weighted residual, gradient of the loss w.r.t. eta
    Vector r;    ///< curvature diagonal, r >= 0
    Vector b;    ///< r .* eta - e
    bool saturated = false;  ///< a Poisson predictor hit the exponent cap
};

Linearization linearize(const GlzFamily& family, const Vector& eta_bar, const Vector& d,
                        const Vector& y);

/// Gradient of the weighted loss with respect to eta (the `e` of linearize)
/// without forming the other fields.
Vector loss_gradient_eta(const GlzFamily& family, const Vector& eta, const Vector& d,
                         const Vector& y);

}  // namespace fastglz
