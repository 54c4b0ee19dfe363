#include "fastglz/glz_family.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fastglz/error.hpp"

namespace fastglz {

namespace {

void check_finite_eta(double eta) {
    if (std::isnan(eta)) throw NumericalError("linear predictor is NaN");
}

double logistic_b(double eta) {
    if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
    return std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
    double mu;
    if (eta >= 0.0) {
        mu = 1.0 / (1.0 + std::exp(-eta));
    } else {
        const double z = std::exp(eta);
        mu = z / (1.0 + z);
    }
    return std::clamp(mu, kLogisticEps, 1.0 - kLogisticEps);
}

void check_lengths(const Vector& a, const Vector& b, const Vector& c) {
    if (a.size() != b.size() || a.size() != c.size()) {
        throw DimensionError("length mismatch: eta=" + std::to_string(a.size()) +
                             " d=" + std::to_string(b.size()) + " y=" + std::to_string(c.size()));
    }
}

}  // namespace

GlzFamily GlzFamily::custom(CustomLoss loss) {
    if (!loss.loss || !loss.d1 || !loss.d2) {
        throw ValidationError("custom loss needs loss, first and second derivative");
    }
    GlzFamily f(FamilyKind::Custom);
    f.custom_ = std::move(loss);
    return f;
}

GlzFamily GlzFamily::from_name(std::string_view name) {
    if (name == "gaussian" || name == "linear") return linear_gaussian();
    if (name == "logistic" || name == "binomial") return logistic();
    if (name == "poisson") return poisson();
    throw ValidationError("unknown family '" + std::string(name) + "'");
}

std::string_view GlzFamily::name() const noexcept {
    switch (kind_) {
        case FamilyKind::LinearGaussian: return "gaussian";
        case FamilyKind::Logistic: return "logistic";
        case FamilyKind::Poisson: return "poisson";
        case FamilyKind::Custom: return "custom";
    }
    return "unknown";
}

double b_value(const GlzFamily& family, double eta) {
    check_finite_eta(eta);
    switch (family.kind()) {
        case FamilyKind::LinearGaussian: return 0.5 * eta * eta;
        case FamilyKind::Logistic: return logistic_b(eta);
        case FamilyKind::Poisson: return std::exp(std::min(eta, kPoissonEtaCap));
        case FamilyKind::Custom: break;
    }
    throw UnsupportedError("b(eta) is not defined for a custom loss");
}

MeanCurvature mean_and_curvature(const GlzFamily& family, double eta, double y) {
    check_finite_eta(eta);
    switch (family.kind()) {
        case FamilyKind::LinearGaussian: return {eta, 1.0};
        case FamilyKind::Logistic: {
            const double mu = sigmoid(eta);
            return {mu, mu * (1.0 - mu)};
        }
        case FamilyKind::Poisson: {
            const double mu = std::exp(std::min(eta, kPoissonEtaCap));
            return {mu, mu};
        }
        case FamilyKind::Custom: {
            const auto& c = family.custom_loss();
            return {c.d1(eta, y), c.d2(eta, y)};
        }
    }
    return {0.0, 0.0};
}

double pointwise_loss(const GlzFamily& family, double eta, double y) {
    if (family.kind() == FamilyKind::Custom) return family.custom_loss().loss(eta, y);
    return b_value(family, eta) - y * eta;
}

double negloglik(const GlzFamily& family, const Vector& eta, const Vector& d, const Vector& y) {
    check_lengths(eta, d, y);
    double total = 0.0;
    for (Index i = 0; i < eta.size(); ++i) {
        if (d[i] == 0.0) continue;
        total += d[i] * pointwise_loss(family, eta[i], y[i]);
    }
    return total;
}

Linearization linearize(const GlzFamily& family, const Vector& eta_bar, const Vector& d,
                        const Vector& y) {
    check_lengths(eta_bar, d, y);
    const Index n = eta_bar.size();
    Linearization lin;
    lin.eta = eta_bar;
    lin.e.setZero(n);
    lin.r.setZero(n);
    lin.b.setZero(n);
    const bool custom = family.kind() == FamilyKind::Custom;
    for (Index i = 0; i < n; ++i) {
        const double di = d[i];
        if (di < 0.0 || std::isnan(di)) {
            throw ValidationError("trial weight " + std::to_string(i) + " is negative");
        }
        if (di == 0.0) continue;
        const auto [mu, curv] = mean_and_curvature(family, eta_bar[i], y[i]);
        if (curv < 0.0 || std::isnan(curv)) {
            throw ConvexityError("loss curvature is negative at trial " + std::to_string(i));
        }
        if (family.kind() == FamilyKind::Poisson && eta_bar[i] > kPoissonEtaCap) {
            lin.saturated = true;
        }
        lin.e[i] = custom ? di * mu : di * (mu - y[i]);
        lin.r[i] = di * curv;
        lin.b[i] = lin.r[i] * eta_bar[i] - lin.e[i];
    }
    return lin;
}

Vector loss_gradient_eta(const GlzFamily& family, const Vector& eta, const Vector& d,
                         const Vector& y) {
    check_lengths(eta, d, y);
    const bool custom = family.kind() == FamilyKind::Custom;
    Vector e = Vector::Zero(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
        if (d[i] == 0.0) continue;
        const double mu = mean_and_curvature(family, eta[i], y[i]).mu;
        e[i] = custom ? d[i] * mu : d[i] * (mu - y[i]);
    }
    return e;
}

}  // namespace fastglz
