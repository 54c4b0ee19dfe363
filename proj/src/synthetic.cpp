#include "fastglz/synthetic.hpp"

#include <cmath>

#include "fastglz/error.hpp"
#include "fastglz/random.hpp"
#include "fastglz/tsreg.hpp"

namespace fastglz {

SyntheticData synthetic_glz(const GlzFamily& family, Index p, Index n, Index support,
                            std::uint64_t seed, double signal) {
    if (p < 1 || n < 1) throw ValidationError("need p >= 1 and n >= 1");
    if (support < 0 || support > p) throw ValidationError("support must lie in [0, p]");
    if (!family.is_builtin()) throw UnsupportedError("synthetic data needs a built-in family");
    Rng rng(seed);
    SyntheticData out;
    out.X.resize(p, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < p; ++i) out.X(i, j) = rng.normal();
    }
    out.w_true = Vector::Zero(p);
    for (Index i = 0; i < support; ++i) out.w_true[i] = (i % 2 == 0 ? signal : -signal);
    const Vector eta = out.X.transpose() * out.w_true;
    out.y.resize(n);
    for (Index t = 0; t < n; ++t) {
        switch (family.kind()) {
            case FamilyKind::LinearGaussian:
                out.y[t] = eta[t] + rng.normal();
                break;
            case FamilyKind::Logistic: {
                const double prob = 1.0 / (1.0 + std::exp(-eta[t]));
                out.y[t] = rng.uniform() < prob ? 1.0 : 0.0;
                break;
            }
            case FamilyKind::Poisson: {
                // Knuth's product method; rates here stay moderate.
                const double limit = std::exp(-std::min(eta[t], 20.0));
                double prod = rng.uniform();
                double count = 0.0;
                while (prod > limit) {
                    prod *= rng.uniform();
                    count += 1.0;
                }
                out.y[t] = count;
                break;
            }
            case FamilyKind::Custom:
                break;
        }
    }
    return out;
}

Matrix simulate_ar(const Matrix& coefficients, Index T, std::uint64_t seed, Index burn_in) {
    if (T < 1 || burn_in < 0) throw ValidationError("need T >= 1 and burn_in >= 0");
    const Index order = coefficients.rows();
    const Index K = coefficients.cols();
    Matrix out(T, K);
    for (Index k = 0; k < K; ++k) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
        Vector x = Vector::Zero(T + burn_in);
        for (Index t = 0; t < T + burn_in; ++t) {
            double value = rng.normal();
            for (Index i = 1; i <= order && i <= t; ++i) value += coefficients(i - 1, k) * x[t - i];
            x[t] = value;
        }
        out.col(k) = x.tail(T);
    }
    return out;
}

Matrix circular_ar_noise(const Matrix& coefficients, Index T, std::uint64_t seed) {
    const Index order = coefficients.rows();
    const Index K = coefficients.cols();
    if (T < order + 1) throw ValidationError("series too short for the filter");
    Matrix out(T, K);
    for (Index k = 0; k < K; ++k) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
        ts::ComplexVector z(T);
        for (Index t = 0; t < T; ++t) z[t] = rng.normal();
        ts::ComplexVector filter = ts::ComplexVector::Zero(T);
        filter[0] = 1.0;
        for (Index i = 0; i < order; ++i) filter[i + 1] = -coefficients(i, k);
        // Circular convolution with the filter is a product of unnormalized
        // DFTs; dividing undoes it.
        const ts::ComplexVector fh = ts::dft(filter) * std::sqrt(static_cast<double>(T));
        if ((fh.cwiseAbs().array() < 1e-12).any()) throw NumericalError("AR filter has a zero on the unit circle");
        const ts::ComplexVector zh = ts::dft(z);
        out.col(k) = ts::idft(zh.cwiseQuotient(fh)).real();
    }
    return out;
}

}  // namespace fastglz
