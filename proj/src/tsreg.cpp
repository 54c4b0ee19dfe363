#include "fastglz/tsreg.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "fastglz/error.hpp"

namespace fastglz::ts {

using Complex = std::complex<double>;

bool is_power_of_two(Index m) noexcept { return m > 0 && (m & (m - 1)) == 0; }

Index next_power_of_two(Index m) {
    if (m < 1) return 1;
    Index out = 1;
    while (out < m) {
        if (out > (Index{1} << 61)) throw ValidationError("length too large for padding");
        out <<= 1;
    }
    return out;
}

void fft_inplace(ComplexVector& x, bool inverse) {
    const Index m = x.size();
    if (!is_power_of_two(m)) throw ValidationError("FFT length must be a power of two");
    // Bit-reversal permutation.
    for (Index i = 1, j = 0; i < m; ++i) {
        Index bit = m >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (Index len = 2; len <= m; len <<= 1) {
        const Index half = len / 2;
        for (Index k = 0; k < half; ++k) {
            // Twiddles from the angle directly; recurrence would drift at large m.
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const Complex wk(std::cos(angle), std::sin(angle));
            for (Index start = 0; start < m; start += len) {
                const Complex u = x[start + k];
                const Complex t = wk * x[start + k + half];
                x[start + k] = u + t;
                x[start + k + half] = u - t;
            }
        }
    }
}

namespace {

ComplexVector direct_dft(const ComplexVector& x, bool inverse) {
    const Index m = x.size();
    const double sign = inverse ? 1.0 : -1.0;
    ComplexVector out(m);
    for (Index f = 0; f < m; ++f) {
        Complex acc(0.0, 0.0);
        for (Index t = 0; t < m; ++t) {
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((f * t) % m) / static_cast<double>(m);
            acc += x[t] * Complex(std::cos(angle), std::sin(angle));
        }
        out[f] = acc;
    }
    return out;
}

ComplexVector transform(ComplexVector x, bool inverse) {
    if (x.size() < 1) throw ValidationError("DFT length must be >= 1");
    if (is_power_of_two(x.size())) {
        fft_inplace(x, inverse);
    } else {
        x = direct_dft(x, inverse);
    }
    x /= std::sqrt(static_cast<double>(x.size()));
    return x;
}

// Unnormalized DFT of a real filter zero-padded to m, returned as |.|^2.
Vector filter_power(const Vector& filter, Index m) {
    ComplexVector buf = ComplexVector::Zero(m);
    for (Index i = 0; i < filter.size(); ++i) buf[i] = filter[i];
    buf = transform(std::move(buf), false) * std::sqrt(static_cast<double>(m));
    return buf.cwiseAbs2();
}

}  // namespace

ComplexVector dft(const Vector& x) { return transform(x.cast<Complex>(), false); }
ComplexVector dft(const ComplexVector& x) { return transform(x, false); }
ComplexVector idft(const ComplexVector& x) { return transform(x, true); }

void TimeSeriesBatch::validate() const {
    if (design.rows() < 1 || design.cols() < 1) throw ValidationError("design matrix is empty");
    if (series.rows() != design.rows()) {
        throw DimensionError("series have " + std::to_string(series.rows()) + " time points, design has " +
                             std::to_string(design.rows()));
    }
    if (series.cols() < 1) throw ValidationError("no series to fit");
    if (pad_length < design.rows()) throw ValidationError("pad_length must be >= the series length");
    if (design.cols() > pad_length) throw ValidationError("more regressors than frequency bins");
    if (!design.allFinite() || !series.allFinite()) throw ValidationError("time-series inputs must be finite");
}

Index default_pad_length(Index T, Index ar_order) {
    if (T < 1 || ar_order < 0) throw ValidationError("need T >= 1 and ar_order >= 0");
    return next_power_of_two(T + 2 * ar_order);
}

WhitenSpec whitener_from_coefficients(const Matrix& coefficients, Index pad_length) {
    const Index order = coefficients.rows();
    if (pad_length < order + 1) throw ValidationError("pad_length too short for the filter");
    WhitenSpec spec;
    spec.ar_order = order;
    spec.pad_length = pad_length;
    spec.coefficients = coefficients;
    spec.power.resize(pad_length, coefficients.cols());
    for (Index k = 0; k < coefficients.cols(); ++k) {
        Vector filter(order + 1);
        filter[0] = 1.0;
        filter.tail(order) = -coefficients.col(k);
        spec.power.col(k) = filter_power(filter, pad_length);
    }
    return spec;
}

WhitenSpec estimate_ar_whitener(const Matrix& residuals, Index ar_order, Index pad_length) {
    const Index T = residuals.rows();
    const Index K = residuals.cols();
    if (ar_order < 0) throw ValidationError("ar_order must be >= 0");
    if (T <= ar_order) throw ValidationError("series shorter than the AR order");
    if (!residuals.allFinite()) throw ValidationError("residuals must be finite");
    Matrix coefficients(ar_order, K);
    for (Index k = 0; k < K; ++k) {
        if (ar_order == 0) break;
        const Vector x = residuals.col(k).array() - residuals.col(k).mean();
        Vector gamma(ar_order + 1);
        for (Index h = 0; h <= ar_order; ++h) {
            gamma[h] = x.head(T - h).dot(x.tail(T - h)) / static_cast<double>(T);
        }
        if (!(gamma[0] > 0.0)) throw NumericalError("series " + std::to_string(k) + " has zero variance");
        Matrix toeplitz(ar_order, ar_order);
        for (Index i = 0; i < ar_order; ++i) {
            for (Index j = 0; j < ar_order; ++j) toeplitz(i, j) = gamma[std::abs(i - j)];
        }
        Eigen::LLT<Matrix> llt(toeplitz);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("autocovariance of series " + std::to_string(k) + " is not positive definite");
        }
        coefficients.col(k) = llt.solve(gamma.tail(ar_order));
    }
    return whitener_from_coefficients(coefficients, pad_length);
}

Matrix apply_whitener(const Matrix& series, const Matrix& coefficients) {
    if (coefficients.cols() != series.cols()) throw DimensionError("one filter per series is required");
    const Index order = coefficients.rows();
    Matrix out = series;
    for (Index k = 0; k < series.cols(); ++k) {
        for (Index t = 0; t < series.rows(); ++t) {
            for (Index i = 1; i <= order && i <= t; ++i) out(t, k) -= coefficients(i - 1, k) * series(t - i, k);
        }
    }
    return out;
}

Matrix gls_solve_freq_batch(const TimeSeriesBatch& batch, const WhitenSpec& spec, double tol,
                            GlsReport* report, const StationaryOptions& options) {
    batch.validate();
    if (spec.pad_length != batch.pad_length || spec.power.rows() != batch.pad_length) {
        throw DimensionError("whitening spec and batch disagree on the padded length");
    }
    if (spec.count() != batch.count()) throw DimensionError("one whitening filter per series is required");
    if ((spec.power.array() < 0.0).any() || !spec.power.allFinite()) {
        throw ValidationError("whitening power must be finite and non-negative");
    }
    const Index T = batch.length();
    const Index q = batch.regressors();
    const Index N = batch.pad_length;
    const Index K = batch.count();

    // Real form of the complex system: columns [Re X_hat^T, Im X_hat^T].
    Matrix zr(q, 2 * N);
    for (Index j = 0; j < q; ++j) {
        Vector padded = Vector::Zero(N);
        padded.head(T) = batch.design.col(j);
        const ComplexVector xh = dft(padded);
        zr.row(j).head(N) = xh.real().transpose();
        zr.row(j).tail(N) = xh.imag().transpose();
    }
    Matrix weights(2 * N, K);
    weights.topRows(N) = spec.power;
    weights.bottomRows(N) = spec.power;

    NewtonBatch nb;
    nb.alpha = Matrix::Zero(q, K);
    nb.rhs.resize(q, K);
    for (Index k = 0; k < K; ++k) {
        Vector padded = Vector::Zero(N);
        padded.head(T) = batch.series.col(k);
        const ComplexVector yh = dft(padded);
        Vector yr(2 * N);
        yr.head(N) = yh.real();
        yr.tail(N) = yh.imag();
        nb.rhs.col(k).noalias() = zr * weights.col(k).cwiseProduct(yr);
    }

    Vector r_template = weights.rowwise().maxCoeff();
    TemplateSystem tmpl;
    try {
        tmpl = build_template_from_diagonal(zr, std::move(r_template), 0.0);
    } catch (const NumericalError&) {
        throw NumericalError("whitened design is rank deficient; add a ridge term (tsreg has no shift) or drop regressors");
    }
    nb.r_delta = residual_diagonals(tmpl, weights);
    StationaryOptions opts = options;
    opts.tol = tol;
    stationary_solve_batch(tmpl, zr, nb, opts);
    if (report != nullptr) {
        report->iterations = nb.iterations_used;
        report->residuals = nb.residuals;
    }
    return nb.alpha;
}

TsRegResult tsreg_fit(const TimeSeriesBatch& batch, Index ar_order, double tol,
                      const StationaryOptions& options) {
    batch.validate();
    TsRegResult out;
    const WhitenSpec identity = whitener_from_coefficients(Matrix(0, batch.count()), batch.pad_length);
    out.ols = gls_solve_freq_batch(batch, identity, tol, nullptr, options);
    const Matrix residuals = batch.series - batch.design * out.ols;
    out.whitener = estimate_ar_whitener(residuals, ar_order, batch.pad_length);
    out.gls = gls_solve_freq_batch(batch, out.whitener, tol, &out.report, options);
    return out;
}

}  // namespace fastglz::ts
