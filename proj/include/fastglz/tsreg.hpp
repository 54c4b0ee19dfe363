#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "fastglz/simnewton.hpp"
#include "fastglz/types.hpp"

namespace fastglz::ts {

using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

bool is_power_of_two(Index m) noexcept;
Index next_power_of_two(Index m);

/// In-place radix-2 FFT, unnormalized, sign -1 in the exponent (inverse
/// flips the sign). Length must be a power of two.
void fft_inplace(ComplexVector& x, bool inverse = false);

/// Unitary DFT: x_hat_f = m^{-1/2} sum_t x_t exp(-2 pi i f t / m). Power-of-two
/// lengths use the FFT, other lengths direct summation.
ComplexVector dft(const Vector& x);
ComplexVector dft(const ComplexVector& x);
/// Inverse of dft.
ComplexVector idft(const ComplexVector& x);

/// Shared design (T x q) and K response series (T x K), zero-padded to
/// pad_length before transforming.
struct TimeSeriesBatch {
    Matrix design;
    Matrix series;
    Index pad_length = 0;

    Index length() const noexcept { return design.rows(); }
    Index regressors() const noexcept { return design.cols(); }
    Index count() const noexcept { return series.cols(); }
    /// Throws unless shapes agree and pad_length >= T.
    void validate() const;
};

/// Default padding: next power of two >= T + 2 * order.
Index default_pad_length(Index T, Index ar_order);

/// Per-series AR whitening filters [1, -phi_1, ..., -phi_order] and the
/// squared magnitudes of their zero-padded unnormalized DFTs (the real
/// diagonals of S_k^H S_k in the Fourier basis).
struct WhitenSpec {
    Index ar_order = 0;
    Index pad_length = 0;
    Matrix coefficients;  ///< ar_order x K, the phi of each series
    Matrix power;         ///< pad_length x K, |DFT(filter_k)|^2

    Index count() const noexcept { return power.cols(); }
};

/// Spec from explicit AR coefficients (ar_order x K).
WhitenSpec whitener_from_coefficients(const Matrix& coefficients, Index pad_length);

/// Yule-Walker fit (biased autocovariance, mean removed) of order ar_order to
/// each residual column. Degenerate residuals raise NumericalError.
WhitenSpec estimate_ar_whitener(const Matrix& residuals, Index ar_order, Index pad_length);

/// Applies each column's whitening filter in the time domain (causal, the
/// first `order` outputs use the available history only).
Matrix apply_whitener(const Matrix& series, const Matrix& coefficients);

struct GlsReport {
    Index iterations = 0;           ///< stationary iterations, max over series
    std::vector<double> residuals;  ///< relative residual per series
};

/// Solves every series' weighted normal equations
///   Re(X_hat^H P_k X_hat) w_k = Re(X_hat^H P_k y_hat_k)
/// with one shared template built from the element-wise max of the P_k.
/// Returns q x K. A singular template raises NumericalError.
Matrix gls_solve_freq_batch(const TimeSeriesBatch& batch, const WhitenSpec& spec, double tol = 1e-12,
                            GlsReport* report = nullptr, const StationaryOptions& options = {});

struct TsRegResult {
    Matrix ols;           ///< q x K, first pass with no whitening
    WhitenSpec whitener;  ///< estimated from the OLS residuals
    Matrix gls;           ///< q x K
    GlsReport report;
};

/// OLS, then AR whitening estimated from its residuals, then GLS.
TsRegResult tsreg_fit(const TimeSeriesBatch& batch, Index ar_order, double tol = 1e-12,
                      const StationaryOptions& options = {});

}  // namespace fastglz::ts
