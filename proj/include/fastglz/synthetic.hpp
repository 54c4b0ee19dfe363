#pragma once

#include <cstdint>

#include "fastglz/glz_family.hpp"
#include "fastglz/types.hpp"

namespace fastglz {

/// Features x trials data with a sparse planted weight vector.
struct SyntheticData {
    Matrix X;      ///< p x n, standard normal entries
    Vector y;      ///< length n
    Vector w_true; ///< length p, `support` leading entries of alternating sign
};

/// Draws X ~ N(0, 1), w_true with `support` nonzeros of magnitude `signal`
/// and y from the family at eta = X^T w_true (Gaussian responses get unit
/// noise). Fully determined by the seed.
SyntheticData synthetic_glz(const GlzFamily& family, Index p, Index n, Index support,
                            std::uint64_t seed, double signal = 1.0);

/// K series of causal AR noise (coefficients is order x K) with unit-variance
/// innovations, after discarding `burn_in` samples. Returns T x K.
Matrix simulate_ar(const Matrix& coefficients, Index T, std::uint64_t seed, Index burn_in = 500);

/// K series of length T whose covariance is exactly circulant: white noise
/// passed through the inverse of each circular AR filter, so that the
/// circulant whitening matrix S_k maps the series back to white noise.
Matrix circular_ar_noise(const Matrix& coefficients, Index T, std::uint64_t seed);

}  // namespace fastglz
