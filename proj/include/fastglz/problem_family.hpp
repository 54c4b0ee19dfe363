#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fastglz/glz_family.hpp"
#include "fastglz/types.hpp"

namespace fastglz {

/// Where a problem column came from. A product of families carries the
/// labels of both factors.
struct ProblemTag {
    std::optional<Index> fold;
    std::optional<Index> bootstrap;
    std::optional<Index> permutation;

    bool operator==(const ProblemTag&) const = default;
};

/// K related problems over one dataset: column k of `weights` is the trial
/// weighting d_k and column k of `responses` is the response vector y_k.
struct ProblemFamily {
    Matrix weights;    ///< n x K, non-negative
    Matrix responses;  ///< n x K
    std::vector<ProblemTag> tags;
    std::uint64_t seed = 0;

    Index trials() const noexcept { return weights.rows(); }
    Index problems() const noexcept { return weights.cols(); }
};

/// Every column shares d = 1 and the base response.
ProblemFamily single_problem(const Vector& y);

/// k-fold cross-validation. Trials are shuffled with `seed` and cut into
/// contiguous folds; the first n % folds folds take one extra trial. Held-out
/// trials get weight 0, training trials 1/(training size) when `normalize`
/// is set and 1 otherwise.
ProblemFamily cv_family(Index n, Index folds, const Vector& y, bool normalize = true,
                        std::uint64_t seed = 0);

/// Bootstrap replicates: column k holds the multinomial counts of n draws with
/// replacement, drawn from an independent stream per column.
ProblemFamily bootstrap_family(Index n, Index replicates, const Vector& y, std::uint64_t seed);

/// Permutation testing: `count` columns, each a uniform shuffle of y
/// (Fisher-Yates on an independent stream). Column 0 is the identity when
/// `include_identity` is set.
ProblemFamily permutation_family(const Vector& y, Index count, std::uint64_t seed,
                                 bool include_identity = true);

/// Crosses a weight-varying family with a response-varying one. Column
/// i * b.problems() + j takes weights from a's column i and responses from
/// b's column j.
ProblemFamily compose_product(const ProblemFamily& a, const ProblemFamily& b);

/// Columns of a followed by columns of b.
ProblemFamily concatenate(const ProblemFamily& a, const ProblemFamily& b);

/// Throws ValidationError unless D >= 0, every column has a positive weight,
/// shapes agree and (for logistic models) every response is 0 or 1.
void validate_problem_family(const ProblemFamily& problems, const GlzFamily& family);

/// Keeps only the listed columns, in the given order.
ProblemFamily select_problems(const ProblemFamily& problems, const std::vector<Index>& columns);

}  // namespace fastglz
