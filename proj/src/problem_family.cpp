#include "fastglz/problem_family.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fastglz/error.hpp"
#include "fastglz/random.hpp"

namespace fastglz {

namespace {

void check_response(const Vector& y, Index n) {
    if (y.size() != n) {
        throw DimensionError("response has length " + std::to_string(y.size()) + ", expected " +
                             std::to_string(n));
    }
}

// Stream ids for the shuffles inside the builders; distinct from the
// per-column streams used by bootstrap and permutation columns.
constexpr std::uint64_t kFoldStream = 0xf01d'0000'0000'0000ULL;

}  // namespace

ProblemFamily single_problem(const Vector& y) {
    ProblemFamily out;
    out.weights = Matrix::Ones(y.size(), 1);
    out.responses = y;
    out.tags.resize(1);
    return out;
}

ProblemFamily cv_family(Index n, Index folds, const Vector& y, bool normalize,
                        std::uint64_t seed) {
    if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (folds > n) {
        throw ValidationError("folds (" + std::to_string(folds) + ") exceed trials (" +
                              std::to_string(n) + ")");
    }
    check_response(y, n);

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = Rng::stream(seed, kFoldStream);
    for (Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    ProblemFamily out;
    out.seed = seed;
    out.weights.resize(n, folds);
    out.responses.resize(n, folds);
    const Index base = n / folds;
    const Index extra = n % folds;
    Index start = 0;
    for (Index f = 0; f < folds; ++f) {
        const Index size = base + (f < extra ? 1 : 0);
        const double w = normalize ? 1.0 / static_cast<double>(n - size) : 1.0;
        out.weights.col(f).setConstant(w);
        for (Index i = start; i < start + size; ++i) {
            out.weights(order[static_cast<std::size_t>(i)], f) = 0.0;
        }
        out.responses.col(f) = y;
        ProblemTag tag;
        tag.fold = f;
        out.tags.push_back(tag);
        start += size;
    }
    return out;
}

ProblemFamily bootstrap_family(Index n, Index replicates, const Vector& y, std::uint64_t seed) {
    if (replicates < 1) throw ValidationError("bootstrap needs at least one replicate");
    if (n < 1) throw ValidationError("bootstrap needs at least one trial");
    check_response(y, n);

    ProblemFamily out;
    out.seed = seed;
    out.weights = Matrix::Zero(n, replicates);
    out.responses.resize(n, replicates);
    for (Index k = 0; k < replicates; ++k) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
        for (Index draw = 0; draw < n; ++draw) {
            out.weights(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))), k) += 1.0;
        }
        out.responses.col(k) = y;
        ProblemTag tag;
        tag.bootstrap = k;
        out.tags.push_back(tag);
    }
    return out;
}

ProblemFamily permutation_family(const Vector& y, Index count, std::uint64_t seed,
                                 bool include_identity) {
    if (count < 1) throw ValidationError("permutation family needs at least one column");
    const Index n = y.size();

    ProblemFamily out;
    out.seed = seed;
    out.weights = Matrix::Ones(n, count);
    out.responses.resize(n, count);
    for (Index k = 0; k < count; ++k) {
        Vector col = y;
        if (!(include_identity && k == 0)) {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
            for (Index i = n - 1; i > 0; --i) {
                const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
                std::swap(col[i], col[j]);
            }
        }
        out.responses.col(k) = col;
        ProblemTag tag;
        tag.permutation = k;
        out.tags.push_back(tag);
    }
    return out;
}

ProblemFamily compose_product(const ProblemFamily& a, const ProblemFamily& b) {
    if (a.trials() != b.trials()) {
        throw DimensionError("cannot cross families over " + std::to_string(a.trials()) +
                             " and " + std::to_string(b.trials()) + " trials");
    }
    const Index ka = a.problems();
    const Index kb = b.problems();
    ProblemFamily out;
    out.seed = a.seed;
    out.weights.resize(a.trials(), ka * kb);
    out.responses.resize(a.trials(), ka * kb);
    for (Index i = 0; i < ka; ++i) {
        for (Index j = 0; j < kb; ++j) {
            const Index k = i * kb + j;
            out.weights.col(k) = a.weights.col(i);
            out.responses.col(k) = b.responses.col(j);
            ProblemTag tag = a.tags.at(static_cast<std::size_t>(i));
            const ProblemTag& tb = b.tags.at(static_cast<std::size_t>(j));
            if (tb.fold) tag.fold = tb.fold;
            if (tb.bootstrap) tag.bootstrap = tb.bootstrap;
            if (tb.permutation) tag.permutation = tb.permutation;
            out.tags.push_back(tag);
        }
    }
    return out;
}

ProblemFamily concatenate(const ProblemFamily& a, const ProblemFamily& b) {
    if (a.trials() != b.trials()) {
        throw DimensionError("cannot stack families over " + std::to_string(a.trials()) +
                             " and " + std::to_string(b.trials()) + " trials");
    }
    ProblemFamily out;
    out.seed = a.seed;
    out.weights.resize(a.trials(), a.problems() + b.problems());
    out.responses.resize(a.trials(), a.problems() + b.problems());
    out.weights << a.weights, b.weights;
    out.responses << a.responses, b.responses;
    out.tags = a.tags;
    out.tags.insert(out.tags.end(), b.tags.begin(), b.tags.end());
    return out;
}

void validate_problem_family(const ProblemFamily& problems, const GlzFamily& family) {
    const Matrix& D = problems.weights;
    const Matrix& Y = problems.responses;
    if (D.rows() != Y.rows() || D.cols() != Y.cols()) {
        throw DimensionError("weight and response matrices differ in shape");
    }
    if (D.cols() == 0) throw ValidationError("problem family is empty");
    if (!problems.tags.empty() && static_cast<Index>(problems.tags.size()) != D.cols()) {
        throw DimensionError("tag count does not match problem count");
    }
    for (Index k = 0; k < D.cols(); ++k) {
        bool any_positive = false;
        for (Index i = 0; i < D.rows(); ++i) {
            const double w = D(i, k);
            if (!std::isfinite(w) || w < 0.0) {
                throw ValidationError("weight (" + std::to_string(i) + ", " + std::to_string(k) +
                                      ") is negative or non-finite");
            }
            any_positive = any_positive || w > 0.0;
            const double yi = Y(i, k);
            if (!std::isfinite(yi)) {
                throw ValidationError("response (" + std::to_string(i) + ", " +
                                      std::to_string(k) + ") is non-finite");
            }
            if (family.kind() == FamilyKind::Logistic && yi != 0.0 && yi != 1.0) {
                throw ValidationError("logistic responses must be 0 or 1");
            }
            if (family.kind() == FamilyKind::Poisson && yi < 0.0) {
                throw ValidationError("poisson responses must be non-negative");
            }
        }
        if (!any_positive) {
            throw ValidationError("problem " + std::to_string(k) + " has no positive weight");
        }
    }
}

ProblemFamily select_problems(const ProblemFamily& problems, const std::vector<Index>& columns) {
    ProblemFamily out;
    out.seed = problems.seed;
    const auto k = static_cast<Index>(columns.size());
    out.weights.resize(problems.trials(), k);
    out.responses.resize(problems.trials(), k);
    for (Index c = 0; c < k; ++c) {
        const Index src = columns[static_cast<std::size_t>(c)];
        if (src < 0 || src >= problems.problems()) throw DimensionError("problem index out of range");
        out.weights.col(c) = problems.weights.col(src);
        out.responses.col(c) = problems.responses.col(src);
        if (!problems.tags.empty()) out.tags.push_back(problems.tags[static_cast<std::size_t>(src)]);
    }
    if (problems.tags.empty()) out.tags.resize(static_cast<std::size_t>(k));
    return out;
}

}  // namespace fastglz
