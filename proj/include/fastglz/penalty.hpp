#pragma once

#include <span>
#include <vector>

#include "fastglz/types.hpp"

namespace fastglz {

/// sgn(a) * max(|a| - t, 0).
inline double soft_threshold(double a, double t) {
    if (a > t) return a - t;
    if (a < -t) return a + t;
    return 0.0;
}

/// Block update of the splitting variable for the penalty lambda1 * ||v_block||_2:
///   -mu * (1 - lambda1 / ||l_block||_2)_+ * l_block.
/// A single-element block reduces to -mu * soft(l, lambda1) and is computed
/// that way, so the elementwise l1 case is reproduced exactly.
Vector group_prox(const Vector& l_block, double lambda1, double mu);

/// Partition of the p features into penalty blocks. Features not named in any
/// group form singleton blocks, so the plain l1 penalty is the all-singleton
/// partition.
class BlockStructure {
public:
    BlockStructure() = default;

    static BlockStructure singletons(Index features);

    /// Groups must be disjoint, non-empty and in range. Throws ValidationError.
    static BlockStructure from_groups(Index features, const std::vector<std::vector<Index>>& groups);

    Index features() const noexcept { return static_cast<Index>(block_of_.size()); }
    Index blocks() const noexcept { return static_cast<Index>(offsets_.size()) - 1; }
    Index block_of(Index feature) const { return block_of_[static_cast<std::size_t>(feature)]; }
    std::span<const Index> members(Index block) const {
        const auto b = static_cast<std::size_t>(block);
        return {members_.data() + offsets_[b], static_cast<std::size_t>(offsets_[b + 1] - offsets_[b])};
    }
    bool all_singletons() const noexcept { return all_singletons_; }

    /// lambda1 * sum over blocks of ||w_block||_2 (the l1 norm for singletons).
    double penalty(const Vector& w, double lambda1) const;

private:
    std::vector<Index> block_of_;
    std::vector<Index> offsets_{0};
    std::vector<Index> members_;
    bool all_singletons_ = true;
};

}  // namespace fastglz
