#include "fastglz/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fastglz/error.hpp"

namespace fastglz {

Vector group_prox(const Vector& l_block, double lambda1, double mu) {
    if (l_block.size() == 1) {
        Vector out(1);
        out[0] = -mu * soft_threshold(l_block[0], lambda1);
        return out;
    }
    const double norm = l_block.norm();
    if (norm <= lambda1 || norm == 0.0) return Vector::Zero(l_block.size());
    return (-mu * (1.0 - lambda1 / norm)) * l_block;
}

BlockStructure BlockStructure::singletons(Index features) {
    if (features < 0) throw ValidationError("negative feature count");
    BlockStructure s;
    const auto p = static_cast<std::size_t>(features);
    s.block_of_.resize(p);
    s.members_.resize(p);
    s.offsets_.resize(p + 1);
    for (std::size_t j = 0; j < p; ++j) {
        s.block_of_[j] = static_cast<Index>(j);
        s.members_[j] = static_cast<Index>(j);
        s.offsets_[j + 1] = static_cast<Index>(j + 1);
    }
    return s;
}

BlockStructure BlockStructure::from_groups(Index features,
                                           const std::vector<std::vector<Index>>& groups) {
    const auto p = static_cast<std::size_t>(features);
    std::vector<Index> owner(p, -1);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw ValidationError("group " + std::to_string(g) + " is empty");
        for (Index j : groups[g]) {
            if (j < 0 || j >= features) {
                throw ValidationError("group " + std::to_string(g) + " names feature " +
                                      std::to_string(j) + " outside [0, " + std::to_string(features) + ")");
            }
            if (owner[static_cast<std::size_t>(j)] != -1) {
                throw ValidationError("feature " + std::to_string(j) + " appears in more than one group");
            }
            owner[static_cast<std::size_t>(j)] = static_cast<Index>(g);
        }
    }

    // Blocks are ordered by their smallest feature index; members ascending.
    BlockStructure s;
    s.block_of_.assign(p, -1);
    for (std::size_t j = 0; j < p; ++j) {
        if (s.block_of_[j] != -1) continue;
        const Index block = s.blocks();
        if (owner[j] == -1) {
            s.members_.push_back(static_cast<Index>(j));
            s.block_of_[j] = block;
        } else {
            std::vector<Index> mem = groups[static_cast<std::size_t>(owner[j])];
            std::sort(mem.begin(), mem.end());
            for (Index m : mem) {
                s.members_.push_back(m);
                s.block_of_[static_cast<std::size_t>(m)] = block;
            }
            s.all_singletons_ = s.all_singletons_ && mem.size() == 1;
        }
        s.offsets_.push_back(static_cast<Index>(s.members_.size()));
    }
    return s;
}

double BlockStructure::penalty(const Vector& w, double lambda1) const {
    if (all_singletons_) return lambda1 * w.lpNorm<1>();
    double total = 0.0;
    for (Index b = 0; b < blocks(); ++b) {
        double sq = 0.0;
        for (Index j : members(b)) sq += w[j] * w[j];
        total += std::sqrt(sq);
    }
    return lambda1 * total;
}

}  // namespace fastglz
