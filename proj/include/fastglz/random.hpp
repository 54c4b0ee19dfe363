#pragma once

#include <cstdint>

namespace fastglz {

/// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and for deriving
/// independent per-column streams from a single user seed.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman, Vigna). Output is fully specified, so streams are
/// bit-identical across platforms and standard libraries, unlike the
/// <random> distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Stream `stream` of the family rooted at `seed`. Streams for different
    /// indices are independent, so adding columns never disturbs earlier ones.
    static Rng stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer on [0, bound), unbiased (Lemire's multiply-and-reject).
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via the Box-Muller transform (no cached second value).
    double normal();

private:
    std::uint64_t s_[4];
};

}  // namespace fastglz
