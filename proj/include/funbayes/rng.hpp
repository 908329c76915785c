#pragma once

#include <cstdint>

namespace funbayes {

/// Seedable pseudo-random generator (xoshiro256**) with derived substreams.
///
/// All distribution draws are implemented in this library so that results
/// are reproducible across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    /// Independent stream for (seed, stream) pairs, e.g. one per replication.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1).
    double uniform01();

    /// Standard normal via the inverse-CDF method (Wichura AS 241).
    double normal();

    double exponential(double rate = 1.0);

    /// Uniform integer on [lo, hi], inclusive, by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

} // namespace funbayes
