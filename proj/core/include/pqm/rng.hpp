#pragma once

#include <cstdint>

namespace pqm {

/// Deterministic random stream: xoshiro256++ seeded through splitmix64.
/// The same seed produces the same stream on every platform. Gaussian
/// samples come from the Box-Muller transform; a spare sample is cached
/// so consecutive normal() calls consume uniforms pairwise.
class Rng {
public:
    explicit Rng(uint64_t seed);

    uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_int(uint64_t n);

    double normal(double mean, double std);

    /// Derive an independent stream for a sub-task.
    Rng fork(uint64_t stream_id) const;

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// splitmix64 step, also used as the stable hash for split assignment.
uint64_t splitmix64(uint64_t x);

}  // namespace pqm
