#include "pqm/rng.hpp"

#include <cmath>

#include "pqm/error.hpp"

namespace pqm {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    for (auto& w : state_) {
        s = s + 0x9e3779b97f4a7c15ULL;
        w = splitmix64(s);
    }
}

static inline uint64_t rotl(uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

uint64_t Rng::next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_int(uint64_t n) {
    if (n == 0) throw Error::validation("uniform_int: n must be > 0");
    // rejection sampling to avoid modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

double Rng::normal(double mean, double std) {
    if (std < 0.0) throw Error::validation("normal: std must be >= 0");
    if (has_spare_) {
        has_spare_ = false;
        return mean + std * spare_;
    }
    // Box-Muller; u1 shifted away from 0 so log() is finite
    double u1 = uniform();
    double u2 = uniform();
    u1 = 1.0 - u1;  // (0, 1]
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return mean + std * (radius * std::cos(angle));
}

Rng Rng::fork(uint64_t stream_id) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream_id)));
}

}  // namespace pqm
