#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace curvedress {

/// Stateless 64-bit mix (splitmix64 finalizer). Also used by the permutation
/// resampling kernels, where per-decision hashing keeps scalar and SIMD
/// variants on identical random streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
/// reproducible across platforms and standard libraries; std:: distributions
/// are deliberately not used anywhere in the library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    /// Derives an independent stream from (seed, path...). Used to give each
    /// (day, hour, model) its own generator so evaluation order never
    /// affects results.
    static Rng fork(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    std::uint64_t next_u64();
    double uniform();                    // [0, 1)
    double uniform_open();               // (0, 1), never returns an endpoint
    double normal();                     // standard normal via inverse CDF
    double normal(double mean, double sd) { return mean + sd * normal(); }

  private:
    std::array<std::uint64_t, 4> state_;
};

}  // namespace curvedress
