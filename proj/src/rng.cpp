#include "curvedress/rng.hpp"

#include "curvedress/kernels.hpp"

namespace curvedress {

namespace {

std::uint64_t splitmix_next(std::uint64_t& s) {
    s += 0x9E3779B97F4A7C15ULL;
    return mix64(s);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix_next(s);
}

Rng Rng::fork(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed ^ 0xA3EC647659359ACDULL);
    for (std::uint64_t p : path) h = mix64(h ^ (p + 0x9E3779B97F4A7C15ULL));
    return Rng(h);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_open() {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
    return kernels::norm_cdf_inv(uniform_open());
}

}  // namespace curvedress
