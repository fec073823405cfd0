// Deterministic RNG: xoshiro256++ core with splitmix64 seeding, plus the
// variate generators the samplers need. Hand-rolled (not <random>
// distributions) so that identical seeds give identical streams on every
// platform and toolchain.

#pragma once

#include <cmath>
#include <cstdint>

namespace vrm {

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        for (auto& word : state_) {
            word = splitmix64(x);
        }
    }

    std::uint64_t next_u64() {
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

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe under log().
    double uniform_pos() { return 1.0 - uniform(); }

    // Standard normal via Box-Muller (cosine branch).
    double normal() {
        const double u = uniform_pos();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
    }

    // Gamma(alpha, 1) by the Marsaglia-Tsang squeeze, with the shape-boost
    // step g = gamma(alpha+1) * u^(1/alpha) for alpha < 1.
    double gamma(double alpha) {
        if (alpha < 1.0) {
            const double u = uniform_pos();
            return gamma_ge1(alpha + 1.0) * std::pow(u, 1.0 / alpha);
        }
        return gamma_ge1(alpha);
    }

    // Derive an independent generator for a labelled substream.
    Rng fork(std::uint64_t stream) { return Rng(next_u64(), stream); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double gamma_ge1(double alpha) {
        const double d = alpha - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_pos();
            const double x2 = x * x;
            if (u < 1.0 - 0.0331 * x2 * x2) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

    std::uint64_t state_[4];
};

}  // namespace vrm
