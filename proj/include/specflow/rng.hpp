#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace specflow {

/// Deterministic 64-bit generator (splitmix64) with hand-rolled Gaussian
/// sampling, so that seeded streams are identical across platforms and
/// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one fresh pair per call, cosine branch).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    /// Complex normal with E|z|^2 = 1.
    std::complex<double> complex_normal() {
        return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
    }

private:
    std::uint64_t state_;
};

}  // namespace specflow
