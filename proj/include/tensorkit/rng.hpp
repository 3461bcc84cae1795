#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace tensorkit {

/// Seeded random source used by every randomised routine in the library.
/// Gaussian draws are generated by Box-Muller on top of mt19937_64 so that
/// a given seed produces the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal draw (two uniforms per call).
    double normal() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Unbiased uniform index in [0, n); rejection sampling, n >= 1.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
        const std::uint64_t limit = max - max % static_cast<std::uint64_t>(n);
        std::uint64_t v = 0;
        do {
            v = engine_();
        } while (v >= limit);
        return static_cast<std::size_t>(v % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

} // namespace tensorkit
