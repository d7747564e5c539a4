#pragma once

#include <cmath>
#include <cstdint>

namespace cascade {

// Counter-based pseudo-random stream (splitmix64). The n-th output is a pure
// function of (seed, n), so streams can be recreated from a 64-bit seed and
// replayed identically on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller. Consumes exactly two uniforms per call;
    // nothing is cached, so the draw count stays predictable.
    double normal() {
        double u = uniform();  // 1 - u is in (0, 1], so the log is finite
        double v = uniform();
        return std::sqrt(-2.0 * std::log1p(-u)) * std::cos(2.0 * M_PI * v);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze.
    double gamma(double shape) {
        if (shape < 1.0) {
            double boost = std::pow(uniform_positive(), 1.0 / shape);
            return gamma(shape + 1.0) * boost;
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double f = 1.0 + c * x;
            if (f <= 0.0) continue;
            double v = f * f * f;
            double u = uniform_positive();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    double beta(double a, double b) {
        double x = gamma(a);
        double y = gamma(b);
        return x / (x + y);
    }

private:
    double uniform_positive() {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return u;
    }

    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

// Stream seed for cell (policy_index, run_index) of an experiment. Derived
// per cell so adding policies or runs never perturbs existing trajectories.
inline std::uint64_t derive_seed(std::uint64_t base_seed,
                                 std::uint64_t policy_index,
                                 std::uint64_t run_index) {
    std::uint64_t h = mix64(base_seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ (policy_index + 0xbb67ae8584caa73bULL));
    h = mix64(h ^ (run_index + 0x3c6ef372fe94f82bULL));
    return h;
}

}  // namespace cascade
