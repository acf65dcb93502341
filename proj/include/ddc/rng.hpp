#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ddc/errors.hpp"

namespace ddc {

// splitmix64 step, used to spread seeds across independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic random source. The engine is std::mt19937_64 (bit-exact by
// the standard); all variate transforms are hand-rolled because the
// std::*_distribution adaptors are implementation-defined and would break
// cross-platform reproducibility.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream for one trial/path, stable under any interleaving.
    static Rng for_stream(std::uint64_t seed, std::uint64_t stream_index) {
        std::uint64_t s = seed;
        std::uint64_t a = splitmix64(s);
        s = seed ^ (stream_index + 0x9E3779B97F4A7C15ULL);
        std::uint64_t b = splitmix64(s);
        return Rng(a ^ (b * 0xD1342543DE82EF95ULL));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) {
        if (n == 0) throw DomainError("index over empty range");
        auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    // Standard normal via the Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // Gamma(shape, 1) via Marsaglia-Tsang; shapes below 1 use the boost
    // gamma(a) = gamma(a + 1) * U^(1/a).
    double gamma(double shape) {
        if (!(shape > 0.0)) throw DomainError("gamma shape must be > 0");
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        while (true) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Beta(a, b) as a gamma ratio.
    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

   private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ddc
