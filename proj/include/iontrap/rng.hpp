#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Seeded random sampling with fully specified algorithms so that identical
// seeds reproduce identical streams on any platform. std::mt19937_64 is
// specified by the standard; the distributions here are hand-rolled because
// the standard library's are implementation-defined.

namespace iontrap {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return double(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1), never exactly 0 or 1.
    double uniform_open() {
        return (double(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Poisson sample; inversion for small means, Hormann's PTRD transformed
    /// rejection for large means. Exact distribution in both regimes.
    std::uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 10.0) {
            const double limit = std::exp(-mean);
            std::uint64_t k = 0;
            double product = uniform_open();
            while (product > limit) {
                ++k;
                product *= uniform_open();
            }
            return k;
        }
        // PTRD (W. Hormann, 1993)
        const double smu = std::sqrt(mean);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform_open();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return kf > 0 ? std::uint64_t(kf) : 0;
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs = kf * std::log(mean) - mean - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return std::uint64_t(kf);
        }
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace iontrap
