#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "iontrap/constants.hpp"
#include "iontrap/numerics.hpp"

// Bright/dark state discrimination by thresholding Poisson photon counts:
// optimal integer threshold, fidelity at a given integration time, and the
// minimum time to reach a target fidelity.

namespace iontrap {

struct CountModel {
    double bright_rate_hz = 0.0; // detected photons/s from the bright state
    double dark_rate_hz = 0.0;   // background + dark counts
    double integration_time_s = 0.0;

    void validate() const {
        if (bright_rate_hz < 0.0 || dark_rate_hz < 0.0)
            throw DomainError("count rates must be >= 0");
        if (integration_time_s < 0.0)
            throw DomainError("integration time must be >= 0");
    }
};

struct NonDiscriminableError : DomainError {
    using DomainError::DomainError;
};

struct DiscriminationResult {
    std::uint64_t threshold = 0; // classify bright when counts >= threshold
    double fidelity = 0.5;
    double p_miss = 0.0;  // bright read as dark
    double p_false = 1.0; // dark read as bright
};

namespace detail {

inline double poisson_log_pmf(double mean, double k) {
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

} // namespace detail

/// P(X < n) for X ~ Poisson(mean), by direct ascending summation.
inline double poisson_lower_tail(double mean, std::uint64_t n) {
    if (n == 0) return 0.0;
    if (mean <= 0.0) return 1.0; // all mass at k = 0 < n
    double sum = 0.0;
    double term = std::exp(detail::poisson_log_pmf(mean, 0.0)); // may underflow; rebuilt below
    if (term == 0.0 && n > 1) {
        // start the recurrence at the largest term below n to avoid underflow
        const double k0 = std::min<double>(double(n - 1), std::floor(mean));
        term = std::exp(detail::poisson_log_pmf(mean, k0));
        // sum downward from k0
        double t = term;
        for (double k = k0; k >= 1.0 && t > sum * 1e-20; k -= 1.0) {
            sum += t;
            t *= k / mean;
        }
        // and upward from k0+1 to n-1
        t = term * mean / (k0 + 1.0);
        for (double k = k0 + 1.0; k <= double(n - 1); k += 1.0) {
            sum += t;
            t *= mean / (k + 1.0);
        }
        return std::min(1.0, sum);
    }
    for (std::uint64_t k = 0; k < n; ++k) {
        sum += term;
        term *= mean / double(k + 1);
    }
    return std::min(1.0, sum);
}

/// P(X >= n), by direct summation from n upward until terms are negligible.
inline double poisson_upper_tail(double mean, std::uint64_t n) {
    if (n == 0) return 1.0;
    if (mean <= 0.0) return 0.0;
    double term = std::exp(detail::poisson_log_pmf(mean, double(n)));
    double sum = 0.0;
    double k = double(n);
    // terms grow until k ~ mean, then decay; sum until negligible past both
    while (term > 0.0 && (k <= mean || term > sum * 1e-22)) {
        sum += term;
        k += 1.0;
        term *= mean / k;
        if (k > mean + double(n) + 80.0 * std::sqrt(mean + 1.0) + 80.0) break;
    }
    return std::min(1.0, sum);
}

/// Optimal integer threshold for Poisson means (bright, dark): minimizes
/// (p_miss + p_false)/2 over thresholds; ties resolved toward smaller n.
inline DiscriminationResult optimal_threshold_for_means(double bright_mean,
                                                        double dark_mean) {
    if (!(bright_mean > dark_mean))
        throw NonDiscriminableError("bright mean must exceed dark mean, got bright = " +
                                    std::to_string(bright_mean) + ", dark = " +
                                    std::to_string(dark_mean));
    const std::uint64_t n_max =
        std::uint64_t(std::ceil(bright_mean + 10.0 * std::sqrt(bright_mean))) + 1;

    // Fast incremental scan to locate the minimizer, then exact tails there.
    double best_err = 1.0; // n = 0: p_miss = 0, p_false = 1
    std::uint64_t best_n = 0;
    double cum_b = 0.0, cum_d = 0.0; // P(X < n) running sums
    double term_b = std::exp(-bright_mean);
    double term_d = std::exp(-dark_mean);
    const bool incremental_ok = term_b > 0.0 && term_d > 0.0;
    for (std::uint64_t n = 1; n <= n_max; ++n) {
        double err;
        if (incremental_ok) {
            cum_b += term_b;
            term_b *= bright_mean / double(n);
            cum_d += term_d;
            term_d *= dark_mean / double(n);
            err = 0.5 * (cum_b + std::max(0.0, 1.0 - cum_d));
        } else {
            err = 0.5 * (poisson_lower_tail(bright_mean, n) +
                         poisson_upper_tail(dark_mean, n));
        }
        if (err < best_err - 1e-15) {
            best_err = err;
            best_n = n;
        }
    }
    DiscriminationResult r;
    r.threshold = best_n;
    r.p_miss = poisson_lower_tail(bright_mean, best_n);
    r.p_false = best_n == 0 ? 1.0 : poisson_upper_tail(dark_mean, best_n);
    r.fidelity = 1.0 - 0.5 * (r.p_miss + r.p_false);
    return r;
}

inline DiscriminationResult optimal_threshold(const CountModel& m) {
    m.validate();
    return optimal_threshold_for_means(m.bright_rate_hz * m.integration_time_s,
                                       m.dark_rate_hz * m.integration_time_s);
}

/// Discrimination fidelity after integrating for time t.
inline double fidelity_at_time(double bright_rate_hz, double dark_rate_hz, double t_s) {
    if (t_s < 0.0) throw DomainError("integration time must be >= 0");
    if (t_s == 0.0) return 0.5; // identical (empty) count distributions
    return optimal_threshold_for_means(bright_rate_hz * t_s, dark_rate_hz * t_s).fidelity;
}

struct UnreachableFidelityError : SolverError {
    double supremum_fidelity;
    UnreachableFidelityError(const std::string& msg, double sup)
        : SolverError(msg), supremum_fidelity(sup) {}
};

/// Smallest integration time reaching the target fidelity, by doubling then
/// bisection to 1% relative width. The returned time is on the >= target
/// side of the bracket.
inline double min_integration_time(double bright_rate_hz, double dark_rate_hz,
                                   double target_fidelity) {
    if (!(target_fidelity > 0.5) || !(target_fidelity < 1.0))
        throw DomainError("target fidelity must be in (0.5, 1)");
    if (!(bright_rate_hz > dark_rate_hz))
        throw NonDiscriminableError("bright rate must exceed dark rate");

    double hi = 1e-12;
    int doublings = 0;
    while (fidelity_at_time(bright_rate_hz, dark_rate_hz, hi) < target_fidelity) {
        hi *= 2.0;
        if (++doublings > 80)
            throw UnreachableFidelityError(
                "target fidelity " + std::to_string(target_fidelity) +
                    " not reached within the search range",
                fidelity_at_time(bright_rate_hz, dark_rate_hz, hi / 2.0));
    }
    double lo = hi / 2.0;
    if (doublings == 0) lo = 0.0;
    while (hi - lo > 0.01 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (fidelity_at_time(bright_rate_hz, dark_rate_hz, mid) >= target_fidelity)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Gaussian (analog photocurrent) companion to the counting model: fidelity
/// for two normal distributions with an optimal scalar threshold.
inline double analog_fidelity(double bright_level, double dark_level,
                              double bright_sigma, double dark_sigma) {
    if (!(bright_level > dark_level)) throw NonDiscriminableError("bright level must exceed dark level");
    if (!(bright_sigma > 0.0) || !(dark_sigma > 0.0))
        throw DomainError("sigmas must be positive");
    auto err = [&](double thr) {
        const double miss = 0.5 * std::erfc((bright_level - thr) / (bright_sigma * M_SQRT2));
        const double false_pos = 0.5 * std::erfc((thr - dark_level) / (dark_sigma * M_SQRT2));
        return 0.5 * (miss + false_pos);
    };
    auto [thr, neg_err] = golden_maximize([&](double x) { return -err(x); },
                                          dark_level, bright_level, 1e-12);
    (void)thr;
    return 1.0 + neg_err; // 1 - err
}

} // namespace iontrap
