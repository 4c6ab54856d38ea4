#include <catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>

#include "iontrap/state_detection.hpp"

using namespace iontrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using big_float = boost::multiprecision::cpp_bin_float_50;

// 50-digit reference for the Poisson tails, summed term by term.
big_float big_poisson_pmf(const big_float& mean, unsigned k) {
    big_float term = exp(-mean);
    for (unsigned i = 1; i <= k; ++i) term *= mean / i;
    return term;
}

big_float big_lower_tail(const big_float& mean, unsigned n) {
    big_float sum = 0;
    for (unsigned k = 0; k < n; ++k) sum += big_poisson_pmf(mean, k);
    return sum;
}

big_float big_upper_tail(const big_float& mean, unsigned n) {
    // sum far enough that the neglected remainder is below 1e-60
    big_float sum = 0;
    const unsigned cap = n + 400 + unsigned(4.0 * double(mean));
    for (unsigned k = n; k < cap; ++k) sum += big_poisson_pmf(mean, k);
    return sum;
}

// Exhaustive threshold search with the reference tails.
std::pair<unsigned, double> brute_force_threshold(double bright, double dark) {
    unsigned best_n = 0;
    big_float best_err = 1;
    for (unsigned n = 0; n <= unsigned(bright + 10.0 * std::sqrt(bright)) + 2; ++n) {
        const big_float err =
            (big_lower_tail(big_float(bright), n) +
             (n == 0 ? big_float(1) : big_upper_tail(big_float(dark), n))) /
            2;
        if (err < best_err) {
            best_err = err;
            best_n = n;
        }
    }
    return {best_n, double(big_float(1) - best_err)};
}

} // namespace

TEST_CASE("threshold for a dark-free bright state") {
    const auto r = optimal_threshold_for_means(20.0, 0.0);
    CHECK(r.threshold == 1);
    CHECK_THAT(0.5 * (r.p_miss + r.p_false), WithinRel(std::exp(-20.0) / 2.0, 1e-12));
    CHECK(r.p_false == 0.0);
    CHECK(r.fidelity > 1.0 - 1.1e-9);
}

TEST_CASE("threshold matches the exhaustive reference") {
    for (auto [bright, dark] : {std::pair{10.0, 1.0}, {5.0, 0.5}, {40.0, 8.0}, {3.0, 2.0}}) {
        const auto r = optimal_threshold_for_means(bright, dark);
        const auto [ref_n, ref_f] = brute_force_threshold(bright, dark);
        CHECK(r.threshold == ref_n);
        CHECK_THAT(r.fidelity, WithinAbs(ref_f, 1e-12));
    }
}

TEST_CASE("fidelity components are consistent") {
    const auto r = optimal_threshold_for_means(12.0, 2.0);
    CHECK_THAT(r.fidelity, WithinRel(1.0 - 0.5 * (r.p_miss + r.p_false), 1e-12));
    CHECK(r.p_miss >= 0.0);
    CHECK(r.p_false >= 0.0);
    CHECK(r.fidelity <= 1.0);
}

TEST_CASE("indistinguishable limit") {
    CHECK(fidelity_at_time(1e6, 1e6 * (1.0 - 1e-9), 1e-6) < 0.5001);
    CHECK_THROWS_AS(optimal_threshold_for_means(1.0, 1.0), NonDiscriminableError);
    CHECK_THROWS_AS(optimal_threshold_for_means(1.0, 2.0), NonDiscriminableError);
}

TEST_CASE("zero integration time gives coin-flip fidelity") {
    CHECK(fidelity_at_time(1e6, 1e3, 0.0) == 0.5);
}

TEST_CASE("poisson tails match the 50-digit reference") {
    for (double mean : {0.5, 1.0, 5.0, 20.0, 50.0, 100.0}) {
        for (unsigned n :
             {1u, 2u, 5u, unsigned(mean), unsigned(mean + 3.0 * std::sqrt(mean)) + 1}) {
            const double lower = poisson_lower_tail(mean, n);
            const double upper = poisson_upper_tail(mean, n);
            const double ref_lower = double(big_lower_tail(big_float(mean), n));
            const double ref_upper = double(big_upper_tail(big_float(mean), n));
            if (ref_lower > 1e-300)
                CHECK_THAT(lower, WithinRel(ref_lower, 1e-12));
            if (ref_upper > 1e-300)
                CHECK_THAT(upper, WithinRel(ref_upper, 1e-12));
        }
    }
}

TEST_CASE("fidelity is monotone in time and rates") {
    std::mt19937_64 gen(51);
    std::uniform_real_distribution<double> ub(1e4, 1e7);
    std::uniform_real_distribution<double> ud(1e1, 5e3);
    std::uniform_real_distribution<double> ut(1e-7, 1e-3);
    for (int i = 0; i < 100; ++i) {
        const double bright = ub(gen);
        const double dark = ud(gen);
        const double t = ut(gen);
        if (bright <= dark) continue;
        const double f1 = fidelity_at_time(bright, dark, t);
        CHECK(fidelity_at_time(bright, dark, 2.0 * t) >= f1 - 1e-12);
        CHECK(fidelity_at_time(bright * 1.2, dark, t) >= f1 - 1e-12);
        CHECK(fidelity_at_time(bright, dark * 0.8, t) >= f1 - 1e-12);
    }
}

TEST_CASE("minimum integration time round trip") {
    std::mt19937_64 gen(52);
    std::uniform_real_distribution<double> ub(1e5, 1e7);
    std::uniform_real_distribution<double> uf(0.9, 0.9999);
    for (int i = 0; i < 25; ++i) {
        const double bright = ub(gen);
        const double dark = 1e3;
        const double target = uf(gen);
        const double t = min_integration_time(bright, dark, target);
        CHECK(fidelity_at_time(bright, dark, t) >= target);
        if (t > 1e-11) CHECK(fidelity_at_time(bright, dark, 0.9 * t) < target);
    }
}

TEST_CASE("detection-time claims hold as inequalities") {
    // 40% total efficiency on a 1e7/s scatterer: within 5 us
    CHECK(min_integration_time(0.40 * 1e7, 1e3, 0.99) <= 5e-6);
    // 1% efficiency (conventional collection): within 200 us
    CHECK(min_integration_time(0.01 * 1e7, 1e3, 0.99) <= 200e-6);
    // photodiode chain, 9% total efficiency: 1 ms integration clears 99%
    CHECK(fidelity_at_time(0.09 * 1e7, 1e3, 1e-3) > 0.99);
}

TEST_CASE("minimum time input validation") {
    CHECK_THROWS_AS(min_integration_time(1e6, 1e3, 0.5), DomainError);
    CHECK_THROWS_AS(min_integration_time(1e6, 1e3, 1.0), DomainError);
    CHECK_THROWS_AS(min_integration_time(1e3, 1e6, 0.99), NonDiscriminableError);
}

TEST_CASE("analog-mode gaussian fidelity") {
    // symmetric case: threshold midway, error = Q(separation / 2 sigma)
    const double f = analog_fidelity(1.0, 0.0, 0.25, 0.25);
    const double expected = 1.0 - 0.5 * std::erfc(2.0 / std::sqrt(2.0));
    CHECK_THAT(f, WithinAbs(expected, 1e-9));
    CHECK_THROWS_AS(analog_fidelity(0.0, 1.0, 0.1, 0.1), NonDiscriminableError);
    CHECK_THROWS_AS(analog_fidelity(1.0, 0.0, 0.0, 0.1), DomainError);
}
