#include <catch_amalgamated.hpp>

#include <random>

#include "iontrap/constants.hpp"

using namespace iontrap;
using Catch::Matchers::WithinRel;

TEST_CASE("constants table is internally consistent") {
    CHECK(constants.planck_constant > 0.0);
    CHECK(constants.speed_of_light > 0.0);
    CHECK(constants.elementary_charge > 0.0);
    CHECK(constants.atomic_mass_unit > 0.0);
    CHECK_THAT(constants.sr88_mass,
               WithinRel(87.9056 * constants.atomic_mass_unit, 1e-15));
}

TEST_CASE("photon energy reference values") {
    CHECK_THAT(photon_energy(nm(422)), WithinRel(4.707e-19, 5e-4));
    CHECK_THAT(photon_energy(nm(694)), WithinRel(2.862e-19, 5e-4));
    // halving the frequency halves the energy exactly
    CHECK_THAT(photon_energy(nm(844)), WithinRel(0.5 * photon_energy(nm(422)), 1e-15));
}

TEST_CASE("photon energy decreases with wavelength") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(50e-9, 5e-6);
    for (int i = 0; i < 200; ++i) {
        double a = u(gen), b = u(gen);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        CHECK(photon_energy(Wavelength(a)) > photon_energy(Wavelength(b)));
    }
}

TEST_CASE("responsivity to quantum efficiency") {
    CHECK_THAT(responsivity_to_qe(0.1, nm(422)), WithinRel(0.294, 2e-3));
    // consistency with the tabulated 30% within 2 percentage points
    CHECK(std::abs(responsivity_to_qe(0.1, nm(422)) - 0.30) < 0.02);
    CHECK(responsivity_to_qe(0.0, nm(422)) == 0.0);
    CHECK_THAT(responsivity_to_qe(0.01, nm(422)),
               WithinRel(0.1 * responsivity_to_qe(0.1, nm(422)), 1e-15));
}

TEST_CASE("responsivity round trip") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> ur(1e-4, 2.0);
    std::uniform_real_distribution<double> ul(100e-9, 2e-6);
    for (int i = 0; i < 200; ++i) {
        const double r = ur(gen);
        const Wavelength lambda(ul(gen));
        CHECK_THAT(qe_to_responsivity(responsivity_to_qe(r, lambda), lambda),
                   WithinRel(r, 1e-12));
    }
}

TEST_CASE("unit conversion domain errors") {
    CHECK_THROWS_AS(Wavelength(0.0), DomainError);
    CHECK_THROWS_AS(Wavelength(-1e-9), DomainError);
    CHECK_THROWS_AS(responsivity_to_qe(-0.1, nm(422)), DomainError);
    CHECK_THROWS_AS(qe_to_responsivity(-0.5, nm(422)), DomainError);
}
