#pragma once

#include <stdexcept>
#include <string>

// Physical constants (CODATA 2018) and photon/detector conversion helpers.
// Everything in the library is SI internally; pretty units (pA, pW, meV, MHz)
// exist only at the CLI formatting boundary.

namespace iontrap {

struct PhysicalConstants {
    double planck_constant   = 6.62607015e-34;   // J s (exact)
    double speed_of_light    = 299792458.0;      // m/s (exact)
    double elementary_charge = 1.602176634e-19;  // C (exact)
    double boltzmann_constant = 1.380649e-23;    // J/K (exact)
    double atomic_mass_unit  = 1.66053906660e-27; // kg
    double sr88_mass         = 87.9056 * 1.66053906660e-27; // kg
};

inline constexpr PhysicalConstants constants{};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Invalid configuration or scenario file content; carries the offending
// field as a JSON-pointer-style path.
struct ConfigError : std::runtime_error {
    std::string field_path;
    ConfigError(const std::string& msg, std::string path = "")
        : std::runtime_error(path.empty() ? msg : msg + " (at " + path + ")"),
          field_path(std::move(path)) {}
};

// Wavelength in meters, strictly positive.
struct Wavelength {
    double value; // m

    explicit Wavelength(double meters) : value(meters) {
        if (!(meters > 0.0))
            throw DomainError("Wavelength must be positive, got " + std::to_string(meters));
    }
};

inline Wavelength nm(double nanometers) { return Wavelength(nanometers * 1e-9); }

/// Photon energy h*c/lambda in joules.
inline double photon_energy(Wavelength lambda) {
    return constants.planck_constant * constants.speed_of_light / lambda.value;
}

/// Detector responsivity (A/W) -> quantum efficiency at the given wavelength.
inline double responsivity_to_qe(double amps_per_watt, Wavelength lambda) {
    if (amps_per_watt < 0.0)
        throw DomainError("responsivity must be non-negative");
    return amps_per_watt * photon_energy(lambda) / constants.elementary_charge;
}

/// Inverse of responsivity_to_qe.
inline double qe_to_responsivity(double quantum_efficiency, Wavelength lambda) {
    if (quantum_efficiency < 0.0)
        throw DomainError("quantum efficiency must be non-negative");
    return quantum_efficiency * constants.elementary_charge / photon_energy(lambda);
}

} // namespace iontrap
